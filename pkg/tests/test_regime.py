"""Tests for regime classification and product-estimate exponent selection."""

from __future__ import annotations

import itertools

import pytest

from stokes_magneto.errors import ParameterRangeError
from stokes_magneto.suites.regime import classify_regime, exponent_search, feasible_interval


def test_three_dimensional_harmonic_point() -> None:
    report = classify_regime(3, 1.0, 1.0)
    assert report.existence
    assert not report.uniqueness
    assert report.margins == pytest.approx(
        {
            "alpha_lower": 0.5,
            "alpha_upper": 1.0,
            "beta_positive": 1.0,
            "existence": 0.5,
            "beta_uniqueness": 0.0,
            "uniqueness": -0.5,
        }
    )
    assert report.remark_cases == ["a", "b", "c"]
    assert report.remark_uniqueness == {"a": False, "b": False, "c": False}


def test_two_dimensional_harmonic_point() -> None:
    report = classify_regime(2, 1.0, 1.0)
    assert report.existence
    assert report.uniqueness
    assert report.margins["existence"] == pytest.approx(1.0)
    assert report.margins["uniqueness"] == pytest.approx(0.0)
    assert report.remark_cases == ["a", "b", "c"]
    assert all(report.remark_uniqueness.values())


def test_point_outside_every_regime() -> None:
    report = classify_regime(2, 0.75, 0.25)
    assert not report.existence
    assert not report.uniqueness
    assert report.margins["existence"] == pytest.approx(-0.25)
    assert report.margins["uniqueness"] == pytest.approx(-1.25)
    assert report.remark_cases == []
    assert report.remark_uniqueness == {}


def test_alpha_band_is_open() -> None:
    assert not classify_regime(2, 0.5, 5.0).existence
    assert not classify_regime(2, 1.5, 5.0).existence
    assert classify_regime(2, 1.4, 5.0).uniqueness


def test_uniqueness_implies_existence_on_sweep() -> None:
    values = [0.25 * i for i in range(1, 13)]
    for d, alpha, beta in itertools.product([2, 3, 4], values, values):
        report = classify_regime(d, alpha, beta)
        if report.uniqueness:
            assert report.existence, (d, alpha, beta)


@pytest.mark.parametrize(("d", "alpha", "beta"), [(1, 1.0, 1.0), (2, 0.0, 1.0), (2, 1.0, -1.0)])
def test_classify_rejects_bad_parameters(d: int, alpha: float, beta: float) -> None:
    with pytest.raises(ParameterRangeError):
        classify_regime(d, alpha, beta)


def test_exponents_at_two_dimensional_point() -> None:
    selection = exponent_search(2, 1.0, 1.0)
    assert selection.p == pytest.approx(4.0)
    assert selection.p_upper is None
    assert selection.theta1 == pytest.approx(0.5)
    assert selection.theta2 == pytest.approx(0.5)
    assert selection.relation_defect() < 1e-12
    assert all(margin > 0 for margin in selection.inequalities().values())
    assert selection.slack_guaranteed


def test_exponents_with_bounded_interval() -> None:
    selection = exponent_search(3, 1.0, 2.0)
    assert (selection.p_lower, selection.p_upper) == pytest.approx((2.0, 6.0))
    assert selection.p == pytest.approx(4.0)
    assert selection.theta1 == pytest.approx(5 / 6)
    assert selection.theta2 == pytest.approx(3 / 8)
    assert selection.relation_defect() < 1e-12


def test_exponents_with_unbounded_interval() -> None:
    assert feasible_interval(2, 1.2, 0.5) == (4.0, None)
    assert exponent_search(2, 1.2, 0.5).p == pytest.approx(8.0)


def test_explicit_exponent_must_be_feasible() -> None:
    assert exponent_search(3, 1.0, 2.0, p=5.0).p == 5.0
    with pytest.raises(ParameterRangeError):
        exponent_search(3, 1.0, 2.0, p=6.0)
    with pytest.raises(ParameterRangeError):
        exponent_search(2, 1.0, 1.0, p=2.0)


@pytest.mark.parametrize(
    ("d", "alpha", "beta", "mu"),
    [(2, 0.5, 1.0, 0.0), (3, 2.0, 1.0, 0.0), (3, 0.75, 0.5, 0.0), (2, 1.0, 1.0, 1.5)],
)
def test_exponent_search_rejects(d: int, alpha: float, beta: float, mu: float) -> None:
    with pytest.raises(ParameterRangeError):
        exponent_search(d, alpha, beta, mu)
