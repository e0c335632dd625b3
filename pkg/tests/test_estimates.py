"""Tests for the empirical interpolation and product inequalities."""

from __future__ import annotations

import numpy as np
import pytest

from stokes_magneto.errors import IndexRelationError
from stokes_magneto.spectral import GridSpec
from stokes_magneto.suites.estimates import (
    EstimateReport,
    commutator_check,
    dual_product_check,
    gagliardo_check,
    heat_interpolation_check,
    lp_sobolev_comparison,
    product_estimate_check,
    resolution_doubling,
    sobolev_lorentz_check,
    validate_gagliardo,
    validate_sobolev_lorentz,
)
from stokes_magneto.suites.regime import exponent_search


def _fresh(seed: int = 7) -> np.random.Generator:
    return np.random.default_rng(seed)


def test_product_ratio_stable_under_refinement() -> None:
    selection = exponent_search(2, 1.0, 1.0)
    doubling = resolution_doubling(
        "product",
        lambda grid: product_estimate_check(grid, selection, 5, _fresh()),
        GridSpec(d=2, M=32, L=1.0),
    )
    assert doubling.passed
    assert doubling.growth is not None
    assert doubling.growth < 2.0
    assert doubling.coarse.skipped == 0
    assert doubling.fine.parameters["M"] == 64


def test_gagliardo_ratio_bounded(unit_grid: GridSpec) -> None:
    report = gagliardo_check(unit_grid, 0.0, 1.0, 4.0, 2.0, 0.5, 10, _fresh())
    assert report.trials == 10
    assert report.skipped == 0
    assert report.max_ratio is not None
    assert 0 < report.min_ratio <= report.max_ratio < 10.0


def test_gagliardo_index_relation() -> None:
    validate_gagliardo(2, 0.0, 1.0, 4.0, 2.0, 0.5)
    with pytest.raises(IndexRelationError):
        validate_gagliardo(2, 0.0, 1.0, 4.0, 2.0, 0.4)
    with pytest.raises(IndexRelationError):
        validate_gagliardo(2, 1.0, 1.0, 4.0, 2.0, 0.5)
    with pytest.raises(IndexRelationError):
        validate_gagliardo(3, 0.5, 1.0, 4.0, 2.0, 0.25)


def test_heat_interpolation_is_sharp(unit_grid: GridSpec) -> None:
    report = heat_interpolation_check(unit_grid, 2.0, 10, _fresh())
    assert report.name == "heat_interpolation"
    assert report.max_ratio is not None
    assert report.max_ratio <= 1.0 + 1e-9
    with pytest.raises(IndexRelationError):
        heat_interpolation_check(unit_grid, 1.0, 1, _fresh())


def test_sobolev_lorentz_ratio_bounded(unit_grid: GridSpec) -> None:
    report = sobolev_lorentz_check(unit_grid, 1.0, 4.0, 2.0, 0.5, 10, _fresh())
    assert report.max_ratio is not None
    assert report.max_ratio < 10.0


def test_sobolev_lorentz_rejects_critical_exponent() -> None:
    with pytest.raises(IndexRelationError):
        validate_sobolev_lorentz(4, 1.0, 4.0, 4.0, 0.5)
    with pytest.raises(IndexRelationError):
        validate_sobolev_lorentz(2, 1.0, 3.0, 2.0, 0.5)


def test_commutator_ratio_bounded(unit_grid: GridSpec) -> None:
    report = commutator_check(unit_grid, 1.0, 1.5, 10, _fresh())
    assert report.max_ratio is not None
    assert report.max_ratio < 10.0
    with pytest.raises(IndexRelationError):
        commutator_check(unit_grid, 1.0, 1.0, 1, _fresh())
    with pytest.raises(IndexRelationError):
        commutator_check(unit_grid, 2.0, 1.5, 1, _fresh())


def test_dual_product_hypotheses(unit_grid: GridSpec) -> None:
    report = dual_product_check(unit_grid, 1.5, 1.0, 5, _fresh())
    assert report.skipped == 0
    with pytest.raises(IndexRelationError):
        dual_product_check(unit_grid, 0.5, 0.5, 1, _fresh())


def test_lp_square_function_comparable(unit_grid: GridSpec) -> None:
    report = lp_sobolev_comparison(unit_grid, 1.0, 10, _fresh())
    assert report.min_ratio is not None
    assert 1e-3 < report.min_ratio <= report.max_ratio < 0.05


def test_report_metrics() -> None:
    report = EstimateReport(
        name="x", parameters={}, trials=3, skipped=1, max_ratio=2.0, min_ratio=1.0, ratios=[1, 2]
    )
    assert report.metrics() == {"trials": 3.0, "skipped": 1.0, "max_ratio": 2.0, "min_ratio": 1.0}
    empty = EstimateReport(
        name="x", parameters={}, trials=2, skipped=2, max_ratio=None, min_ratio=None, ratios=[]
    )
    assert empty.metrics() == {"trials": 2.0, "skipped": 2.0}
