"""Tests for Lebesgue, Sobolev and Lorentz norms and the Littlewood-Paley machinery."""

from __future__ import annotations

import math

import numpy as np
import pytest

from stokes_magneto import norms
from stokes_magneto.errors import ParameterRangeError
from stokes_magneto.fields import ModeSpec, field_from_modes, random_field
from stokes_magneto.norms import (
    BernsteinReport,
    LPBumpSpec,
    bernstein_ratios,
    bernstein_sweep,
    decreasing_rearrangement,
    inner_product,
    l2_norm_sq,
    lebesgue_norm,
    lorentz_constant,
    lorentz_weak_quasinorm,
    lp_block,
    lp_low,
    lp_square_function,
    norm_profile,
    partition_defect,
    sobolev_norm,
    stability_factor,
)
from stokes_magneto.spectral import GridSpec, forward_transform, fractional_laplacian, zeros


def test_constant_field_lebesgue(grid2: GridSpec) -> None:
    f = forward_transform(np.full(grid2.shape, -1.5), grid2)
    assert lebesgue_norm(f, 3.0) == pytest.approx(1.5 * grid2.volume ** (1 / 3), rel=1e-12)
    assert lebesgue_norm(f, math.inf) == pytest.approx(1.5)


def test_l2_agrees_with_plancherel(grid2: GridSpec, rng: np.random.Generator) -> None:
    f = random_field(grid2, rng, components=2, band=7 / grid2.L)
    assert lebesgue_norm(f, 2.0) ** 2 == pytest.approx(l2_norm_sq(f), rel=1e-10)
    assert inner_product(f, f) == pytest.approx(l2_norm_sq(f), rel=1e-14)


def test_sup_norm_of_cosine(unit_grid: GridSpec) -> None:
    f = field_from_modes(unit_grid, [ModeSpec(k=(1, 0))])
    assert lebesgue_norm(f, math.inf) == pytest.approx(1.0, abs=1e-14)


def test_lebesgue_exponent_checked(grid2: GridSpec) -> None:
    with pytest.raises(ParameterRangeError):
        lebesgue_norm(zeros(grid2), 0.5)


def test_sobolev_norm_of_eigenmode(grid2: GridSpec) -> None:
    f = field_from_modes(grid2, [ModeSpec(k=(2, 1), phase=-math.pi / 2)])
    l2 = math.sqrt(l2_norm_sq(f))
    assert l2 == pytest.approx(math.pi * math.sqrt(2), rel=1e-12)
    assert sobolev_norm(f, 1.5) == pytest.approx(5 ** 0.75 * l2, rel=1e-12)
    assert sobolev_norm(f, 0.0) == pytest.approx(l2)
    assert sobolev_norm(f, 0.0, homogeneous=False) == pytest.approx(l2)


@pytest.mark.parametrize("s", [1.0, 2.0])
def test_inhomogeneous_equivalence(s: float, unit_grid: GridSpec, rng: np.random.Generator) -> None:
    for _ in range(10):
        f = random_field(unit_grid, rng, band=6.0, zero_mean=False)
        full = sobolev_norm(f, s, homogeneous=False) ** 2
        split = l2_norm_sq(f) + sobolev_norm(f, s) ** 2
        ratio = full / split
        assert 1.0 - 1e-12 <= ratio <= 2.0 ** (s - 1) + 1e-12


def test_lorentz_quasinorm_of_indicator(grid2: GridSpec) -> None:
    samples = np.zeros(grid2.shape)
    samples[:4, :5] = 2.0
    f = forward_transform(samples, grid2)
    measure = 20 * grid2.cell_volume
    assert lorentz_weak_quasinorm(f, 3.0) == pytest.approx(2.0 * measure ** (1 / 3), rel=1e-12)


def test_lorentz_below_lebesgue(grid2: GridSpec, rng: np.random.Generator) -> None:
    for _ in range(5):
        f = random_field(grid2, rng, band=8 / grid2.L)
        assert lorentz_weak_quasinorm(f, 3.0) <= lebesgue_norm(f, 3.0) * (1 + 1e-12)
        assert lorentz_weak_quasinorm(2.0 * f, 3.0) == pytest.approx(
            2.0 * lorentz_weak_quasinorm(f, 3.0), rel=1e-12
        )


def test_rearrangement_is_nonincreasing(grid2: GridSpec, rng: np.random.Generator) -> None:
    breakpoints, values = decreasing_rearrangement(random_field(grid2, rng, band=5 / grid2.L))
    assert np.all(np.diff(values) <= 0)
    assert breakpoints[-1] == pytest.approx(grid2.volume)


def test_lorentz_constant_needs_energy(grid2: GridSpec) -> None:
    b = zeros(grid2, 2)
    assert lorentz_constant(b, b, 1.0) is None


def test_partition_of_unity() -> None:
    radii = np.linspace(0.0, 100.0, 20001)
    inhomogeneous, homogeneous = partition_defect(LPBumpSpec(), radii)
    assert inhomogeneous < 1e-10
    assert homogeneous < 1e-10


def test_blocks_reconstruct_field(unit_grid: GridSpec, rng: np.random.Generator) -> None:
    f = random_field(unit_grid, rng, band=6.0)
    homogeneous = sum((lp_block(f, j) for j in range(-4, 7)), start=zeros(unit_grid))
    np.testing.assert_allclose(homogeneous.coeffs, f.coeffs, atol=1e-12)
    g = random_field(unit_grid, rng, band=6.0, zero_mean=False)
    inhomogeneous = sum((lp_block(g, j) for j in range(0, 7)), start=lp_low(g, 0))
    np.testing.assert_allclose(inhomogeneous.coeffs, g.coeffs, atol=1e-12)


def test_block_support_of_unit_frequency(unit_grid: GridSpec) -> None:
    f = field_from_modes(unit_grid, [ModeSpec(k=(1, 0))])
    active = [j for j in range(-4, 5) if np.max(np.abs(lp_block(f, j).coeffs)) > 0]
    assert active == [-1, 0]


def test_blocks_commute_with_lambda(unit_grid: GridSpec, rng: np.random.Generator) -> None:
    f = random_field(unit_grid, rng, band=6.0)
    left = lp_block(fractional_laplacian(f, 0.7), 1)
    right = fractional_laplacian(lp_block(f, 1), 0.7)
    np.testing.assert_allclose(left.coeffs, right.coeffs, atol=1e-12)


def test_square_function_equals_l2_at_order_zero(
    unit_grid: GridSpec, rng: np.random.Generator
) -> None:
    f = random_field(unit_grid, rng, band=6.0)
    square = lp_square_function(f, 0.0, -4, 6)
    assert 0.5 * l2_norm_sq(f) <= square <= l2_norm_sq(f) * (1 + 1e-12)


def test_bernstein_ratio_of_single_mode(unit_grid: GridSpec) -> None:
    u = field_from_modes(unit_grid, [ModeSpec(k=(4, 0))])
    ratio, equivalence = bernstein_ratios(u, 2, 2.0, 2.0, 1)
    assert ratio == pytest.approx(2 * math.pi, rel=1e-12)
    assert equivalence == pytest.approx(2 * math.pi, rel=1e-12)


def test_bernstein_skips_zero_field(unit_grid: GridSpec) -> None:
    assert bernstein_ratios(zeros(unit_grid), 1, 2.0, 2.0, 1) is None


def test_bernstein_exponent_order(unit_grid: GridSpec) -> None:
    with pytest.raises(ParameterRangeError):
        bernstein_ratios(zeros(unit_grid), 1, 4.0, 2.0, 1)


def test_bernstein_stability_over_scales(rng: np.random.Generator) -> None:
    grid = GridSpec(d=2, M=96, L=1.0)
    sweep = bernstein_sweep(grid, [0, 1, 2, 3, 4], 2.0, 2.0, 1, 3, rng)
    assert sweep.passed
    assert sweep.stability is not None
    assert sweep.stability <= 10.0
    assert all(r.degenerate == 0 for r in sweep.reports)


def _flat_report(j: int, ratio: float) -> BernsteinReport:
    return BernsteinReport(
        j=j,
        p=2.0,
        q=4.0,
        k=1,
        trials=1,
        degenerate=0,
        ratio_min=ratio,
        ratio_max=ratio,
        equivalence_min=1.0,
        equivalence_max=1.0,
    )


def test_drifting_q_ratio_is_unstable() -> None:
    reports = [_flat_report(j, 10.0**j) for j in range(3)]
    assert stability_factor(reports) == pytest.approx(100.0)
    assert stability_factor([_flat_report(j, 2.0) for j in range(3)]) == pytest.approx(1.0)


def test_missing_ratios_give_no_stability_factor() -> None:
    empty = BernsteinReport(j=0, p=2.0, q=2.0, k=1, trials=1, degenerate=1)
    assert stability_factor([empty]) is None


def test_bernstein_sweep_reports_q_ratio_drift(
    rng: np.random.Generator, monkeypatch: pytest.MonkeyPatch
) -> None:
    def drifting_check(grid: GridSpec, j: int, *args: object) -> BernsteinReport:
        return _flat_report(j, 4.0**j)

    monkeypatch.setattr(norms, "bernstein_check", drifting_check)
    sweep = bernstein_sweep(GridSpec(d=2, M=32, L=1.0), [0, 1, 2], 2.0, 4.0, 1, 1, rng)
    assert sweep.stability == pytest.approx(16.0)
    assert not sweep.passed


def test_norm_profile_names_and_values(grid2: GridSpec, rng: np.random.Generator) -> None:
    f = random_field(grid2, rng, band=6 / grid2.L)
    profile = norm_profile(f, [1.0, 2.0, 4.0], [2.0])
    assert [r.norm_name for r in profile] == ["L^1", "L^2", "L^4", "L^{2,inf}"]
    assert profile[1].value == pytest.approx(lebesgue_norm(f, 2.0))
    assert profile[3].value == pytest.approx(lorentz_weak_quasinorm(f, 2.0))
    assert profile[3].parameters == {"p": 2.0}
    # ||f||_{2,inf} <= ||f||_2
    assert profile[3].value <= profile[1].value * (1 + 1e-12)


def test_norm_profile_rejects_bad_orders(grid2: GridSpec, rng: np.random.Generator) -> None:
    f = random_field(grid2, rng, band=6 / grid2.L)
    with pytest.raises(ParameterRangeError):
        norm_profile(f, [0.5], [])
    with pytest.raises(ParameterRangeError):
        norm_profile(f, [], [math.inf])
