"""Empirical checks of the interpolation and product inequalities.

Every check draws band-limited random fields, evaluates the ratio of the two
sides of one inequality per trial and reports the extremes. The implicit
constants are not known, so the operational test is stability: the largest
ratio must not grow when the grid is refined.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel

from ..errors import IndexRelationError
from ..fields import random_field
from ..norms import (
    LPBumpSpec,
    l2_norm_sq,
    lebesgue_norm,
    lorentz_weak_quasinorm,
    lp_square_function,
    sobolev_norm,
)
from ..spectral import (
    GridSpec,
    SpectralField,
    TruncationSpec,
    alias_safe_product,
    fractional_laplacian,
)
from .regime import ExponentSelection

RELATION_TOLERANCE = 1e-12
GROWTH_BUDGET = 2.0


class EstimateReport(BaseModel):
    name: str
    parameters: dict[str, float]
    trials: int
    skipped: int
    max_ratio: float | None
    min_ratio: float | None
    ratios: list[float]

    def metrics(self) -> dict[str, float]:
        out = {"trials": float(self.trials), "skipped": float(self.skipped)}
        if self.max_ratio is not None and self.min_ratio is not None:
            out["max_ratio"] = self.max_ratio
            out["min_ratio"] = self.min_ratio
        return out


class DoublingReport(BaseModel):
    name: str
    coarse: EstimateReport
    fine: EstimateReport
    growth: float | None
    passed: bool


def _summarize(
    name: str, parameters: dict[str, float], trials: int, measured: list[float | None]
) -> EstimateReport:
    ratios = [r for r in measured if r is not None]
    return EstimateReport(
        name=name,
        parameters=parameters,
        trials=trials,
        skipped=trials - len(ratios),
        max_ratio=max(ratios) if ratios else None,
        min_ratio=min(ratios) if ratios else None,
        ratios=ratios,
    )


def _ratio(lhs: float, rhs: float) -> float | None:
    if rhs == 0.0:
        return None
    return lhs / rhs


def _product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Exact product of two band-limited fields."""
    band = f.support_radius() + g.support_radius()
    return alias_safe_product(f, g, TruncationSpec(R=max(band, 1.0 / f.grid.L)))


def resolution_doubling(
    name: str, run: Callable[[GridSpec], EstimateReport], grid: GridSpec
) -> DoublingReport:
    """Run a check on grid and on the grid with twice the points per axis."""
    coarse = run(grid)
    fine = run(GridSpec(d=grid.d, M=2 * grid.M, L=grid.L))
    growth = None
    if coarse.max_ratio and fine.max_ratio is not None:
        growth = fine.max_ratio / coarse.max_ratio
    passed = growth is not None and growth < GROWTH_BUDGET
    return DoublingReport(name=name, coarse=coarse, fine=fine, growth=growth, passed=passed)


def product_ratio(f: SpectralField, g: SpectralField, selection: ExponentSelection) -> float | None:
    """||fg||_2 over the interpolated right-hand side of the product estimate."""
    a, b = selection.alpha, selection.beta
    t1, t2 = selection.theta1, selection.theta2
    q = f.d / (f.d + 1 - 2 * a)
    lhs = math.sqrt(l2_norm_sq(_product(f, g)))
    rhs = (
        lorentz_weak_quasinorm(f, q) ** (1 - t1)
        * sobolev_norm(f, a) ** t1
        * math.sqrt(l2_norm_sq(g)) ** (1 - t2)
        * sobolev_norm(g, b) ** t2
    )
    return _ratio(lhs, rhs)


def product_estimate_check(
    grid: GridSpec,
    selection: ExponentSelection,
    trials: int,
    rng: np.random.Generator,
    band: float = 6.0,
    sigma: float = 1.0,
) -> EstimateReport:
    measured = []
    for _ in range(trials):
        f = random_field(grid, rng, band=band, sigma=sigma)
        g = random_field(grid, rng, band=band, sigma=sigma)
        measured.append(product_ratio(f, g, selection))
    parameters = {
        "d": grid.d,
        "M": grid.M,
        "alpha": selection.alpha,
        "beta": selection.beta,
        "p": selection.p,
        "theta1": selection.theta1,
        "theta2": selection.theta2,
    }
    return _summarize("product", parameters, trials, measured)


def validate_gagliardo(d: int, s0: float, s: float, p: float, p1: float, theta: float) -> None:
    if not 0 <= s0 < s:
        raise IndexRelationError(f"need 0 <= s0 < s, got s0={s0}, s={s}")
    if not (1 < p < math.inf and 1 < p1 < math.inf):
        raise IndexRelationError(f"need 1 < p, p1 < inf, got p={p}, p1={p1}")
    if not 0 < theta < 1:
        raise IndexRelationError(f"theta must lie in (0, 1), got {theta}")
    if theta < s0 / s - RELATION_TOLERANCE:
        raise IndexRelationError(f"theta={theta} below s0/s={s0 / s}")
    lhs = 1 / p - s0 / d
    rhs = (1 - theta) / p1 + theta * (0.5 - s / d)
    if abs(lhs - rhs) > RELATION_TOLERANCE:
        raise IndexRelationError(f"scaling relation fails: {lhs} != {rhs}")


def gagliardo_check(
    grid: GridSpec,
    s0: float,
    s: float,
    p: float,
    p1: float,
    theta: float,
    trials: int,
    rng: np.random.Generator,
    band: float = 6.0,
    sigma: float = 1.0,
    name: str = "gagliardo",
) -> EstimateReport:
    """||Lambda^{s0} f||_p / (||f||_{p1}^{1-theta} ||Lambda^s f||_2^theta)."""
    validate_gagliardo(grid.d, s0, s, p, p1, theta)
    measured = []
    for _ in range(trials):
        f = random_field(grid, rng, band=band, sigma=sigma)
        lhs = lebesgue_norm(fractional_laplacian(f, s0), p)
        rhs = lebesgue_norm(f, p1) ** (1 - theta) * sobolev_norm(f, s) ** theta
        measured.append(_ratio(lhs, rhs))
    parameters = {"d": grid.d, "M": grid.M, "s0": s0, "s": s, "p": p, "p1": p1, "theta": theta}
    return _summarize(name, parameters, trials, measured)


def heat_interpolation_check(
    grid: GridSpec, beta: float, trials: int, rng: np.random.Generator, band: float = 6.0
) -> EstimateReport:
    """||Lambda f||_2 <= ||f||_2^{1 - 1/beta} ||Lambda^beta f||_2^{1/beta}, constant 1."""
    if beta <= 1:
        raise IndexRelationError(f"the heat interpolation needs beta > 1, got {beta}")
    return gagliardo_check(
        grid, 1.0, beta, 2.0, 2.0, 1.0 / beta, trials, rng, band=band, name="heat_interpolation"
    )


def validate_sobolev_lorentz(d: int, s: float, p: float, p1: float, theta: float) -> None:
    if s <= 0:
        raise IndexRelationError(f"need s > 0, got {s}")
    if not (1 < p < math.inf and 1 < p1 < math.inf):
        raise IndexRelationError(f"need 1 < p, p1 < inf, got p={p}, p1={p1}")
    if not 0 < theta < 1:
        raise IndexRelationError(f"theta must lie in (0, 1), got {theta}")
    critical = 0.5 - s / d
    if abs(1 / p1 - critical) <= RELATION_TOLERANCE:
        raise IndexRelationError(f"1/p1 = {1 / p1} equals the critical value 1/2 - s/d")
    rhs = (1 - theta) / p1 + theta * critical
    if abs(1 / p - rhs) > RELATION_TOLERANCE:
        raise IndexRelationError(f"scaling relation fails: {1 / p} != {rhs}")


def sobolev_lorentz_check(
    grid: GridSpec,
    s: float,
    p: float,
    p1: float,
    theta: float,
    trials: int,
    rng: np.random.Generator,
    band: float = 6.0,
    sigma: float = 1.0,
) -> EstimateReport:
    """||f||_p / (||f||_{p1,inf}^{1-theta} ||Lambda^s f||_2^theta).

    The left side is the L^p norm, which the L^{p,1} quasinorm dominates.
    """
    validate_sobolev_lorentz(grid.d, s, p, p1, theta)
    measured = []
    for _ in range(trials):
        f = random_field(grid, rng, band=band, sigma=sigma)
        lhs = lebesgue_norm(f, p)
        rhs = lorentz_weak_quasinorm(f, p1) ** (1 - theta) * sobolev_norm(f, s) ** theta
        measured.append(_ratio(lhs, rhs))
    parameters = {"d": grid.d, "M": grid.M, "s": s, "p": p, "p1": p1, "theta": theta}
    return _summarize("sobolev_lorentz", parameters, trials, measured)


def commutator_check(
    grid: GridSpec,
    s: float,
    gamma: float,
    trials: int,
    rng: np.random.Generator,
    band: float = 6.0,
    sigma_f: float = 0.5,
    sigma_g: float = 2.0,
) -> EstimateReport:
    """||Lambda^s(fg)||_2 / (||f||_{H^s} ||g||_{H^gamma}) with inhomogeneous norms."""
    if gamma <= grid.d / 2:
        raise IndexRelationError(f"need gamma > d/2, got gamma={gamma}")
    if not 0 < s <= gamma:
        raise IndexRelationError(f"need 0 < s <= gamma, got s={s}")
    measured = []
    for _ in range(trials):
        f = random_field(grid, rng, band=band, sigma=sigma_f, zero_mean=False)
        g = random_field(grid, rng, band=band, sigma=sigma_g, zero_mean=False)
        lhs = sobolev_norm(_product(f, g), s)
        rhs = sobolev_norm(f, s, homogeneous=False) * sobolev_norm(g, gamma, homogeneous=False)
        measured.append(_ratio(lhs, rhs))
    parameters = {"d": grid.d, "M": grid.M, "s": s, "gamma": gamma}
    return _summarize("commutator", parameters, trials, measured)


def validate_dual_product(d: int, alpha: float, beta: float) -> None:
    first = alpha < 1 and beta > d / 2 and alpha + beta >= 1
    second = 1 <= alpha < d / 2 + 1 and alpha + 2 * beta >= d / 2 + 1
    if not (first or second):
        raise IndexRelationError(
            f"(alpha, beta) = ({alpha}, {beta}) meets neither hypothesis set in d={d}"
        )


def dual_product_check(
    grid: GridSpec,
    alpha: float,
    beta: float,
    trials: int,
    rng: np.random.Generator,
    band: float = 6.0,
    sigma: float = 1.0,
) -> EstimateReport:
    """||fg||_{H^{1-alpha}} / (||f||_{H^beta} ||g||_{H^beta}), homogeneous on the left."""
    validate_dual_product(grid.d, alpha, beta)
    measured = []
    for _ in range(trials):
        f = random_field(grid, rng, band=band, sigma=sigma, zero_mean=False)
        g = random_field(grid, rng, band=band, sigma=sigma, zero_mean=False)
        product = fractional_laplacian(_product(f, g), 1 - alpha, zero_mode="annihilate")
        lhs = math.sqrt(l2_norm_sq(product))
        rhs = sobolev_norm(f, beta, homogeneous=False) * sobolev_norm(g, beta, homogeneous=False)
        measured.append(_ratio(lhs, rhs))
    parameters = {"d": grid.d, "M": grid.M, "alpha": alpha, "beta": beta}
    return _summarize("dual_product", parameters, trials, measured)


def lp_sobolev_comparison(
    grid: GridSpec,
    s: float,
    trials: int,
    rng: np.random.Generator,
    band: float = 6.0,
    sigma: float = 1.0,
    bumps: LPBumpSpec | None = None,
) -> EstimateReport:
    """sum_j 2^{2js} ||Delta_j f||_2^2 / ||Lambda^s f||_2^2 over zero-mean fields."""
    j_min = math.floor(math.log2(1.0 / grid.L)) - 3
    j_max = math.ceil(math.log2(band)) + 3
    measured = []
    for _ in range(trials):
        f = random_field(grid, rng, band=band, sigma=sigma)
        lhs = lp_square_function(f, s, j_min, j_max, bumps)
        measured.append(_ratio(lhs, sobolev_norm(f, s) ** 2))
    parameters = {"d": grid.d, "M": grid.M, "s": s, "j_min": j_min, "j_max": j_max}
    return _summarize("lp_sobolev", parameters, trials, measured)
