"""Function-space norms and Littlewood-Paley machinery on the torus.

L^p norms are Riemann sums over the grid cells (cell volume (L/M)^d), so the
L^infinity norm is the grid maximum. L^2 quantities are also available via
Plancherel, ||f||_2^2 = L^d sum_k |c(k)|^2, which is exact for the stored
coefficients.
"""

from __future__ import annotations

import itertools
import math
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ParameterRangeError, PreconditionError
from .fields import random_field
from .spectral import (
    GridSpec,
    SpectralField,
    check_compatible,
    fractional_laplacian,
    inverse_transform,
    mode_norm,
    spectral_derivative,
)


class NormReport(BaseModel):
    norm_name: str
    parameters: dict[str, Any]
    value: float


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """Real L^2 inner product summed over components."""
    check_compatible(f, g)
    return float(f.grid.volume * np.sum(np.real(np.conj(f.coeffs) * g.coeffs)))


def l2_norm_sq(f: SpectralField) -> float:
    return float(f.grid.volume * np.sum(np.abs(f.coeffs) ** 2))


def pointwise_magnitude(f: SpectralField) -> np.ndarray:
    """Euclidean magnitude over components at every grid node."""
    if not f.real_valued:
        raise PreconditionError("norms are defined for real-valued fields")
    values = inverse_transform(f)
    if f.c == 1:
        return np.abs(values[0])
    return np.sqrt(np.sum(values**2, axis=0))


def lebesgue_norm(f: SpectralField, p: float) -> float:
    if p < 1:
        raise ParameterRangeError(f"L^p needs p >= 1, got {p}")
    magnitude = pointwise_magnitude(f)
    if math.isinf(p):
        return float(magnitude.max())
    return float((f.grid.cell_volume * np.sum(magnitude**p)) ** (1.0 / p))


def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = True) -> float:
    """||Lambda^s f||_2, or the H^s norm with multiplier (1 + 4 pi^2 |k/L|^2)^(s/2)."""
    if homogeneous:
        return math.sqrt(l2_norm_sq(fractional_laplacian(f, s)))
    xi = mode_norm(f.grid) / f.grid.L
    weight = (1.0 + 4.0 * np.pi**2 * xi**2) ** (s / 2.0)
    return math.sqrt(l2_norm_sq(f.with_coeffs(f.coeffs * weight)))


def decreasing_rearrangement(f: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints t_i = (i+1)*w and values of f* on [i*w, (i+1)*w)."""
    values = np.sort(pointwise_magnitude(f).ravel())[::-1]
    w = f.grid.cell_volume
    breakpoints = w * np.arange(1, values.size + 1)
    return breakpoints, values


def lorentz_weak_quasinorm(f: SpectralField, p: float) -> float:
    """sup_t t^(1/p) f*(t), attained in the limit at the right end of each step."""
    if not 1 <= p < math.inf:
        raise ParameterRangeError(f"weak Lorentz quasinorm needs 1 <= p < inf, got {p}")
    breakpoints, values = decreasing_rearrangement(f)
    return float(np.max(breakpoints ** (1.0 / p) * values))


def norm_profile(
    f: SpectralField, p_values: list[float], lorentz_p_values: list[float]
) -> list[NormReport]:
    """L^p norms for each p, then weak-Lorentz quasinorms ||f||_{p,inf}."""
    reports = [
        NormReport(norm_name=f"L^{p:g}", parameters={"p": p}, value=lebesgue_norm(f, p))
        for p in p_values
    ]
    reports.extend(
        NormReport(
            norm_name=f"L^{{{p:g},inf}}",
            parameters={"p": p},
            value=lorentz_weak_quasinorm(f, p),
        )
        for p in lorentz_p_values
    )
    return reports


def lorentz_constant(u: SpectralField, b: SpectralField, alpha: float) -> float | None:
    """||u||_{d/(d+1-2 alpha), inf} / ||b||_2^2, None when b vanishes."""
    energy = l2_norm_sq(b)
    if energy == 0.0:
        return None
    p = u.d / (u.d + 1 - 2 * alpha)
    return lorentz_weak_quasinorm(u, p) / energy


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """0 for t <= 0, 1 for t >= 1, C-infinity in between."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        s = 1.0 - t
        b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return a / (a + b)


class LPBumpSpec(BaseModel):
    """Radial Littlewood-Paley profiles.

    chi equals 1 on [0, inner] and 0 beyond outer; psi = chi and
    phi(r) = chi(r/2) - chi(r), so with the defaults psi lives in the ball of
    radius 4/3 and phi in the annulus 3/4 <= r <= 8/3, and the dyadic sums
    telescope to exactly 1.
    """

    model_config = ConfigDict(frozen=True)

    inner: float = Field(default=0.75, gt=0)
    outer: float = Field(default=4.0 / 3.0, gt=0)

    @model_validator(mode="after")
    def _validate_order(self) -> LPBumpSpec:
        if self.inner >= self.outer:
            raise ValueError("inner radius must be smaller than outer radius")
        return self

    def chi(self, r: np.ndarray) -> np.ndarray:
        return 1.0 - _smooth_step((np.asarray(r) - self.inner) / (self.outer - self.inner))

    def psi(self, r: np.ndarray) -> np.ndarray:
        return self.chi(r)

    def phi(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r)
        return self.chi(r / 2.0) - self.chi(r)


def _frequency_norm(grid: GridSpec) -> np.ndarray:
    return mode_norm(grid) / grid.L


def lp_block(f: SpectralField, j: int, bumps: LPBumpSpec | None = None) -> SpectralField:
    """Delta_j f: multiplier phi(2^-j xi)."""
    bumps = bumps or LPBumpSpec()
    return f.with_coeffs(f.coeffs * bumps.phi(_frequency_norm(f.grid) * 2.0**-j))


def lp_low(f: SpectralField, j: int, bumps: LPBumpSpec | None = None) -> SpectralField:
    """S_j f: multiplier psi(2^-j xi)."""
    bumps = bumps or LPBumpSpec()
    return f.with_coeffs(f.coeffs * bumps.psi(_frequency_norm(f.grid) * 2.0**-j))


def lp_square_function(
    f: SpectralField, s: float, j_min: int, j_max: int, bumps: LPBumpSpec | None = None
) -> float:
    """sum_{j_min <= j <= j_max} 2^(2js) ||Delta_j f||_2^2."""
    return sum(
        2.0 ** (2 * j * s) * l2_norm_sq(lp_block(f, j, bumps)) for j in range(j_min, j_max + 1)
    )


def partition_defect(
    bumps: LPBumpSpec, radii: np.ndarray, depth: int = 48
) -> tuple[float, float]:
    """Pointwise defects of psi + sum_{j>=0} phi(2^-j .) = 1 and sum_j phi(2^-j .) = 1.

    The homogeneous sum is evaluated at the positive radii only.
    """
    radii = np.asarray(radii, dtype=float)
    inhomogeneous = bumps.psi(radii) + sum(bumps.phi(radii * 2.0**-j) for j in range(depth + 1))
    positive = radii[radii > 0]
    homogeneous = sum(bumps.phi(positive * 2.0**-j) for j in range(-depth, depth + 1))
    return (
        float(np.max(np.abs(inhomogeneous - 1.0), initial=0.0)),
        float(np.max(np.abs(homogeneous - 1.0), initial=0.0)),
    )


def derivative_norm(u: SpectralField, k: int, p: float) -> float:
    """max over multi-indices |gamma| = k of ||d^gamma u||_p."""
    best = 0.0
    for gamma in itertools.combinations_with_replacement(range(u.d), k):
        v = u
        for axis in gamma:
            v = spectral_derivative(v, axis)
        best = max(best, lebesgue_norm(v, p))
    return best


class BernsteinReport(BaseModel):
    j: int
    p: float
    q: float
    k: int
    trials: int
    degenerate: int
    ratio_min: float | None = None
    ratio_max: float | None = None
    equivalence_min: float | None = None
    equivalence_max: float | None = None


class BernsteinSweep(BaseModel):
    reports: list[BernsteinReport]
    stability: float | None
    passed: bool


def _validate_exponents(p: float, q: float) -> None:
    if not 1 <= p <= q:
        raise ParameterRangeError(f"Bernstein check needs 1 <= p <= q, got p={p}, q={q}")


def bernstein_ratios(
    u: SpectralField, j: int, p: float, q: float, k: int
) -> tuple[float, float] | None:
    """Ratios ||D^k u||_q / (2^{j(k + d(1/p - 1/q))} ||u||_p) and
    ||D^k u||_p / (2^{jk} ||u||_p); None for the zero field."""
    _validate_exponents(p, q)
    base = lebesgue_norm(u, p)
    if base == 0.0:
        return None
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    scale = 2.0 ** (j * (k + u.d * (1.0 / p - inv_q)))
    ratio = derivative_norm(u, k, q) / (scale * base)
    equivalence = derivative_norm(u, k, p) / (2.0 ** (j * k) * base)
    return ratio, equivalence


def bernstein_check(
    grid: GridSpec,
    j: int,
    p: float,
    q: float,
    k: int,
    trials: int,
    rng: np.random.Generator,
    bumps: LPBumpSpec | None = None,
    sigma: float = 1.0,
) -> BernsteinReport:
    """Measure Bernstein ratios on random fields in the dyadic annulus of scale 2^j."""
    _validate_exponents(p, q)
    bumps = bumps or LPBumpSpec()
    inner = bumps.inner * 2.0**j
    outer = 2.0 * bumps.outer * 2.0**j
    ratios: list[float] = []
    equivalences: list[float] = []
    degenerate = 0
    for _ in range(trials):
        u = random_field(grid, rng, band=outer, inner=inner, sigma=sigma)
        measured = bernstein_ratios(u, j, p, q, k)
        if measured is None:
            degenerate += 1
            continue
        ratios.append(measured[0])
        equivalences.append(measured[1])
    report = BernsteinReport(j=j, p=p, q=q, k=k, trials=trials, degenerate=degenerate)
    if ratios:
        report.ratio_min, report.ratio_max = min(ratios), max(ratios)
        report.equivalence_min, report.equivalence_max = min(equivalences), max(equivalences)
    return report


def _spread(lows: list[float | None], highs: list[float | None]) -> float | None:
    low = [v for v in lows if v is not None]
    high = [v for v in highs if v is not None]
    if not low or not high or min(low) <= 0:
        return None
    return max(high) / min(low)


def stability_factor(reports: list[BernsteinReport]) -> float | None:
    """Largest spread over scales of either the L^p equivalence or the L^q ratio.

    Each spread is max_j(max) / min_j(min); None when either is unavailable.
    """
    equivalence = _spread(
        [r.equivalence_min for r in reports], [r.equivalence_max for r in reports]
    )
    ratio = _spread([r.ratio_min for r in reports], [r.ratio_max for r in reports])
    if equivalence is None or ratio is None:
        return None
    return max(equivalence, ratio)


def bernstein_sweep(
    grid: GridSpec,
    j_values: list[int],
    p: float,
    q: float,
    k: int,
    trials: int,
    rng: np.random.Generator,
    budget: float = 10.0,
) -> BernsteinSweep:
    """Bernstein reports over several scales, stable when stability_factor <= budget."""
    reports = [bernstein_check(grid, j, p, q, k, trials, rng) for j in j_values]
    stability = stability_factor(reports)
    passed = stability is not None and stability <= budget
    return BernsteinSweep(reports=reports, stability=stability, passed=passed)
