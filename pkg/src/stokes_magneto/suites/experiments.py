"""Cutoff convergence and perturbation stability of the truncated system."""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ValidationError
from scipy.integrate import cumulative_trapezoid, trapezoid

from ..errors import AliasError, ParameterRangeError
from ..evolver import ModelParams, SimulationResult, simulate
from ..fields import random_field
from ..logging import log_event
from ..spectral import GridSpec, SpectralField
from .regime import classify_regime

SCALING_WINDOW = (3.2, 4.8)
ENVELOPE_FIT_FRACTION = 0.5
CONVERGED_TOLERANCE = 1e-12


def _with_cutoff(base: ModelParams, R: float) -> ModelParams:
    try:
        return ModelParams.model_validate({**base.model_dump(), "trunc": {"R": R}})
    except ValidationError as exc:
        raise AliasError(f"cutoff R={R} is not resolved on M={base.grid.M}: {exc}") from exc


def _space_time_distance(a: SimulationResult, b: SimulationResult, grid: GridSpec) -> float:
    """||b_a - b_b|| in L^2(0, T; L^2) by the trapezoid rule over record times."""
    times = a.times
    gaps = [
        grid.volume * float(np.sum(np.abs(x - y) ** 2))
        for x, y in zip(a.trajectory, b.trajectory, strict=True)
    ]
    return math.sqrt(float(trapezoid(gaps, times)))


class ConvergenceReport(BaseModel):
    radii: list[float]
    errors: list[float]
    decreasing: bool
    T_final: float


def convergence_study(
    base: ModelParams, radii: list[float], b0: SpectralField
) -> ConvergenceReport:
    """e(R) = ||b_{2R} - b_R||_{L^2(0,T;L^2)} for each R in radii.

    ``decreasing`` holds when the errors fall strictly with R, or when every
    cutoff already agrees: all errors below 1e-12 of ||b0|| sqrt(T).
    """
    if len(radii) < 2 or any(r2 <= r1 for r1, r2 in zip(radii, radii[1:], strict=False)):
        raise ParameterRangeError(f"cutoff radii must increase, got {radii}")
    cutoffs = sorted(set(radii) | {2 * r for r in radii})
    runs: dict[float, SimulationResult] = {}
    for R in cutoffs:
        params = _with_cutoff(base, R)
        log_event("convergence_run", R=R, k_max=params.k_max)
        runs[R] = simulate(params, b0, keep_trajectory=True)
    errors = [_space_time_distance(runs[2 * R], runs[R], base.grid) for R in radii]
    scale = math.sqrt(base.grid.volume * float(np.sum(np.abs(b0.coeffs) ** 2)) * base.T_final)
    converged = all(e <= CONVERGED_TOLERANCE * scale for e in errors)
    decreasing = converged or all(e2 < e1 for e1, e2 in zip(errors, errors[1:], strict=False))
    return ConvergenceReport(
        radii=list(radii), errors=errors, decreasing=decreasing, T_final=base.T_final
    )


class StabilityReport(BaseModel):
    delta: float
    times: list[float]
    distance: list[float]
    phi_integral: list[float]
    fitted_constant: float
    fit_samples: int
    envelope_holds: bool
    in_theory: bool
    exponent_name: str
    exponent_value: float
    scaling_ratio: float | None = None
    scaling_passed: bool | None = None


def stability_exponent(d: int, alpha: float, beta: float) -> tuple[str, float]:
    """lambda = (d+2-2 alpha)/(4 beta) when alpha >= 1, otherwise mu = (1-alpha)/beta."""
    if alpha >= 1:
        return "lambda", (d + 2 - 2 * alpha) / (4 * beta)
    return "mu", (1 - alpha) / beta


def default_perturbation(params: ModelParams, rng: np.random.Generator) -> SpectralField:
    """Unit divergence-free field inside the cutoff."""
    return random_field(
        params.grid, rng, components=params.d, band=params.trunc.R, solenoidal=True
    )


def gronwall_envelope(
    distance: np.ndarray, Phi: np.ndarray, fit_fraction: float = ENVELOPE_FIT_FRACTION
) -> tuple[float, int, bool]:
    """Fit C on the early records and check D <= D(0) exp(C Phi) on the later ones.

    C is the smallest non-negative constant for which the envelope holds on
    records 1..n_fit-1; the records from n_fit on are held out. Returns
    (C, n_fit, holds).
    """
    if not 0 < fit_fraction < 1:
        raise ParameterRangeError(f"fit fraction must lie in (0, 1), got {fit_fraction}")
    n = len(distance)
    n_fit = max(1, min(n - 1, math.ceil(fit_fraction * n)))
    if distance[0] <= 0:
        return 0.0, n_fit, not bool(np.any(distance > 0))
    growth = np.log(np.maximum(distance[1:n_fit], 1e-300)) - math.log(distance[0])
    fitted = max(0.0, float(np.max(growth / Phi[1:n_fit], initial=0.0)))
    bound = distance[0] * np.exp(fitted * Phi[n_fit:]) * (1 + 1e-12)
    return fitted, n_fit, bool(np.all(distance[n_fit:] <= bound))


def stability_experiment(
    params: ModelParams,
    b0: SpectralField,
    delta: float,
    perturbation: SpectralField,
    *,
    base: SimulationResult | None = None,
) -> StabilityReport:
    """Track D(t) = ||b - b~||^2 against Phi(t) = int_0^t phi for two nearby data.

    phi = 1 + ||Lambda^alpha u||^2 + ||Lambda^alpha u~||^2 + ||Lambda^beta b||^2
    + ||Lambda^beta b~||^2. C is fitted on the first half of the record times and
    the envelope D(t) <= D(0) exp(C Phi(t)) is checked on the second half.
    ``base`` is a trajectory-keeping run from b0 with the same params.
    """
    if base is None:
        base = simulate(params, b0, keep_trajectory=True)
    perturbed = simulate(params, b0 + delta * perturbation, keep_trajectory=True)
    grid = params.grid
    times = base.times
    distance = np.array(
        [
            grid.volume * float(np.sum(np.abs(x - y) ** 2))
            for x, y in zip(base.trajectory, perturbed.trajectory, strict=True)
        ]
    )
    phi = np.array(
        [
            1.0 + r1.u_halpha_sq + r2.u_halpha_sq + r1.b_hbeta_sq + r2.b_hbeta_sq
            for r1, r2 in zip(base.records, perturbed.records, strict=True)
        ]
    )
    Phi = cumulative_trapezoid(phi, times, initial=0.0)
    fitted, n_fit, envelope = gronwall_envelope(distance, Phi)

    regime = classify_regime(params.d, params.alpha, params.beta)
    name, value = stability_exponent(params.d, params.alpha, params.beta)
    return StabilityReport(
        delta=delta,
        times=times.tolist(),
        distance=distance.tolist(),
        phi_integral=Phi.tolist(),
        fitted_constant=fitted,
        fit_samples=n_fit,
        envelope_holds=envelope,
        in_theory=regime.uniqueness,
        exponent_name=name,
        exponent_value=value,
    )


def stability_scaling(
    params: ModelParams,
    b0: SpectralField,
    delta: float,
    perturbation: SpectralField,
) -> StabilityReport:
    """Stability report at delta with the final-distance ratio D(delta)/D(delta/2)."""
    base = simulate(params, b0, keep_trajectory=True)
    report = stability_experiment(params, b0, delta, perturbation, base=base)
    half = stability_experiment(params, b0, delta / 2, perturbation, base=base)
    if half.distance[-1] > 0:
        ratio = report.distance[-1] / half.distance[-1]
        report.scaling_ratio = ratio
        report.scaling_passed = SCALING_WINDOW[0] <= ratio <= SCALING_WINDOW[1]
    return report
