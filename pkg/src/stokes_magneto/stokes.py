"""Fractional Stokes solver: nu Lambda^{2 alpha} u + grad p = div F, div u = 0.

The solve decouples per Fourier mode: the pressure solves Delta p = div div F,
so p = (xi xi / |xi|^2) : F, and the velocity is
(div F - grad p) / (nu (2 pi |xi|)^{2 alpha}). Modes on a Nyquist plane carry
no derivative and are dropped together with the zero mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ComponentMismatchError, ParameterRangeError, PreconditionError
from .fields import random_field
from .norms import inner_product, l2_norm_sq
from .spectral import (
    GridSpec,
    SpectralField,
    derivative_modes,
    divergence,
    fractional_laplacian,
    gradient,
    laplacian_symbol,
    nyquist_free_mask,
    tensor_divergence,
)

ENERGY_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class StokesSolution:
    velocity: SpectralField
    pressure: SpectralField
    alpha: float
    nu: float

    @property
    def in_theory_range(self) -> bool:
        """Whether alpha lies in (1/2, (d+1)/2), where the kernel formula holds."""
        return 0.5 < self.alpha < (self.velocity.d + 1) / 2


def solve_stokes_coefficients(
    F: np.ndarray, grid: GridSpec, alpha: float, nu: float
) -> tuple[np.ndarray, np.ndarray]:
    """Velocity (d, ...) and pressure (1, ...) coefficients for tensor data (d*d, ...)."""
    d = grid.d
    k = derivative_modes(grid)
    k2 = np.sum(k**2, axis=0)
    active = (k2 > 0) & nyquist_free_mask(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_k2 = np.where(active, 1.0 / k2, 0.0)
    rows = F.reshape(d, d, *grid.shape) * active
    pressure = np.einsum("j...,k...,jk...->...", k, k, rows) * inv_k2
    factor = 2j * np.pi / grid.L
    div_rows = factor * np.einsum("k...,jk...->j...", k, rows)
    symbol = laplacian_symbol(grid, 2.0 * alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(active, 1.0 / (nu * symbol), 0.0)
    velocity = (div_rows - factor * k * pressure) * scale
    return velocity, pressure[np.newaxis]


def solve_stokes_spectral(F: SpectralField, alpha: float, nu: float = 1.0) -> StokesSolution:
    if nu <= 0:
        raise ParameterRangeError(f"viscosity must be positive, got {nu}")
    d = F.d
    if F.c != d * d:
        raise ComponentMismatchError(f"Stokes data must be a {d}x{d} tensor, got {F.c} components")
    velocity, pressure = solve_stokes_coefficients(F.coeffs, F.grid, alpha, nu)
    return StokesSolution(
        velocity=SpectralField(F.grid, velocity, F.real_valued, F.support),
        pressure=SpectralField(F.grid, pressure, F.real_valued, F.support),
        alpha=alpha,
        nu=nu,
    )


def _without_nyquist(F: SpectralField) -> SpectralField:
    return F.with_coeffs(F.coeffs * nyquist_free_mask(F.grid))


def stokes_energy_residual(sol: StokesSolution, F: SpectralField) -> float:
    """|nu ||Lambda^alpha u||^2 - <div F, u>| / nu ||Lambda^alpha u||^2."""
    dissipation = sol.nu * l2_norm_sq(fractional_laplacian(sol.velocity, sol.alpha))
    work = inner_product(tensor_divergence(F), sol.velocity)
    return abs(dissipation - work) / max(dissipation, ENERGY_FLOOR)


def stokes_plugback_residual(sol: StokesSolution, F: SpectralField) -> float:
    """||nu Lambda^{2 alpha} u + grad p - div F||_2 / ||div F||_2.

    Nyquist planes of F are removed first.
    """
    forcing = tensor_divergence(_without_nyquist(F))
    scale = math.sqrt(l2_norm_sq(forcing))
    if scale == 0.0:
        return 0.0
    residual = (
        sol.nu * fractional_laplacian(sol.velocity, 2.0 * sol.alpha)
        + gradient(sol.pressure)
        - forcing
    )
    return math.sqrt(l2_norm_sq(residual)) / scale


def velocity_gradient(v: SpectralField) -> SpectralField:
    """Tensor (grad v)^{jk} = d_k v^j."""
    d = v.d
    k = derivative_modes(v.grid)
    coeffs = (2j * np.pi / v.grid.L) * v.coeffs[:, np.newaxis] * k[np.newaxis]
    return v.with_coeffs(coeffs.reshape(d * d, *v.grid.shape))


def very_weak_residual(
    u: SpectralField,
    F: SpectralField,
    alpha: float,
    test_fields: list[SpectralField],
    nu: float = 1.0,
) -> float:
    """Largest normalized defect of the very weak Stokes formulation.

    Vector test fields Phi must be divergence-free and contribute
    nu <u, Lambda^{2 alpha} Phi> + <F, grad Phi>; scalar test fields psi
    contribute <u, grad psi>.
    """
    data_scale = math.sqrt(l2_norm_sq(u)) + math.sqrt(l2_norm_sq(F))
    worst = 0.0
    for test in test_fields:
        if test.c == u.d:
            grad = velocity_gradient(test)
            div_norm = math.sqrt(l2_norm_sq(divergence(test)))
            if div_norm > 1e-10 * max(math.sqrt(l2_norm_sq(grad)), ENERGY_FLOOR):
                raise PreconditionError(
                    "vector test field is not divergence-free", residual=div_norm
                )
            smoothed = fractional_laplacian(test, 2.0 * alpha)
            defect = nu * inner_product(u, smoothed) + inner_product(F, grad)
            test_scale = nu * math.sqrt(l2_norm_sq(smoothed)) + math.sqrt(l2_norm_sq(grad))
        elif test.c == 1:
            grad = gradient(test)
            defect = inner_product(u, grad)
            test_scale = math.sqrt(l2_norm_sq(grad))
        else:
            raise ComponentMismatchError(f"test fields need 1 or {u.d} components, got {test.c}")
        scale = data_scale * test_scale
        if scale > 0:
            worst = max(worst, abs(defect) / scale)
    return worst


def random_test_fields(
    grid: GridSpec, rng: np.random.Generator, count: int, band: float
) -> list[SpectralField]:
    """Alternating divergence-free vector and scalar test fields."""
    tests: list[SpectralField] = []
    for i in range(count):
        if i % 2 == 0:
            tests.append(
                random_field(grid, rng, components=grid.d, band=band, solenoidal=True)
            )
        else:
            tests.append(random_field(grid, rng, band=band))
    return tests
