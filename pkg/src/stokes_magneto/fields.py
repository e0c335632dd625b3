"""Initial data and random test fields."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import ComponentMismatchError, ParameterRangeError
from .spectral import (
    SUPPORT_TOLERANCE,
    GridSpec,
    SpectralField,
    leray_coefficients,
    mode_radius,
)


class ModeSpec(BaseModel):
    """One real Fourier mode: amplitude * cos(2 pi k.x / L + phase) in a component."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    k: tuple[int, ...] = Field(description="Integer wavevector.")
    component: int = Field(default=0, ge=0)
    amplitude: float = 1.0
    phase: float = 0.0


def field_from_modes(
    grid: GridSpec, modes: list[ModeSpec], components: int = 1
) -> SpectralField:
    coeffs = np.zeros((components, *grid.shape), dtype=np.complex128)
    half = grid.M // 2
    for mode in modes:
        if len(mode.k) != grid.d:
            raise ComponentMismatchError(f"mode {mode.k} is not a {grid.d}-vector")
        if mode.component >= components:
            raise ComponentMismatchError(
                f"mode component {mode.component} outside 0..{components - 1}"
            )
        if any(abs(ki) >= half for ki in mode.k):
            raise ParameterRangeError(f"mode {mode.k} is not resolved below Nyquist on M={grid.M}")
        index = tuple(ki % grid.M for ki in mode.k)
        mirror = tuple(-ki % grid.M for ki in mode.k)
        if index == mirror:
            coeffs[(mode.component, *index)] += mode.amplitude * np.cos(mode.phase)
        else:
            coeffs[(mode.component, *index)] += 0.5 * mode.amplitude * np.exp(1j * mode.phase)
            coeffs[(mode.component, *mirror)] += 0.5 * mode.amplitude * np.exp(-1j * mode.phase)
    return SpectralField(grid, coeffs, real_valued=True)


def random_field(
    grid: GridSpec,
    rng: np.random.Generator,
    *,
    components: int = 1,
    band: float,
    sigma: float = 1.0,
    inner: float = 0.0,
    solenoidal: bool = False,
    zero_mean: bool = True,
    normalize: bool = True,
) -> SpectralField:
    """Real band-limited field with spectrum |k|^-sigma on inner <= |k|/L <= band.

    Coefficients are drawn on the mode box [-K, K]^d, K = floor(band*L), before
    being placed on the grid, so a seed gives the same field on every grid
    that resolves the band.
    """
    K = mode_radius(band, grid.L)
    if K >= grid.M // 2:
        raise ParameterRangeError(
            f"band {band} reaches mode {K}, grid resolves only |k_i| < {grid.M // 2}"
        )
    if solenoidal and components != grid.d:
        raise ComponentMismatchError("solenoidal fields need d components")
    d = grid.d
    offsets = np.arange(-K, K + 1)
    mesh = np.meshgrid(*([offsets] * d), indexing="ij")
    norm = np.sqrt(sum(m.astype(float) ** 2 for m in mesh))
    shape = (components, *(len(offsets),) * d)
    box = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    inside = (norm <= band * grid.L + SUPPORT_TOLERANCE) & (
        norm >= inner * grid.L - SUPPORT_TOLERANCE
    )
    with np.errstate(divide="ignore"):
        amplitude = np.where(norm > 0, norm ** (-sigma), 0.0 if zero_mean else 1.0)
    box = box * np.where(inside, amplitude, 0.0)
    spatial = tuple(range(1, d + 1))
    box = 0.5 * (box + np.conj(np.flip(box, axis=spatial)))

    coeffs = np.zeros((components, *grid.shape), dtype=np.complex128)
    index = np.ix_(*([offsets % grid.M] * d))
    coeffs[(slice(None), *index)] = box
    if solenoidal:
        coeffs = leray_coefficients(coeffs, grid)
    if normalize:
        l2 = np.sqrt(grid.volume * np.sum(np.abs(coeffs) ** 2))
        if l2 > 0:
            coeffs = coeffs / l2
    return SpectralField(grid, coeffs, real_valued=True, support=band)

