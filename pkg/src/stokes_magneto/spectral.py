"""Periodic Fourier representation of fields and the multiplier operators on it.

Fields live on the torus [0, L)^d sampled at M points per axis. The coefficient
of integer mode k is

    coeffs(k) = M^{-d} * sum_x f(x) exp(-2 pi i k.x / L),

so a field with coefficients c evaluates to sum_k c(k) exp(2 pi i k.x / L) and
mode k carries the continuous frequency xi = k / L. Arrays have shape
(c, M, ..., M) with c = 1 for scalars, d for vectors and d*d for 2-tensors
(component j*d + k holds T^{jk}).

Derivative multipliers vanish on the Nyquist index k_axis = -M/2, which has no
real-valued partner; the Leray projection uses the same wavenumbers so that it
is exactly the null-space projector of the discrete divergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import AliasError, ComponentMismatchError, GridMismatchError, ZeroMeanError

SUPPORT_TOLERANCE = 1e-9
"""Absolute slack, in integer mode units, when testing |k| <= R*L."""

COEFF_THRESHOLD = 1e-12
"""Relative coefficient size below which a mode counts as empty."""

ZeroModePolicy = Literal["require", "annihilate"]


class GridSpec(BaseModel):
    """Uniform periodic grid on [0, L)^d with M points per axis."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=2, le=3, description="Spatial dimension.")
    M: int = Field(ge=4, description="Points (and Fourier modes) per axis, even.")
    L: float = Field(gt=0, description="Period length, identical on every axis.")

    @field_validator("M")
    @classmethod
    def _validate_even(cls, v: int) -> int:
        if v % 2 != 0:
            raise ValueError(f"M must be even, got {v}")
        return v

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.d

    @property
    def spacing(self) -> float:
        return self.L / self.M

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def axes(self) -> tuple[int, ...]:
        """Spatial axes of a coefficient array (axis 0 indexes components)."""
        return tuple(range(1, self.d + 1))

    def coordinates(self) -> list[np.ndarray]:
        """Node coordinates x_i = i*L/M as d broadcastable arrays."""
        x = np.arange(self.M) * self.spacing
        return np.meshgrid(*([x] * self.d), indexing="ij", sparse=True)


class TruncationSpec(BaseModel):
    """Sharp Fourier cutoff: keeps the modes with |k|/L <= R."""

    model_config = ConfigDict(frozen=True)

    R: float = Field(gt=0, description="Cutoff radius in continuous frequency.")

    @classmethod
    def from_modes(cls, K: int, L: float) -> TruncationSpec:
        """Cutoff that keeps integer modes with |k| <= K on a period L."""
        return cls(R=K / L)

    def k_max(self, grid: GridSpec) -> int:
        """Largest integer mode radius retained on this grid."""
        return mode_radius(self.R, grid.L)

    def mask(self, grid: GridSpec) -> np.ndarray:
        return _ball_mask(grid, self.R)

    def scaled(self, factor: float) -> TruncationSpec:
        return TruncationSpec(R=self.R * factor)


def mode_radius(radius: float, L: float) -> int:
    """Integer mode radius floor(radius*L) of a continuous-frequency ball."""
    return int(math.floor(radius * L + SUPPORT_TOLERANCE))


def alias_free(grid: GridSpec, *mode_radii: int) -> bool:
    """True when a product of fields with the given input radii, truncated to the
    last radius, has no aliased contribution on this grid."""
    return grid.M >= sum(mode_radii) + 1


def require_alias_free(grid: GridSpec, k_f: int, k_g: int, k_out: int) -> None:
    if not alias_free(grid, k_f, k_g, k_out):
        raise AliasError(
            f"product of mode radii {k_f} and {k_g} truncated to {k_out} needs "
            f"M >= {k_f + k_g + k_out + 1}, grid has M = {grid.M}"
        )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=32)
def integer_modes(grid: GridSpec) -> np.ndarray:
    """Integer wavevectors k in [-M/2, M/2)^d, shape (d, M, ..., M)."""
    k1 = np.rint(np.fft.fftfreq(grid.M, d=1.0 / grid.M)).astype(np.int64)
    return _frozen(np.stack(np.meshgrid(*([k1] * grid.d), indexing="ij")))


@lru_cache(maxsize=32)
def mode_norm(grid: GridSpec) -> np.ndarray:
    """Euclidean length |k| of every integer mode."""
    k = integer_modes(grid).astype(float)
    return _frozen(np.sqrt(np.sum(k**2, axis=0)))


@lru_cache(maxsize=32)
def derivative_modes(grid: GridSpec) -> np.ndarray:
    """Integer wavevectors with the Nyquist index set to zero, as floats."""
    k = integer_modes(grid).astype(float)
    k[k == -(grid.M // 2)] = 0.0
    return _frozen(k)


@lru_cache(maxsize=32)
def _ball_mask(grid: GridSpec, R: float) -> np.ndarray:
    return _frozen(mode_norm(grid) <= R * grid.L + SUPPORT_TOLERANCE)


@lru_cache(maxsize=64)
def laplacian_symbol(grid: GridSpec, s: float) -> np.ndarray:
    """(2 pi |k| / L)^s with the value 0 at k = 0 for s != 0."""
    if s == 0:
        return _frozen(np.ones(grid.shape))
    radial = 2.0 * np.pi * mode_norm(grid) / grid.L
    with np.errstate(divide="ignore"):
        symbol = np.where(radial > 0, radial**s, 0.0) if s < 0 else radial**s
    return _frozen(symbol)


@lru_cache(maxsize=32)
def nyquist_free_mask(grid: GridSpec) -> np.ndarray:
    """False on every mode with some component equal to -M/2."""
    return _frozen(np.all(integer_modes(grid) != -(grid.M // 2), axis=0))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Scalar, vector or tensor field stored by its Fourier coefficients.

    ``support`` optionally records a continuous-frequency ball radius that
    contains every nonzero coefficient; when it is None the radius is
    measured from the coefficients.
    """

    grid: GridSpec
    coeffs: np.ndarray
    real_valued: bool = True
    support: float | None = None

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.ndim == self.grid.d:
            coeffs = coeffs[np.newaxis]
        if coeffs.shape[1:] != self.grid.shape:
            raise GridMismatchError(
                f"coefficient shape {coeffs.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def c(self) -> int:
        return self.coeffs.shape[0]

    @property
    def d(self) -> int:
        return self.grid.d

    def with_coeffs(
        self, coeffs: np.ndarray, *, support: float | None = None, keep_support: bool = True
    ) -> SpectralField:
        if support is None and keep_support:
            support = self.support
        return replace(self, coeffs=coeffs, support=support)

    def component(self, index: int) -> SpectralField:
        return SpectralField(
            self.grid, self.coeffs[index : index + 1], self.real_valued, self.support
        )

    def mean(self) -> np.ndarray:
        """Zero-mode coefficient of each component."""
        return self.coeffs[(slice(None),) + (0,) * self.d].copy()

    def support_radius(self) -> float:
        """Continuous-frequency radius containing the spectrum."""
        if self.support is not None:
            return self.support
        magnitude = np.max(np.abs(self.coeffs), axis=0)
        peak = float(magnitude.max(initial=0.0))
        if peak == 0.0:
            return 0.0
        occupied = magnitude > COEFF_THRESHOLD * peak
        return float(mode_norm(self.grid)[occupied].max()) / self.grid.L

    def mode_radius(self) -> int:
        return mode_radius(self.support_radius(), self.grid.L)

    def _combine(self, other: SpectralField, coeffs: np.ndarray) -> SpectralField:
        support = None
        if self.support is not None and other.support is not None:
            support = max(self.support, other.support)
        return SpectralField(
            self.grid, coeffs, self.real_valued and other.real_valued, support
        )

    def __add__(self, other: SpectralField) -> SpectralField:
        check_compatible(self, other)
        return self._combine(other, self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        check_compatible(self, other)
        return self._combine(other, self.coeffs - other.coeffs)

    def __neg__(self) -> SpectralField:
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        if isinstance(scalar, SpectralField):
            return NotImplemented
        real = self.real_valued and not isinstance(scalar, complex)
        return replace(self, coeffs=self.coeffs * scalar, real_valued=real)

    __rmul__ = __mul__


def check_compatible(f: SpectralField, g: SpectralField) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(f"fields on different grids: {f.grid} vs {g.grid}")
    if f.c != g.c:
        raise ComponentMismatchError(f"component counts differ: {f.c} vs {g.c}")


def _require_components(f: SpectralField, expected: int, what: str) -> None:
    if f.c != expected:
        raise ComponentMismatchError(f"{what} needs {expected} components, got {f.c}")


def zeros(grid: GridSpec, components: int = 1) -> SpectralField:
    return SpectralField(
        grid, np.zeros((components, *grid.shape), dtype=np.complex128), True, 0.0
    )


def to_coefficients(samples: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.fftn(samples, axes=grid.axes, norm="forward")


def to_samples(coeffs: np.ndarray, grid: GridSpec, real: bool = True) -> np.ndarray:
    values = np.fft.ifftn(coeffs, axes=grid.axes, norm="forward")
    return values.real if real else values


def forward_transform(samples: np.ndarray, grid: GridSpec) -> SpectralField:
    """Coefficients of grid samples, shape grid.shape or (c, *grid.shape)."""
    arr = np.asarray(samples)
    if arr.shape == grid.shape:
        arr = arr[np.newaxis]
    if arr.ndim != grid.d + 1 or arr.shape[1:] != grid.shape:
        raise GridMismatchError(f"samples of shape {arr.shape} do not fit grid {grid.shape}")
    real = not np.iscomplexobj(arr)
    return SpectralField(grid, to_coefficients(arr, grid), real_valued=real)


def inverse_transform(f: SpectralField) -> np.ndarray:
    """Grid samples of f, shape (c, M, ..., M); real for real-valued fields."""
    return to_samples(f.coeffs, f.grid, f.real_valued)


def mirror_coefficients(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Array whose entry at k is the input entry at -k."""
    return np.roll(np.flip(coeffs, axis=grid.axes), 1, axis=grid.axes)


def hermitian_defect(f: SpectralField) -> float:
    """max |c(-k) - conj c(k)| relative to max |c|."""
    scale = float(np.max(np.abs(f.coeffs), initial=0.0))
    if scale == 0.0:
        return 0.0
    defect = np.abs(mirror_coefficients(f.coeffs, f.grid) - np.conj(f.coeffs))
    return float(defect.max()) / scale


def fractional_laplacian(
    f: SpectralField, s: float, zero_mode: ZeroModePolicy = "require"
) -> SpectralField:
    """Apply Lambda^s: mode k is multiplied by (2 pi |k| / L)^s.

    s = 0 is the identity. For s > 0 the zero mode is sent to 0. For s < 0 the
    zero mode must already vanish unless ``zero_mode="annihilate"``.
    """
    if s == 0:
        return f
    if s < 0 and zero_mode == "require":
        mean = np.abs(f.mean())
        scale = float(np.max(np.abs(f.coeffs), initial=0.0))
        if scale > 0 and float(mean.max()) > COEFF_THRESHOLD * scale:
            raise ZeroMeanError(
                f"Lambda^{s} needs a zero-mean field, mean modulus {float(mean.max()):.3e}"
            )
    return f.with_coeffs(f.coeffs * laplacian_symbol(f.grid, float(s)))


def leray_project(v: SpectralField) -> SpectralField:
    """Project a vector field onto divergence-free fields, I - xi xi^T / |xi|^2."""
    _require_components(v, v.d, "leray_project")
    return v.with_coeffs(leray_coefficients(v.coeffs, v.grid))


def leray_coefficients(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    k = derivative_modes(grid)
    k2 = np.sum(k**2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(k2 > 0, 1.0 / k2, 0.0)
    dot = np.sum(k * coeffs, axis=0)
    return coeffs - k * (dot * inv)


def fourier_truncate(f: SpectralField, trunc: TruncationSpec) -> SpectralField:
    """Zero every coefficient with |k|/L > R."""
    support = trunc.R if f.support is None else min(f.support, trunc.R)
    return f.with_coeffs(f.coeffs * trunc.mask(f.grid), support=support)


def _derivative_symbol(grid: GridSpec, axis: int) -> np.ndarray:
    return 2j * np.pi * derivative_modes(grid)[axis] / grid.L


def spectral_derivative(f: SpectralField, axis: int) -> SpectralField:
    if not 0 <= axis < f.d:
        raise ComponentMismatchError(f"axis {axis} outside 0..{f.d - 1}")
    return f.with_coeffs(f.coeffs * _derivative_symbol(f.grid, axis))


def gradient(f: SpectralField) -> SpectralField:
    _require_components(f, 1, "gradient")
    k = derivative_modes(f.grid)
    return f.with_coeffs(2j * np.pi * k / f.grid.L * f.coeffs[0])


def divergence(v: SpectralField) -> SpectralField:
    _require_components(v, v.d, "divergence")
    return v.with_coeffs(divergence_coefficients(v.coeffs, v.grid))


def divergence_coefficients(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    k = derivative_modes(grid)
    return (2j * np.pi / grid.L) * np.sum(k * coeffs, axis=0, keepdims=True)


def tensor_divergence(T: SpectralField) -> SpectralField:
    """Row divergence (div T)^j = sum_k d_k T^{jk}."""
    _require_components(T, T.d * T.d, "tensor_divergence")
    return T.with_coeffs(tensor_divergence_coefficients(T.coeffs, T.grid))


def tensor_divergence_coefficients(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    d = grid.d
    k = derivative_modes(grid)
    rows = coeffs.reshape(d, d, *grid.shape)
    return (2j * np.pi / grid.L) * np.sum(k[np.newaxis] * rows, axis=1)


def alias_safe_product(f: SpectralField, g: SpectralField, trunc: TruncationSpec) -> SpectralField:
    """S_R(f g) evaluated pseudo-spectrally, exact when the grid is alias-free.

    Components multiply pairwise; a scalar factor broadcasts over the other.
    """
    if f.grid != g.grid:
        raise GridMismatchError(f"fields on different grids: {f.grid} vs {g.grid}")
    if f.c != g.c and 1 not in (f.c, g.c):
        raise ComponentMismatchError(f"cannot multiply {f.c} by {g.c} components")
    grid = f.grid
    require_alias_free(grid, f.mode_radius(), g.mode_radius(), trunc.k_max(grid))
    real = f.real_valued and g.real_valued
    product = to_samples(f.coeffs, grid, real) * to_samples(g.coeffs, grid, real)
    coeffs = to_coefficients(product, grid) * trunc.mask(grid)
    return SpectralField(grid, coeffs, real, trunc.R)


def outer_product(a: SpectralField, b: SpectralField, trunc: TruncationSpec) -> SpectralField:
    """S_R(a (x) b) with (a (x) b)^{jk} = a^j b^k, stored row-major."""
    d = a.d
    _require_components(a, d, "outer_product")
    _require_components(b, d, "outer_product")
    if a.grid != b.grid:
        raise GridMismatchError(f"fields on different grids: {a.grid} vs {b.grid}")
    grid = a.grid
    require_alias_free(grid, a.mode_radius(), b.mode_radius(), trunc.k_max(grid))
    real = a.real_valued and b.real_valued
    pa = to_samples(a.coeffs, grid, real)
    pb = to_samples(b.coeffs, grid, real)
    product = (pa[:, np.newaxis] * pb[np.newaxis]).reshape(d * d, *grid.shape)
    coeffs = to_coefficients(product, grid) * trunc.mask(grid)
    return SpectralField(grid, coeffs, real, trunc.R)


def identity_tensor(p: SpectralField) -> SpectralField:
    """The tensor field p I for a scalar field p."""
    _require_components(p, 1, "identity_tensor")
    d = p.d
    coeffs = np.zeros((d * d, *p.grid.shape), dtype=np.complex128)
    for j in range(d):
        coeffs[j * d + j] = p.coeffs[0]
    return p.with_coeffs(coeffs)
