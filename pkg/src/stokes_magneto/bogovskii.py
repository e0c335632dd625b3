"""Right inverse of the divergence for compactly supported data.

For g supported in the box [-A, A]^d and one-dimensional weights phi_i of
unit mass, write P_j = phi_1(x_1) ... phi_j(x_j) and
G_j(x_{j+1}, ..., x_d) = int g dx_1 ... dx_j (so G_0 = g). The pieces

    S^(j) g = P_{j-1} (G_{j-1} - phi_j G_j),    j = 1, ..., d,

telescope to g - phi int g, where phi = P_d, and each S^(j) g has vanishing
line integrals along axis j. The antiderivative T^(j) along axis j then keeps
compact support, and B g = (T^(1) S^(1) g, ..., T^(d) S^(d) g) satisfies
div B g = g - phi int g. In d = 2 this reads S^(1) g = g - phi_1 G_1 and
S^(2) g = phi_1 (G_1 - phi_2 G_2).

Integrals over the box are rectangle sums on the nodes x_i = -A + i 2A/n,
which are spectrally accurate for smooth compactly supported integrands.

The defaults are the plain construction: the bump exp(1/(t^2 - 1)) on [-1, 1],
cumulative Simpson integration and fourth-order differences. The spectral
antiderivative, sixth-order differences and wider bumps are opt-in.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.integrate import cumulative_simpson

from .errors import (
    ComponentMismatchError,
    GridMismatchError,
    ParameterRangeError,
    PreconditionError,
)

LINE_TOLERANCE = 1e-10
MASS_TOLERANCE = 1e-10
BOUNDARY_LAYER = 2
DIVERGENCE_TOLERANCE = 1e-6

AntiderivativeMethod = Literal["spectral", "simpson"]

_FD_STENCILS = {
    4: np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]),
    6: np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60]),
}


class BoxGrid(BaseModel):
    """n nodes per axis on [-A, A)^d."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=2, le=3)
    n: int = Field(default=256, ge=8)
    A: float = Field(default=4.0, gt=0)

    @field_validator("n")
    @classmethod
    def _validate_even(cls, v: int) -> int:
        if v % 2 != 0:
            raise ValueError(f"n must be even, got {v}")
        return v

    @property
    def spacing(self) -> float:
        return 2 * self.A / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def nodes(self) -> np.ndarray:
        return -self.A + np.arange(self.n) * self.spacing

    def coordinates(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.nodes()] * self.d), indexing="ij", sparse=True)

    def along(self, profile: np.ndarray, axis: int) -> np.ndarray:
        """Reshape a 1-D profile to broadcast along one axis."""
        shape = [1] * self.d
        shape[axis] = self.n
        return profile.reshape(shape)


@dataclass(frozen=True, eq=False)
class BoxFunction:
    grid: BoxGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            values = np.broadcast_to(values, self.grid.shape).copy()
        object.__setattr__(self, "values", values)

    def __add__(self, other: BoxFunction) -> BoxFunction:
        _check_same_grid(self, other)
        return BoxFunction(self.grid, self.values + other.values)

    def __sub__(self, other: BoxFunction) -> BoxFunction:
        _check_same_grid(self, other)
        return BoxFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> BoxFunction:
        return BoxFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def integral(self) -> float:
        return float(np.sum(self.values)) * self.grid.spacing**self.grid.d

    def line_integrals(self, axis: int) -> np.ndarray:
        return np.sum(self.values, axis=axis) * self.grid.spacing

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    def boundary_ratio(self, layer: int = BOUNDARY_LAYER) -> float:
        """Largest value within `layer` nodes of the box boundary over the largest value."""
        peak = self.max_abs()
        if peak == 0.0:
            return 0.0
        edge = 0.0
        for axis in range(self.grid.d):
            low = np.take(self.values, range(layer), axis=axis)
            high = np.take(self.values, range(self.grid.n - layer, self.grid.n), axis=axis)
            edge = max(edge, float(np.abs(low).max()), float(np.abs(high).max()))
        return edge / peak

    @property
    def decayed(self) -> bool:
        return self.boundary_ratio() < 1e-14


def _check_same_grid(f: BoxFunction, g: BoxFunction) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(f"box functions on different grids: {f.grid} vs {g.grid}")


def _check_axis(grid: BoxGrid, axis: int) -> None:
    if not 0 <= axis < grid.d:
        raise ComponentMismatchError(f"axis {axis} outside 0..{grid.d - 1}")


def bump(t: np.ndarray) -> np.ndarray:
    """exp(1/(t^2 - 1)) on (-1, 1), zero outside."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    safe = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(1.0 / (safe**2 - 1.0)), 0.0)


def unit_weights(grid: BoxGrid, halfwidth: float = 1.0) -> list[np.ndarray]:
    """One bump profile per axis, scaled to the half-width and to unit discrete mass."""
    if not 0 < halfwidth < grid.A:
        raise ParameterRangeError(f"weight half-width {halfwidth} must lie in (0, {grid.A})")
    profile = bump(grid.nodes() / halfwidth)
    profile = profile / (np.sum(profile) * grid.spacing)
    return [profile.copy() for _ in range(grid.d)]


def check_weights(grid: BoxGrid, weights: list[np.ndarray]) -> None:
    if len(weights) != grid.d:
        raise ComponentMismatchError(f"need {grid.d} weight profiles, got {len(weights)}")
    for i, w in enumerate(weights):
        mass = float(np.sum(w)) * grid.spacing
        if abs(mass - 1.0) > MASS_TOLERANCE:
            raise PreconditionError(f"weight {i} has mass {mass}, expected 1", residual=mass - 1.0)


def weight_product(grid: BoxGrid, weights: list[np.ndarray]) -> BoxFunction:
    """phi(x) = phi_1(x_1) ... phi_d(x_d)."""
    values = np.ones(grid.shape)
    for axis, w in enumerate(weights):
        values = values * grid.along(w, axis)
    return BoxFunction(grid, values)


def line_residual(u: BoxFunction, axis: int, reference: float = 0.0) -> float:
    """Largest line integral along axis, relative to 2A max(max|u|, reference)."""
    scale = 2 * u.grid.A * max(u.max_abs(), reference)
    if scale == 0.0:
        return 0.0
    return float(np.abs(u.line_integrals(axis)).max()) / scale


def antiderivative_T(
    u: BoxFunction,
    axis: int,
    method: AntiderivativeMethod = "simpson",
    reference: float = 0.0,
) -> BoxFunction:
    """int_{-A}^{x_axis} u dt for u whose line integrals along axis vanish.

    ``reference`` sets the magnitude the line integrals are measured against
    when u itself is only rounding noise.
    """
    grid = u.grid
    _check_axis(grid, axis)
    residual = line_residual(u, axis, reference)
    if residual > LINE_TOLERANCE:
        raise PreconditionError(
            f"line integrals along axis {axis} do not vanish", residual=residual
        )
    if method == "simpson":
        values = cumulative_simpson(u.values, dx=grid.spacing, axis=axis, initial=0.0)
        return BoxFunction(grid, values)
    if method != "spectral":
        raise ParameterRangeError(f"unknown antiderivative method {method!r}")

    coeffs = np.fft.fft(u.values, axis=axis)
    k = np.fft.fftfreq(grid.n, d=grid.spacing)
    symbol = 2j * np.pi * k
    symbol[grid.n // 2] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        inverse = np.where(symbol != 0, 1.0 / symbol, 0.0)
    periodic = np.fft.ifft(coeffs * grid.along(inverse, axis), axis=axis).real
    anchor = np.take(periodic, [0], axis=axis)
    return BoxFunction(grid, periodic - anchor)


def _partial_integral(g: np.ndarray, j: int, spacing: float) -> np.ndarray:
    """G_j: g integrated over the first j axes, kept as broadcastable singleton axes."""
    if j == 0:
        return g
    return np.sum(g, axis=tuple(range(j)), keepdims=True) * spacing**j


def split_S(g: BoxFunction, weights: list[np.ndarray]) -> list[BoxFunction]:
    """S^(1) g, ..., S^(d) g."""
    grid = g.grid
    check_weights(grid, weights)
    pieces: list[BoxFunction] = []
    prefix = np.ones([1] * grid.d)
    for j in range(1, grid.d + 1):
        upper = _partial_integral(g.values, j - 1, grid.spacing)
        lower = _partial_integral(g.values, j, grid.spacing)
        phi_j = grid.along(weights[j - 1], j - 1)
        pieces.append(BoxFunction(grid, prefix * (upper - phi_j * lower)))
        prefix = prefix * phi_j
    return pieces


def bogovskii_B(
    g: BoxFunction, weights: list[np.ndarray], method: AntiderivativeMethod = "simpson"
) -> list[BoxFunction]:
    """Vector field with divergence g - phi int g."""
    reference = g.max_abs()
    return [
        antiderivative_T(piece, axis, method, reference)
        for axis, piece in enumerate(split_S(g, weights))
    ]


def box_derivative(f: BoxFunction, axis: int, order: int = 4) -> BoxFunction:
    """Central finite difference along axis, with zeros beyond the box."""
    _check_axis(f.grid, axis)
    if order not in _FD_STENCILS:
        raise ParameterRangeError(f"finite-difference order must be 4 or 6, got {order}")
    stencil = _FD_STENCILS[order]
    half = len(stencil) // 2
    pad = [(0, 0)] * f.grid.d
    pad[axis] = (half, half)
    padded = np.pad(f.values, pad)
    n = f.grid.n
    out = np.zeros(f.grid.shape)
    for offset, weight in enumerate(stencil):
        if weight != 0.0:
            out += weight * np.take(padded, range(offset, offset + n), axis=axis)
    return BoxFunction(f.grid, out / f.grid.spacing)


def box_divergence(components: list[BoxFunction], order: int = 4) -> BoxFunction:
    if not components:
        raise ComponentMismatchError("divergence needs at least one component")
    grid = components[0].grid
    if len(components) != grid.d:
        raise ComponentMismatchError(
            f"divergence needs {grid.d} components, got {len(components)}"
        )
    total = np.zeros(grid.shape)
    for axis, component in enumerate(components):
        total += box_derivative(component, axis, order).values
    return BoxFunction(grid, total)


def seminorm_surrogate(g: BoxFunction, order: int = 4) -> float:
    """max over |gamma| <= 1 of sup (1 + |x|)^2 |d^gamma g|."""
    radius = np.sqrt(sum(x**2 for x in g.grid.coordinates()))
    weight = (1 + radius) ** 2
    best = float(np.max(weight * np.abs(g.values)))
    for axis in range(g.grid.d):
        best = max(best, float(np.max(weight * np.abs(box_derivative(g, axis, order).values))))
    return best


def gaussian(
    grid: BoxGrid, center: np.ndarray, sigma: float, amplitude: float = 1.0
) -> BoxFunction:
    coords = grid.coordinates()
    r2 = sum((x - c) ** 2 for x, c in zip(coords, center, strict=True))
    return BoxFunction(grid, amplitude * np.exp(-r2 / (2 * sigma**2)))


def gaussian_derivative(
    grid: BoxGrid, center: np.ndarray, sigma: float, axis: int = 0
) -> BoxFunction:
    """d/dx_axis of the unit Gaussian; it has zero integral."""
    coords = grid.coordinates()
    h = gaussian(grid, center, sigma).values
    return BoxFunction(grid, -(coords[axis] - center[axis]) / sigma**2 * h)


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    g: BoxFunction


def smooth_corpus(
    grid: BoxGrid, rng: np.random.Generator, weights: list[np.ndarray], gaussians: int = 8
) -> list[CorpusEntry]:
    """Random Gaussians near the origin plus the weight itself and a pure derivative."""
    corpus: list[CorpusEntry] = []
    spread = 0.3 / math.sqrt(grid.d)
    for i in range(gaussians):
        center = rng.uniform(-spread, spread, size=grid.d)
        sigma = float(rng.uniform(0.4, 0.5))
        amplitude = float(rng.uniform(0.5, 1.0))
        corpus.append(CorpusEntry(f"gaussian_{i}", gaussian(grid, center, sigma, amplitude)))
    corpus.append(CorpusEntry("weight", weight_product(grid, weights)))
    corpus.append(CorpusEntry("derivative", gaussian_derivative(grid, np.zeros(grid.d), 0.45)))
    return corpus


class BogovskiiEntry(BaseModel):
    name: str
    mass: float
    divergence_error: float
    boundary_ratio: float
    line_residual: float
    continuity: float | None


class BogovskiiReport(BaseModel):
    d: int
    n: int
    A: float
    halfwidth: float
    method: str
    fd_order: int
    entries: list[BogovskiiEntry]
    max_error: float
    max_boundary_ratio: float
    continuity_spread: float | None
    passed: bool


def divergence_defect(
    g: BoxFunction,
    weights: list[np.ndarray],
    method: AntiderivativeMethod = "simpson",
    fd_order: int = 4,
) -> tuple[float, list[BoxFunction]]:
    """max |div B g - (g - phi int g)| and the field B g."""
    field = bogovskii_B(g, weights, method)
    target = g - weight_product(g.grid, weights) * g.integral()
    error = (box_divergence(field, fd_order) - target).max_abs()
    return error, field


def bogovskii_check(
    grid: BoxGrid,
    corpus: list[CorpusEntry],
    weights: list[np.ndarray],
    halfwidth: float,
    method: AntiderivativeMethod = "simpson",
    fd_order: int = 4,
    tolerance: float = DIVERGENCE_TOLERANCE,
) -> BogovskiiReport:
    entries: list[BogovskiiEntry] = []
    for item in corpus:
        error, field = divergence_defect(item.g, weights, method, fd_order)
        pieces = split_S(item.g, weights)
        seminorm = seminorm_surrogate(item.g, fd_order)
        sup = max(component.max_abs() for component in field)
        entries.append(
            BogovskiiEntry(
                name=item.name,
                mass=item.g.integral(),
                divergence_error=error,
                boundary_ratio=max(component.boundary_ratio() for component in field),
                line_residual=max(
                    line_residual(p, j, item.g.max_abs()) for j, p in enumerate(pieces)
                ),
                continuity=sup / seminorm if seminorm > 0 and sup > 1e-12 * seminorm else None,
            )
        )
    constants = [e.continuity for e in entries if e.continuity is not None]
    max_error = max((e.divergence_error for e in entries), default=0.0)
    return BogovskiiReport(
        d=grid.d,
        n=grid.n,
        A=grid.A,
        halfwidth=halfwidth,
        method=method,
        fd_order=fd_order,
        entries=entries,
        max_error=max_error,
        max_boundary_ratio=max((e.boundary_ratio for e in entries), default=0.0),
        continuity_spread=max(constants) / min(constants) if constants else None,
        passed=max_error < tolerance,
    )


def refinement_order(
    make: Callable[[BoxGrid], BoxFunction],
    grid: BoxGrid,
    halfwidth: float = 1.0,
    method: AntiderivativeMethod = "simpson",
    fd_order: int = 4,
) -> float:
    """log2 of the divergence-error ratio between n/2 and n nodes per axis."""
    errors = []
    for n in (grid.n // 2, grid.n):
        box = BoxGrid(d=grid.d, n=n, A=grid.A)
        weights = unit_weights(box, halfwidth)
        errors.append(divergence_defect(make(box), weights, method, fd_order)[0])
    return math.log2(errors[0] / errors[1])
