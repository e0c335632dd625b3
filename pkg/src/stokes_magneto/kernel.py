"""Green kernel of the fractional Stokes system and its quadrature oracles.

For 1/2 < alpha < (d+1)/2 the velocity is u_j = sum_{k,l} U^{kl}_j * F^{kl} with

    U^{kl}_j(x) = c [ (delta_lj x_k + delta_lk x_j) / |x|^m
                      - m x_j x_k x_l / |x|^{m+2}
                      - delta_jk (2 alpha - 1) x_l / |x|^m ],

m = d + 2 - 2 alpha and c = Gamma(1 + d/2 - alpha) / (2^{2 alpha} pi^{d/2} Gamma(1 + alpha)),
divided by nu. Indices are zero-based throughout.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Sequence
from typing import Literal

import numpy as np
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate, special

from .errors import ParameterRangeError, PreconditionError, QuadratureError
from .spectral import GridSpec, forward_transform, inverse_transform
from .stokes import solve_stokes_spectral

RADIAL_CUTOFF = 8.0
TRIVIAL_ZERO = 1e-12


def kernel_coefficient(alpha: float, d: int) -> float:
    if not 0.5 < alpha < (d + 1) / 2:
        raise ParameterRangeError(f"kernel needs 1/2 < alpha < {(d + 1) / 2}, got {alpha}")
    return float(
        special.gamma(1 + d / 2 - alpha)
        / (2 ** (2 * alpha) * math.pi ** (d / 2) * special.gamma(1 + alpha))
    )


class KernelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    d: int = Field(ge=2, le=3)
    nu: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _validate_range(self) -> KernelSpec:
        if not 0.5 < self.alpha < (self.d + 1) / 2:
            raise ValueError(f"alpha must lie in (1/2, {(self.d + 1) / 2}), got {self.alpha}")
        return self

    @property
    def coefficient(self) -> float:
        return kernel_coefficient(self.alpha, self.d)

    @property
    def decay_exponent(self) -> float:
        """Homogeneity degree -(d + 1 - 2 alpha)."""
        return self.d + 1 - 2 * self.alpha


def kernel_tensor(points: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """U^{kl}_j at each point, shape (n, d, d, d) indexed [n, j, k, l]."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[1] != spec.d:
        raise ParameterRangeError(f"points must be {spec.d}-dimensional")
    r = np.linalg.norm(x, axis=1)
    if np.any(r == 0):
        raise ParameterRangeError("kernel is singular at the origin")
    m = spec.d + 2 - 2 * spec.alpha
    eye = np.eye(spec.d)
    rm = r[:, None, None, None] ** m
    # [n, j, k, l]
    first = (
        eye[None, :, None, :] * x[:, None, :, None] + eye[None, None, :, :] * x[:, :, None, None]
    ) / rm
    cubic = np.einsum("nj,nk,nl->njkl", x, x, x)
    second = m * cubic / (rm * r[:, None, None, None] ** 2)
    third = (2 * spec.alpha - 1) * eye[None, :, :, None] * x[:, None, None, :] / rm
    return spec.coefficient / spec.nu * (first - second - third)


def kernel_evaluate(x: Sequence[float], j: int, k: int, l: int, spec: KernelSpec) -> float:
    return float(kernel_tensor(np.asarray(x)[None, :], spec)[0, j, k, l])


def kernel_decay_constant(
    spec: KernelSpec, n_directions: int, rng: np.random.Generator
) -> float:
    """Largest Frobenius norm of U over sampled unit vectors; by homogeneity
    |U(x)| <= C |x|^{-(d+1-2 alpha)} along the sampled directions."""
    directions = rng.standard_normal((n_directions, spec.d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    values = kernel_tensor(directions, spec)
    return float(np.max(np.sqrt(np.sum(values**2, axis=(1, 2, 3)))))


def kernel_convolve(
    F: np.ndarray,
    nodes: Sequence[np.ndarray],
    alpha: float,
    targets: np.ndarray,
    nu: float = 1.0,
    singular: Literal["exclude", "raise"] = "exclude",
    chunk: int = 32,
) -> np.ndarray:
    """Direct quadrature of U * F over a tensor-product box grid.

    ``F`` has shape (d*d, n_1, ..., n_d) on the uniformly spaced axes ``nodes``
    and vanishes outside the box. Returns velocities of shape (n_targets, d).
    A target sitting on a source node drops that node, which converges
    because U is locally integrable on the admissible alpha range.
    """
    d = len(nodes)
    spec = KernelSpec(alpha=alpha, d=d, nu=nu)
    spacing = [float(ax[1] - ax[0]) for ax in nodes]
    cell = float(np.prod(spacing))
    mesh = np.meshgrid(*nodes, indexing="ij")
    sources = np.stack([m.ravel() for m in mesh], axis=1)
    values = F.reshape(d, d, -1).transpose(2, 0, 1)
    occupied = np.any(values != 0, axis=(1, 2))
    sources, values = sources[occupied], values[occupied]
    trace = np.trace(values, axis1=1, axis2=2)
    m = d + 2 - 2 * alpha
    scale = spec.coefficient / nu * cell

    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    out = np.zeros((targets.shape[0], d))
    for start in range(0, targets.shape[0], chunk):
        block = targets[start : start + chunk]
        z = block[:, None, :] - sources[None, :, :]
        r2 = np.sum(z**2, axis=2)
        singular_pairs = r2 == 0
        if np.any(singular_pairs) and singular == "raise":
            raise PreconditionError("target coincides with a source node")
        r2 = np.where(singular_pairs, 1.0, r2)
        inv_rm = np.where(singular_pairs, 0.0, r2 ** (-m / 2))
        z_cols = np.einsum("tsk,skj->tsj", z, values)
        z_rows = np.einsum("sjl,tsl->tsj", values, z)
        zfz = np.einsum("tsj,tsj->ts", z, z_rows)
        integrand = (
            (z_cols + z * trace[None, :, None] - (2 * alpha - 1) * z_rows) * inv_rm[..., None]
            - m * z * (zfz * inv_rm / r2)[..., None]
        )
        out[start : start + chunk] = scale * np.sum(integrand, axis=1)
    return out


def centered_nodes(grid: GridSpec) -> list[np.ndarray]:
    """Axis nodes -L/2 + i L/M of a box grid centered at the origin."""
    axis = -grid.L / 2 + np.arange(grid.M) * grid.spacing
    return [axis] * grid.d


def moment_forcing(d: int, sigma: float) -> Callable[[list[np.ndarray]], np.ndarray]:
    """F^{jk} = A_jk x_1 x_2 / sigma^4 exp(-|x|^2 / (2 sigma^2)) with a fixed symmetric A.

    A has 1 at (0, 0), -0.3 on the rest of the diagonal and 0.5 off it. The
    profile has zero mean and decays well inside a box of half-width 4 sigma.
    """
    A = np.full((d, d), 0.5)
    np.fill_diagonal(A, -0.3)
    A[0, 0] = 1.0

    def forcing(mesh: list[np.ndarray]) -> np.ndarray:
        r2 = sum(m**2 for m in mesh)
        profile = mesh[0] * mesh[1] / sigma**4 * np.exp(-r2 / (2 * sigma**2))
        return np.stack([A[j, k] * profile for j in range(d) for k in range(d)])

    return forcing


def kernel_box_comparison(
    forcing: Callable[[list[np.ndarray]], np.ndarray],
    grid: GridSpec,
    alpha: float,
    window: float,
    nu: float = 1.0,
) -> float:
    """Relative L^2 gap between kernel quadrature and the spectral solve on the
    nodes with max |x_i| <= window of a box centered at the origin."""
    nodes = centered_nodes(grid)
    mesh = np.meshgrid(*nodes, indexing="ij")
    F = np.asarray(forcing(mesh), dtype=float)
    solution = solve_stokes_spectral(forward_transform(F, grid), alpha, nu)
    spectral = inverse_transform(solution.velocity)
    inside = np.all([np.abs(m) <= window + 1e-12 for m in mesh], axis=0)
    targets = np.stack([m[inside] for m in mesh], axis=1)
    quadrature = kernel_convolve(F, nodes, alpha, targets, nu=nu)
    reference = np.stack([spectral[j][inside] for j in range(grid.d)], axis=1)
    norm = float(np.sqrt(np.sum(reference**2)))
    if norm == 0.0:
        return float(np.sqrt(np.sum(quadrature**2)))
    return float(np.sqrt(np.sum((quadrature - reference) ** 2))) / norm


# Fourier-identity oracle. Both sides are sums of terms coeff * x^beta |x|^q
# against x^gamma exp(-pi |x|^2), each integrated as a radial integral times a
# spherical moment.

Term = tuple[complex, tuple[int, ...], float]


class FourierIdentityReport(BaseModel):
    part: int
    lam: float
    d: int
    indices: list[int]
    gamma: list[int]
    lhs_real: float
    lhs_imag: float
    rhs: float
    discrepancy: float
    trivially_zero: bool
    passed: bool


def _quad(func: Callable[[float], float], a: float, b: float, **kwargs: object) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(func, a, b, epsabs=1e-15, epsrel=1e-12, limit=200, **kwargs)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return float(value)


def radial_integral(a: float) -> float:
    """int_0^8 r^a exp(-pi r^2) dr for a > -1."""
    if a <= -1:
        raise QuadratureError(f"radial integrand r^{a} is not integrable at 0")

    def gaussian(r: float) -> float:
        return math.exp(-math.pi * r * r)

    return _quad(gaussian, 0.0, RADIAL_CUTOFF, weight="alg", wvar=(a, 0.0))


def sphere_moment(beta: tuple[int, ...]) -> float:
    """int over the unit sphere of omega^beta."""
    if any(b % 2 for b in beta):
        return 0.0
    if len(beta) == 2:
        a, b = beta
        return _quad(lambda t: math.cos(t) ** a * math.sin(t) ** b, 0.0, 2 * math.pi)
    a, b, c = beta
    polar = _quad(lambda t: math.sin(t) ** (a + b + 1) * math.cos(t) ** c, 0.0, math.pi)
    azimuth = _quad(lambda p: math.cos(p) ** a * math.sin(p) ** b, 0.0, 2 * math.pi)
    return polar * azimuth


def _hermite_factor(n: int) -> np.ndarray:
    """Coefficients of H_n with (x^n e^{-pi x^2})^vee = (2 pi i)^{-n} H_n e^{-pi xi^2}."""
    h = np.array([1.0])
    for _ in range(n):
        h = P.polysub(P.polyder(h), 2 * math.pi * P.polymulx(h))
    return h


def _unit(d: int, i: int) -> tuple[int, ...]:
    return tuple(1 if a == i else 0 for a in range(d))


def _add(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b, strict=True))


def _integrate_terms(terms: list[Term], gamma: tuple[int, ...], d: int) -> complex:
    total = 0j
    for coeff, beta, q in terms:
        if coeff == 0:
            continue
        power = _add(beta, gamma)
        moment = sphere_moment(power)
        if moment == 0.0:
            continue
        total += coeff * moment * radial_integral(sum(power) + q + d - 1)
    return total


def _lhs_terms(part: int, lam: float, indices: Sequence[int], gamma: tuple[int, ...]) -> list[Term]:
    d = len(gamma)
    polys = [_hermite_factor(n) for n in gamma]
    prefactor = (-2j * math.pi) ** part * (2j * math.pi) ** (-sum(gamma))
    base = (0,) * d
    for i in indices:
        base = _add(base, _unit(d, i))
    terms: list[Term] = []
    exponents = [range(p.size) for p in polys]
    for combo in np.ndindex(*[len(e) for e in exponents]):
        coeff = np.prod([polys[a][combo[a]] for a in range(d)])
        if coeff == 0:
            continue
        terms.append((prefactor * float(coeff), _add(base, tuple(combo)), -lam))
    return terms


def _rhs_terms(part: int, lam: float, indices: Sequence[int], d: int) -> list[Term]:
    pole = lam / 2
    if part == 1:
        (j,) = indices
        c = 2 * special.gamma((d + 2 - lam) / 2) / (special.gamma(pole) * math.pi ** (d / 2 - lam))
        return [(c, _unit(d, j), -(d + 2 - lam))]
    if part == 2:
        j, k = indices
        c = 2 * special.gamma((d + 2 - lam) / 2) / (special.gamma(pole) * math.pi ** (d / 2 - lam))
        terms: list[Term] = [(c * (d + 2 - lam), _add(_unit(d, j), _unit(d, k)), -(d + 4 - lam))]
        if j == k:
            terms.append((-c, (0,) * d, -(d + 2 - lam)))
        return terms
    j, k, l = indices
    c = 4 * special.gamma((d + 4 - lam) / 2) / (special.gamma(pole) * math.pi ** (d / 2 - lam))
    m = d + 4 - lam
    terms = [(c * m, _add(_add(_unit(d, j), _unit(d, k)), _unit(d, l)), -(m + 2))]
    if l == j:
        terms.append((-c, _unit(d, k), -m))
    if l == k:
        terms.append((-c, _unit(d, j), -m))
    if j == k:
        terms.append((-c, _unit(d, l), -m))
    return terms


def fourier_identity_check(
    part: int,
    lam: float,
    indices: Sequence[int],
    gamma: Sequence[int],
    tolerance: float = 1e-6,
) -> FourierIdentityReport:
    """Compare both sides of the Fourier identity for psi = x^gamma exp(-pi |x|^2).

    ``part`` selects the number of frequency factors (-2 pi i xi) on the left,
    valid for part < lam < d + part.
    """
    d = len(gamma)
    gamma = tuple(int(g) for g in gamma)
    if part not in (1, 2, 3):
        raise ParameterRangeError(f"part must be 1, 2 or 3, got {part}")
    if len(indices) != part or any(not 0 <= i < d for i in indices):
        raise ParameterRangeError(f"part {part} needs {part} indices in 0..{d - 1}")
    if not part < lam < d + part:
        raise ParameterRangeError(f"part {part} needs {part} < lambda < {d + part}, got {lam}")
    lhs = _integrate_terms(_lhs_terms(part, lam, indices, gamma), gamma=(0,) * d, d=d)
    rhs = _integrate_terms(_rhs_terms(part, lam, indices, d), gamma=gamma, d=d).real
    scale = max(abs(lhs), abs(rhs))
    trivial = scale < TRIVIAL_ZERO
    discrepancy = 0.0 if trivial else abs(lhs - rhs) / scale
    return FourierIdentityReport(
        part=part,
        lam=lam,
        d=d,
        indices=list(indices),
        gamma=list(gamma),
        lhs_real=lhs.real,
        lhs_imag=lhs.imag,
        rhs=rhs,
        discrepancy=discrepancy,
        trivially_zero=trivial,
        passed=discrepancy < tolerance,
    )
