"""Time integration of the Fourier-truncated magnetic system and the fractional heat equation.

The truncated system evolves b_R in the ball K_R:

    d/dt b + eta Lambda^{2 beta} b = P S_R div(u (x) b - b (x) u),
    u = Stokes_alpha(S_{2R}(b (x) b)),

and the heat problem evolves b under a frozen velocity and a forcing tensor:

    d/dt b + eta Lambda^{2 beta} b + S_R div(b (x) u) = S_R div F.

Both use Lawson-RK4: the diffusion is integrated exactly through the factor
exp(-eta (2 pi |k| / L)^{2 beta} t) and classical RK4 runs on the transformed
nonlinearity. Dissipation integrals use the RK4 weights on the stage states,
so the energy balance is accurate to the order of the scheme.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import (
    BlowUpError,
    CFLError,
    ComponentMismatchError,
    GridMismatchError,
    PreconditionError,
)
from .logging import log_event
from .norms import lorentz_weak_quasinorm
from .snapshot import write_snapshot
from .spectral import (
    COEFF_THRESHOLD,
    GridSpec,
    SpectralField,
    TruncationSpec,
    divergence_coefficients,
    fourier_truncate,
    laplacian_symbol,
    leray_coefficients,
    leray_project,
    mode_radius,
    require_alias_free,
    tensor_divergence_coefficients,
    to_coefficients,
    to_samples,
)
from .stokes import solve_stokes_coefficients

CSV_COLUMNS = (
    "t",
    "b_l2_sq",
    "b_hbeta_sq",
    "u_halpha_sq",
    "u_weak_lorentz",
    "energy_residual",
    "max_div_b",
    "max_div_u",
)


class ModelParams(BaseModel):
    """Physical and numerical parameters of one truncated run."""

    model_config = ConfigDict(frozen=True)

    grid: GridSpec
    trunc: TruncationSpec
    alpha: float = Field(gt=0, description="Order of the fractional viscosity.")
    beta: float = Field(gt=0, description="Order of the fractional magnetic diffusion.")
    nu: float = Field(default=1.0, gt=0)
    eta: float = Field(default=1.0, gt=0)
    dt: float = Field(gt=0)
    T_final: float = Field(gt=0)
    snapshot_stride: int = Field(default=0, ge=0, description="0 disables snapshots.")
    record_stride: int = Field(default=1, ge=1)
    cfl_check_every: int = Field(default=20, ge=1)
    cfl_number: float = Field(default=0.5, gt=0)
    blowup_factor: float = Field(default=10.0, gt=1)
    nonlinear: bool = True

    @model_validator(mode="after")
    def _validate_resolution(self) -> ModelParams:
        K = self.k_max
        K2 = mode_radius(2.0 * self.trunc.R, self.grid.L)
        if K < 1:
            raise ValueError(f"cutoff R={self.trunc.R} keeps no nonzero mode on L={self.grid.L}")
        if self.grid.M < 2 * K + K2 + 1:
            raise ValueError(
                f"M={self.grid.M} aliases the truncated system: "
                f"need M >= {2 * K + K2 + 1} for K={K}"
            )
        steps = self.T_final / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(steps, 1.0):
            raise ValueError(f"T_final={self.T_final} is not a multiple of dt={self.dt}")
        return self

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def k_max(self) -> int:
        return self.trunc.k_max(self.grid)

    @property
    def n_steps(self) -> int:
        return max(1, round(self.T_final / self.dt))

    @property
    def lorentz_exponent(self) -> float | None:
        """d/(d+1-2 alpha) when it is a finite exponent >= 1."""
        if 0.5 <= self.alpha < (self.d + 1) / 2:
            return self.d / (self.d + 1 - 2 * self.alpha)
        return None


class DiagnosticRecord(BaseModel):
    t: float
    b_l2_sq: float
    b_hbeta_sq: float
    u_halpha_sq: float
    u_weak_lorentz: float | None
    energy_residual: float
    max_div_b: float
    max_div_u: float

    def as_row(self) -> list[str]:
        values = [getattr(self, name) for name in CSV_COLUMNS]
        return ["nan" if v is None else repr(float(v)) for v in values]


@dataclass
class EvolutionState:
    """Coefficients of b at time t with the accumulated dissipation integrals."""

    t: float
    b: np.ndarray
    velocity_dissipation: float = 0.0
    magnetic_dissipation: float = 0.0
    step: int = 0


@dataclass
class SimulationResult:
    params: ModelParams
    records: list[DiagnosticRecord]
    final: SpectralField
    velocity: SpectralField
    initial_energy: float
    velocity_dissipation: float
    magnetic_dissipation: float
    snapshots: list[Path] = field(default_factory=list)
    trajectory: list[np.ndarray] = field(default_factory=list)
    lorentz_constants: list[float] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])


class MagneticEvolver:
    """Lawson-RK4 stepper for the truncated system on a fixed grid."""

    def __init__(self, params: ModelParams) -> None:
        self.params = params
        grid = params.grid
        self.grid = grid
        self.mask = params.trunc.mask(grid)
        self.product_mask = params.trunc.scaled(2.0).mask(grid)
        self.decay = params.eta * laplacian_symbol(grid, 2.0 * params.beta)
        self.half_factor = np.exp(-0.5 * params.dt * self.decay)
        self.full_factor = np.exp(-params.dt * self.decay)
        self.alpha_weight = laplacian_symbol(grid, 2.0 * params.alpha)
        self.beta_weight = laplacian_symbol(grid, 2.0 * params.beta)
        self._pairs = [(j, k) for j in range(grid.d) for k in range(j + 1, grid.d)]

    def velocity(self, b: np.ndarray) -> np.ndarray:
        """Coefficients of u = Stokes_alpha(S_{2R}(b (x) b))."""
        p = self.params
        if not p.nonlinear:
            return np.zeros_like(b)
        d = self.grid.d
        samples = to_samples(b, self.grid)
        tensor = (samples[:, np.newaxis] * samples[np.newaxis]).reshape(d * d, *self.grid.shape)
        forcing = to_coefficients(tensor, self.grid) * self.product_mask
        velocity, _ = solve_stokes_coefficients(forcing, self.grid, p.alpha, p.nu)
        return velocity

    def nonlinear(self, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """P S_R div(u (x) b - b (x) u) and the velocity it was built from."""
        u = self.velocity(b)
        if not self.params.nonlinear:
            return np.zeros_like(b), u
        d = self.grid.d
        pu = to_samples(u, self.grid)
        pb = to_samples(b, self.grid)
        # A^{jk} = u^j b^k - b^j u^k is antisymmetric; only j < k is transformed.
        A = np.zeros((d * d, *self.grid.shape), dtype=np.complex128)
        for j, k in self._pairs:
            entry = to_coefficients((pu[j] * pb[k] - pb[j] * pu[k])[np.newaxis], self.grid)[0]
            A[j * d + k] = entry
            A[k * d + j] = -entry
        div = tensor_divergence_coefficients(A, self.grid) * self.mask
        return leray_coefficients(div, self.grid), u

    def dissipation(self, b: np.ndarray, u: np.ndarray) -> tuple[float, float]:
        """(||Lambda^alpha u||^2, ||Lambda^beta b||^2) by Plancherel."""
        volume = self.grid.volume
        return (
            float(volume * np.sum(self.alpha_weight * np.abs(u) ** 2)),
            float(volume * np.sum(self.beta_weight * np.abs(b) ** 2)),
        )

    def step(self, state: EvolutionState) -> EvolutionState:
        h = self.params.dt
        E1, E2 = self.half_factor, self.full_factor
        b = state.b
        k1, u1 = self.nonlinear(b)
        y2 = E1 * (b + 0.5 * h * k1)
        k2, u2 = self.nonlinear(y2)
        y3 = E1 * b + 0.5 * h * k2
        k3, u3 = self.nonlinear(y3)
        y4 = E2 * b + h * E1 * k3
        k4, u4 = self.nonlinear(y4)
        new = E2 * b + (h / 6.0) * (E2 * k1 + 2.0 * E1 * (k2 + k3) + k4)
        new = leray_coefficients(new * self.mask, self.grid)

        stages = [self.dissipation(y, u) for y, u in ((b, u1), (y2, u2), (y3, u3), (y4, u4))]
        weights = (1.0, 2.0, 2.0, 1.0)
        du = sum(w * s[0] for w, s in zip(weights, stages, strict=True)) * h / 6.0
        db = sum(w * s[1] for w, s in zip(weights, stages, strict=True)) * h / 6.0
        return EvolutionState(
            t=state.t + h,
            b=new,
            velocity_dissipation=state.velocity_dissipation + du,
            magnetic_dissipation=state.magnetic_dissipation + db,
            step=state.step + 1,
        )

    def energy(self, state: EvolutionState) -> float:
        p = self.params
        return (
            _l2_sq(state.b, self.grid)
            + 2.0 * p.nu * state.velocity_dissipation
            + 2.0 * p.eta * state.magnetic_dissipation
        )

    def record(self, state: EvolutionState, initial_energy: float) -> DiagnosticRecord:
        u = self.velocity(state.b)
        u_sq, b_sq = self.dissipation(state.b, u)
        exponent = self.params.lorentz_exponent
        lorentz = None
        if exponent is not None:
            lorentz = lorentz_weak_quasinorm(SpectralField(self.grid, u), exponent)
        residual = 0.0
        if initial_energy > 0:
            residual = abs(self.energy(state) - initial_energy) / initial_energy
        return DiagnosticRecord(
            t=state.t,
            b_l2_sq=_l2_sq(state.b, self.grid),
            b_hbeta_sq=b_sq,
            u_halpha_sq=u_sq,
            u_weak_lorentz=lorentz,
            energy_residual=residual,
            max_div_b=_max_divergence(state.b, self.grid),
            max_div_u=_max_divergence(u, self.grid),
        )

    def max_speed(self, b: np.ndarray) -> float:
        u = to_samples(self.velocity(b), self.grid)
        return float(np.sqrt(np.sum(u**2, axis=0)).max())


def _l2_sq(coeffs: np.ndarray, grid: GridSpec) -> float:
    return float(grid.volume * np.sum(np.abs(coeffs) ** 2))


def _max_divergence(coeffs: np.ndarray, grid: GridSpec) -> float:
    return float(np.abs(to_samples(divergence_coefficients(coeffs, grid), grid)).max())


@lru_cache(maxsize=8)
def _evolver(params: ModelParams) -> MagneticEvolver:
    return MagneticEvolver(params)


def _require_vector(b: SpectralField, grid: GridSpec) -> None:
    if b.grid != grid:
        raise GridMismatchError(f"field grid {b.grid} differs from model grid {grid}")
    if b.c != grid.d:
        raise ComponentMismatchError(f"magnetic field needs {grid.d} components, got {b.c}")
    if not b.real_valued:
        raise PreconditionError("magnetic field must be real-valued")


def initial_truncate(b0: SpectralField, params: ModelParams) -> SpectralField:
    """P S_R b0."""
    _require_vector(b0, params.grid)
    return leray_project(fourier_truncate(b0, params.trunc))


def _require_support(b: SpectralField, trunc: TruncationSpec) -> None:
    outside = np.abs(b.coeffs) * ~trunc.mask(b.grid)
    scale = float(np.max(np.abs(b.coeffs), initial=0.0))
    if scale > 0 and float(outside.max()) > COEFF_THRESHOLD * scale:
        raise PreconditionError(
            f"field has modes outside the cutoff R={trunc.R}", residual=float(outside.max())
        )


def rhs(b: SpectralField, params: ModelParams) -> SpectralField:
    """-eta Lambda^{2 beta} b + P S_R div(u (x) b - b (x) u)."""
    _require_vector(b, params.grid)
    _require_support(b, params.trunc)
    evolver = _evolver(params)
    nonlinear, _ = evolver.nonlinear(b.coeffs)
    return b.with_coeffs(-evolver.decay * b.coeffs + nonlinear, support=params.trunc.R)


def velocity_of(b: SpectralField, params: ModelParams) -> SpectralField:
    """The velocity u_R driven by the magnetic field b_R."""
    _require_vector(b, params.grid)
    u = _evolver(params).velocity(b.coeffs)
    return SpectralField(params.grid, u, True, 2.0 * params.trunc.R)


def step(state: EvolutionState, params: ModelParams) -> EvolutionState:
    """One Lawson-RK4 step of the truncated system."""
    new = _evolver(params).step(state)
    if not np.all(np.isfinite(new.b)):
        raise BlowUpError("non-finite coefficients", t=state.t)
    return new


def simulate(
    params: ModelParams,
    b0: SpectralField,
    *,
    snapshot_dir: Path | None = None,
    keep_trajectory: bool = False,
    on_record: Callable[[DiagnosticRecord], None] | None = None,
) -> SimulationResult:
    """Run the truncated system from P S_R b0 to T_final."""
    b = initial_truncate(b0, params)
    evolver = _evolver(params)
    state = EvolutionState(t=0.0, b=b.coeffs.copy())
    initial_energy = _l2_sq(state.b, params.grid)
    limit = params.blowup_factor * math.sqrt(initial_energy)

    result = SimulationResult(
        params=params,
        records=[],
        final=b,
        velocity=velocity_of(b, params),
        initial_energy=initial_energy,
        velocity_dissipation=0.0,
        magnetic_dissipation=0.0,
    )

    def emit(current: EvolutionState) -> None:
        record = evolver.record(current, initial_energy)
        result.records.append(record)
        if keep_trajectory:
            result.trajectory.append(current.b.copy())
        if record.u_weak_lorentz is not None and record.b_l2_sq > 0:
            result.lorentz_constants.append(record.u_weak_lorentz / record.b_l2_sq)
        if on_record is not None:
            on_record(record)

    emit(state)
    for n in range(1, params.n_steps + 1):
        if (n - 1) % params.cfl_check_every == 0:
            speed = evolver.max_speed(state.b)
            if speed > 0:
                budget = params.cfl_number * params.grid.spacing / speed
                log_event("cfl_check", t=state.t, max_speed=speed, dt_budget=budget)
                if params.dt > budget:
                    raise CFLError(f"dt={params.dt} exceeds the CFL budget {budget:.3e}", t=state.t)
        try:
            state = step(state, params)
        except BlowUpError:
            log_event("blowup_detected", level="error", t=state.t)
            raise
        norm = math.sqrt(_l2_sq(state.b, params.grid))
        if norm > limit and initial_energy > 0:
            log_event("blowup_detected", level="error", t=state.t, b_l2=norm)
            raise BlowUpError(f"||b||_2 = {norm:.3e} exceeds {limit:.3e}", t=state.t - params.dt)
        if n % params.record_stride == 0 or n == params.n_steps:
            emit(state)
        if snapshot_dir is not None and params.snapshot_stride and n % params.snapshot_stride == 0:
            path = snapshot_dir / f"snapshot_{n:06d}.fmhd"
            write_snapshot(path, SpectralField(params.grid, state.b, True, params.trunc.R))
            result.snapshots.append(path)

    result.final = SpectralField(params.grid, state.b, True, params.trunc.R)
    result.velocity = velocity_of(result.final, params)
    result.velocity_dissipation = state.velocity_dissipation
    result.magnetic_dissipation = state.magnetic_dissipation
    return result


def gronwall_exponent(beta: float) -> float | None:
    """2 beta / (2 beta - 1), the time exponent of the forced heat estimate."""
    if beta <= 0.5:
        return None
    return 2.0 * beta / (2.0 * beta - 1.0)


class HeatRecord(BaseModel):
    t: float
    b_l2_sq: float
    b_hbeta_sq: float
    forcing_work: float
    energy_residual: float


@dataclass
class HeatResult:
    records: list[HeatRecord]
    final: SpectralField
    gronwall_exponent: float | None


class HeatEvolver:
    """Lawson-RK4 for the forced fractional heat equation with a frozen velocity."""

    def __init__(
        self,
        params: ModelParams,
        velocity: SpectralField | None,
        forcing: SpectralField | None,
    ) -> None:
        self.params = params
        grid = params.grid
        self.grid = grid
        self.mask = params.trunc.mask(grid)
        self.decay = params.eta * laplacian_symbol(grid, 2.0 * params.beta)
        self.half_factor = np.exp(-0.5 * params.dt * self.decay)
        self.full_factor = np.exp(-params.dt * self.decay)
        self.beta_weight = laplacian_symbol(grid, 2.0 * params.beta)
        self.velocity_samples: np.ndarray | None = None
        if velocity is not None:
            _require_vector(velocity, grid)
            scale = float(np.abs(velocity.coeffs).max(initial=0.0))
            projected = leray_coefficients(velocity.coeffs, grid)
            defect = float(np.abs(velocity.coeffs - projected).max())
            if defect > 1e-10 * scale:
                raise PreconditionError("frozen velocity is not divergence-free", residual=defect)
            K = params.k_max
            require_alias_free(grid, velocity.mode_radius(), K, K)
            self.velocity_samples = to_samples(velocity.coeffs, grid)
        self.source = np.zeros((grid.d, *grid.shape), dtype=np.complex128)
        if forcing is not None:
            if forcing.grid != grid:
                raise GridMismatchError(f"forcing grid {forcing.grid} differs from {grid}")
            if forcing.c != grid.d * grid.d:
                raise ComponentMismatchError(f"forcing needs {grid.d**2} components")
            self.source = tensor_divergence_coefficients(forcing.coeffs, grid) * self.mask

    def transport(self, b: np.ndarray) -> np.ndarray:
        """S_R div(b (x) u)."""
        if self.velocity_samples is None:
            return np.zeros_like(b)
        d = self.grid.d
        pb = to_samples(b, self.grid)
        tensor = (pb[:, np.newaxis] * self.velocity_samples[np.newaxis]).reshape(
            d * d, *self.grid.shape
        )
        coeffs = to_coefficients(tensor, self.grid)
        return tensor_divergence_coefficients(coeffs, self.grid) * self.mask

    def nonlinear(self, b: np.ndarray) -> np.ndarray:
        return self.source - self.transport(b)

    def rates(self, b: np.ndarray) -> tuple[float, float]:
        """(||Lambda^beta b||^2, <S_R div F, b>)."""
        volume = self.grid.volume
        return (
            float(volume * np.sum(self.beta_weight * np.abs(b) ** 2)),
            float(volume * np.sum(np.real(np.conj(self.source) * b))),
        )

    def step(self, b: np.ndarray) -> tuple[np.ndarray, float, float]:
        h = self.params.dt
        E1, E2 = self.half_factor, self.full_factor
        k1 = self.nonlinear(b)
        y2 = E1 * (b + 0.5 * h * k1)
        k2 = self.nonlinear(y2)
        y3 = E1 * b + 0.5 * h * k2
        k3 = self.nonlinear(y3)
        y4 = E2 * b + h * E1 * k3
        k4 = self.nonlinear(y4)
        new = E2 * b + (h / 6.0) * (E2 * k1 + 2.0 * E1 * (k2 + k3) + k4)
        stages = [self.rates(y) for y in (b, y2, y3, y4)]
        weights = (1.0, 2.0, 2.0, 1.0)
        diss = sum(w * s[0] for w, s in zip(weights, stages, strict=True)) * h / 6.0
        work = sum(w * s[1] for w, s in zip(weights, stages, strict=True)) * h / 6.0
        return new * self.mask, diss, work


def transport_work(b: SpectralField, u: SpectralField, trunc: TruncationSpec) -> float:
    """<S_R div(b (x) u), b>, which vanishes for divergence-free u."""
    grid = b.grid
    _require_vector(b, grid)
    _require_vector(u, grid)
    K = trunc.k_max(grid)
    require_alias_free(grid, u.mode_radius(), b.mode_radius(), K)
    d = grid.d
    pb = to_samples(b.coeffs, grid)
    pu = to_samples(u.coeffs, grid)
    tensor = (pb[:, np.newaxis] * pu[np.newaxis]).reshape(d * d, *grid.shape)
    div = tensor_divergence_coefficients(to_coefficients(tensor, grid), grid) * trunc.mask(grid)
    return float(grid.volume * np.sum(np.real(np.conj(div) * b.coeffs)))


def heat_solve(
    params: ModelParams,
    b0: SpectralField,
    velocity: SpectralField | None = None,
    forcing: SpectralField | None = None,
) -> HeatResult:
    """Integrate the forced heat equation and monitor
    ||b||^2 + 2 eta int ||Lambda^beta b||^2 - 2 int <div F, b> = ||S_R b0||^2."""
    _require_vector(b0, params.grid)
    grid = params.grid
    evolver = HeatEvolver(params, velocity, forcing)
    b = fourier_truncate(b0, params.trunc).coeffs.copy()
    initial = _l2_sq(b, grid)
    dissipation = 0.0
    work = 0.0
    peak = initial

    def record(t: float) -> HeatRecord:
        energy = _l2_sq(b, grid) + 2.0 * params.eta * dissipation - 2.0 * work
        scale = max(initial, peak)
        return HeatRecord(
            t=t,
            b_l2_sq=_l2_sq(b, grid),
            b_hbeta_sq=evolver.rates(b)[0],
            forcing_work=work,
            energy_residual=abs(energy - initial) / scale if scale > 0 else 0.0,
        )

    records = [record(0.0)]
    for n in range(1, params.n_steps + 1):
        b, diss, w = evolver.step(b)
        if not np.all(np.isfinite(b)):
            raise BlowUpError("non-finite coefficients", t=(n - 1) * params.dt)
        dissipation += diss
        work += w
        peak = max(peak, _l2_sq(b, grid))
        if n % params.record_stride == 0 or n == params.n_steps:
            records.append(record(n * params.dt))
    return HeatResult(
        records=records,
        final=SpectralField(grid, b, True, params.trunc.R),
        gronwall_exponent=gronwall_exponent(params.beta),
    )
