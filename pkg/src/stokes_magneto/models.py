"""Experiment configuration schema and the check catalog."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .fields import ModeSpec, field_from_modes, random_field
from .spectral import GridSpec, SpectralField, TruncationSpec, leray_project, zeros


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Section):
    d: int = Field(default=2, ge=2, le=3)
    M: int = Field(default=32, ge=4)
    L: float = Field(default=6.283185307179586, gt=0)

    def to_grid(self) -> GridSpec:
        return GridSpec(d=self.d, M=self.M, L=self.L)


class ModelConfig(_Section):
    alpha: float = Field(default=1.0, gt=0)
    beta: float = Field(default=1.0, gt=0)
    nu: float = Field(default=1.0, gt=0)
    eta: float = Field(default=1.0, gt=0)
    R: float | None = Field(default=None, gt=0, description="Cutoff in continuous frequency.")
    K: int | None = Field(default=None, ge=1, description="Cutoff as an integer mode radius.")

    @model_validator(mode="after")
    def _one_cutoff(self) -> ModelConfig:
        if self.R is not None and self.K is not None:
            raise ValueError("give the cutoff as R or as K, not both")
        return self

    def truncation(self, grid: GridSpec) -> TruncationSpec:
        """Explicit cutoff, or the largest mode radius the grid resolves without aliasing."""
        if self.R is not None:
            return TruncationSpec(R=self.R)
        K = self.K if self.K is not None else (grid.M - 1) // 4
        return TruncationSpec.from_modes(K, grid.L)


class TimeConfig(_Section):
    dt: float = Field(default=1e-3, gt=0)
    T_final: float = Field(default=0.05, gt=0)
    snapshot_stride: int = Field(default=0, ge=0)
    record_stride: int = Field(default=1, ge=1)


class InitialConfig(_Section):
    """Initial magnetic field: explicit modes, a seeded random field, or zero."""

    kind: Literal["modes", "random", "zero"] = "zero"
    modes: list[ModeSpec] = Field(default_factory=list)
    sigma: float = Field(default=1.0, description="Spectral slope |k|^-sigma of random data.")
    band: float | None = Field(default=None, gt=0, description="Defaults to the model cutoff.")
    amplitude: float = Field(default=1.0, ge=0, description="L^2 norm of random data.")
    seed: int | None = None

    def build(self, grid: GridSpec, trunc: TruncationSpec, seed: int) -> SpectralField:
        if self.kind == "zero":
            return zeros(grid, grid.d)
        if self.kind == "modes":
            return leray_project(field_from_modes(grid, self.modes, components=grid.d))
        rng = np.random.default_rng(self.seed if self.seed is not None else seed)
        band = self.band if self.band is not None else trunc.R
        field = random_field(
            grid, rng, components=grid.d, band=band, sigma=self.sigma, solenoidal=True
        )
        return self.amplitude * field


class SimulateSection(_Section):
    cfl_number: float = Field(default=0.5, gt=0)
    cfl_check_every: int = Field(default=20, ge=1)
    blowup_factor: float = Field(default=10.0, gt=1)
    nonlinear: bool = True
    energy_tolerance: float = 1e-6
    divergence_tolerance: float = 1e-12
    monotone_slack: float = 1e-10
    weak_tests: int = Field(default=4, ge=0)


class HeatSection(_Section):
    velocity_band: float | None = Field(default=None, gt=0, description="Frozen random velocity.")
    velocity_amplitude: float = 1.0
    forcing: list[ModeSpec] = Field(
        default_factory=list, description="Modes of the forcing tensor, component j*d + k."
    )
    energy_tolerance: float = 1e-8


class StokesSection(_Section):
    forcing_path: Path | None = Field(
        default=None, description="Tensor snapshot to solve; random tensors when absent."
    )
    alpha_values: list[float] = Field(default_factory=lambda: [0.6, 1.0, 1.5])
    trials: int = Field(default=20, ge=1)
    band: float | None = Field(default=None, gt=0, description="Defaults to the model cutoff.")
    plugback_tolerance: float = 1e-10
    energy_tolerance: float = 1e-9
    weak_tests: int = Field(default=4, ge=0)


class IdentityCase(_Section):
    part: int = Field(ge=1, le=3)
    lam: float
    indices: list[int]
    gamma: list[int]


def _default_identity_cases() -> list[IdentityCase]:
    raw = [
        (1, 3.0, [0], [1, 0, 0]),
        (1, 2.5, [0], [1, 2]),
        (1, 1.5, [1], [0, 1]),
        (2, 4.0, [0, 0], [0, 0, 0]),
        (2, 3.0, [0, 1], [1, 1]),
        (2, 2.5, [1, 1], [0, 0]),
        (3, 4.0, [0, 0, 0], [1, 0, 0]),
        (3, 3.5, [0, 0, 1], [0, 1]),
        (3, 4.5, [0, 1, 2], [1, 1, 1]),
    ]
    return [IdentityCase(part=p, lam=lam, indices=i, gamma=g) for p, lam, i, g in raw]


class KernelCheckSection(_Section):
    alpha: float = 1.0
    sigma: float = Field(default=0.5, gt=0)
    box_sizes: list[float] = Field(default_factory=lambda: [4.0, 8.0])
    points_per_unit: int = Field(default=16, ge=2)
    window: float = Field(default=1.0, gt=0)
    tolerance: float = 1e-2
    decay_directions: int = Field(default=64, ge=1)
    identity_cases: list[IdentityCase] = Field(default_factory=_default_identity_cases)
    identity_tolerance: float = 1e-6


class RegimePoint(_Section):
    d: int = Field(ge=2)
    alpha: float
    beta: float


class RegimeSection(_Section):
    points: list[RegimePoint] = Field(
        default_factory=lambda: [
            RegimePoint(d=3, alpha=1.0, beta=1.0),
            RegimePoint(d=2, alpha=1.0, beta=1.0),
        ]
    )


EstimateName = Literal[
    "product",
    "gagliardo",
    "sobolev_lorentz",
    "commutator",
    "dual_product",
    "heat_interpolation",
    "lp_sobolev",
]


class EstimateCheckSection(_Section):
    checks: list[EstimateName] = Field(
        default_factory=lambda: [
            "product",
            "gagliardo",
            "sobolev_lorentz",
            "commutator",
            "dual_product",
            "heat_interpolation",
            "lp_sobolev",
        ]
    )
    trials: int = Field(default=20, ge=1)
    band: float = Field(default=6.0, gt=0)
    sigma: float = 1.0
    mu: float = Field(default=0.0, ge=0, le=1)
    doubling: bool = True
    gagliardo: dict[str, float] = Field(
        default_factory=lambda: {"s0": 0.0, "s": 1.0, "p": 4.0, "p1": 2.0, "theta": 0.5}
    )
    sobolev_lorentz: dict[str, float] = Field(
        default_factory=lambda: {"s": 1.0, "p": 4.0, "p1": 2.0, "theta": 0.5}
    )
    commutator: dict[str, float] = Field(default_factory=lambda: {"s": 1.0, "gamma": 1.5})
    heat_beta: float = 2.0
    lp_s: float = 1.0


class ConvergenceSection(_Section):
    radii: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0])


class StabilitySection(_Section):
    delta: float = Field(default=1e-3, ge=0)
    scaling: bool = True


class BogovskiiSection(_Section):
    d: int = Field(default=2, ge=2, le=3)
    n: int = Field(default=256, ge=8)
    A: float = Field(default=4.0, gt=0)
    # fourth-order differences miss the 1e-6 tolerance at n=256
    halfwidth: float = Field(default=3.5, gt=0)
    method: Literal["spectral", "simpson"] = "spectral"
    fd_order: Literal[4, 6] = 6
    gaussians: int = Field(default=8, ge=0)
    tolerance: float = 1e-6
    refinement: bool = True


class LPCheckSection(_Section):
    j_values: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    p: float = 2.0
    q: float = 2.0
    k: int = Field(default=1, ge=0)
    trials: int = Field(default=5, ge=1)
    budget: float = 10.0
    partition_tolerance: float = 1e-10
    norm_orders: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0])
    lorentz_orders: list[float] = Field(default_factory=lambda: [2.0])


class ExperimentConfig(_Section):
    """One experiment file. Unknown keys are rejected at every level."""

    seed: int | None = None
    output_dir: Path | None = None
    grid: GridConfig = Field(default_factory=GridConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    time: TimeConfig = Field(default_factory=TimeConfig)
    initial: InitialConfig = Field(default_factory=InitialConfig)
    simulate: SimulateSection = Field(default_factory=SimulateSection)
    heat: HeatSection = Field(default_factory=HeatSection)
    stokes: StokesSection = Field(default_factory=StokesSection)
    kernel_check: KernelCheckSection = Field(default_factory=KernelCheckSection)
    regime: RegimeSection = Field(default_factory=RegimeSection)
    estimate_check: EstimateCheckSection = Field(default_factory=EstimateCheckSection)
    convergence: ConvergenceSection = Field(default_factory=ConvergenceSection)
    stability: StabilitySection = Field(default_factory=StabilitySection)
    bogovskii_check: BogovskiiSection = Field(default_factory=BogovskiiSection)
    lp_check: LPCheckSection = Field(default_factory=LPCheckSection)


class CheckEntry(BaseModel):
    suite: str
    name: str
    metric: str | list[str]
    description: str


class CheckCatalog:
    """In-memory registry of the verification checks listed in checks.json."""

    def __init__(self, raw_checks: dict[str, list[dict[str, Any]]]) -> None:
        self.checks: list[CheckEntry] = [
            CheckEntry.model_validate({"suite": suite, **entry})
            for suite, entries in raw_checks.items()
            for entry in entries
        ]

    def by_name(self, name: str) -> CheckEntry | None:
        for c in self.checks:
            if c.name == name:
                return c
        return None

    def by_suite(self, suite: str) -> list[CheckEntry]:
        return [c for c in self.checks if c.suite == suite]

    def suites(self) -> list[str]:
        return sorted({c.suite for c in self.checks})

    def names(self) -> list[str]:
        return [c.name for c in self.checks]
