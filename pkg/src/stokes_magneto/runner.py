"""Experiment runner: builds parameters from a config, runs one experiment and records it."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sqlite3
import uuid
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from .bogovskii import (
    BoxGrid,
    bogovskii_check,
    gaussian,
    refinement_order,
    smooth_corpus,
    unit_weights,
)
from .errors import CheckFailure, ComponentMismatchError, ConfigError
from .evolver import CSV_COLUMNS, DiagnosticRecord, ModelParams, heat_solve, simulate
from .fields import field_from_modes, random_field
from .kernel import (
    KernelSpec,
    fourier_identity_check,
    kernel_box_comparison,
    kernel_coefficient,
    kernel_decay_constant,
    moment_forcing,
)
from .logging import log_event
from .models import ExperimentConfig
from .norms import LPBumpSpec, bernstein_sweep, norm_profile, partition_defect
from .snapshot import read_snapshot, write_snapshot
from .spectral import GridSpec, SpectralField, outer_product
from .stokes import (
    random_test_fields,
    solve_stokes_spectral,
    stokes_energy_residual,
    stokes_plugback_residual,
    very_weak_residual,
)
from .suites.estimates import (
    EstimateReport,
    commutator_check,
    dual_product_check,
    gagliardo_check,
    heat_interpolation_check,
    lp_sobolev_comparison,
    product_estimate_check,
    resolution_doubling,
    sobolev_lorentz_check,
)
from .suites.experiments import (
    convergence_study,
    default_perturbation,
    stability_experiment,
    stability_scaling,
)
from .suites.regime import classify_regime, exponent_search

REFINEMENT_ORDER = 4.0
REFINEMENT_SLACK = 0.5
HEAT_SHARP_SLACK = 1e-9
KERNEL_REFERENCE_TOLERANCE = 1e-12


class CheckOutcome(BaseModel):
    name: str
    value: float | None
    passed: bool


class ExperimentOutcome(BaseModel):
    experiment: str
    payload: dict[str, Any]
    checks: list[CheckOutcome]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def require_passed(self) -> None:
        failed = [c.name for c in self.checks if not c.passed]
        if failed:
            raise CheckFailure(f"checks failed: {', '.join(failed)}", report=self.report())

    def report(self) -> dict[str, Any]:
        checks = [c.model_dump() for c in self.checks]
        return {
            "experiment": self.experiment,
            "checks": checks,
            "passed": self.passed,
            **self.payload,
        }


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(config.model_dump_json().encode()).hexdigest()[:16]


def build_params(config: ExperimentConfig) -> ModelParams:
    """ModelParams for the config's grid, model, time and simulate sections."""
    grid = config.grid.to_grid()
    section = config.simulate
    return ModelParams(
        grid=grid,
        trunc=config.model.truncation(grid),
        alpha=config.model.alpha,
        beta=config.model.beta,
        nu=config.model.nu,
        eta=config.model.eta,
        dt=config.time.dt,
        T_final=config.time.T_final,
        snapshot_stride=config.time.snapshot_stride,
        record_stride=config.time.record_stride,
        cfl_check_every=section.cfl_check_every,
        cfl_number=section.cfl_number,
        blowup_factor=section.blowup_factor,
        nonlinear=section.nonlinear,
    )


def _max(values: list[float]) -> float:
    return max(values, default=0.0)


class ExperimentRunner:
    """Dispatches experiments, writes their reports and optionally records them."""

    def __init__(
        self,
        config: ExperimentConfig,
        *,
        seed: int,
        output_dir: Path,
        conn: sqlite3.Connection | None = None,
    ) -> None:
        self.config = config
        self.seed = seed
        self.output_dir = output_dir
        self.conn = conn
        self.experiments: dict[str, Callable[[], ExperimentOutcome]] = {
            "simulate": self.simulate,
            "heat": self.heat,
            "stokes": self.stokes,
            "kernel-check": self.kernel_check,
            "regime": self.regime,
            "estimate-check": self.estimate_check,
            "convergence": self.convergence,
            "stability": self.stability,
            "bogovskii-check": self.bogovskii_check,
            "lp-check": self.lp_check,
        }

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def _db(self) -> sqlite3.Connection:
        if self.conn is None:
            raise RuntimeError("No results database attached to this runner.")
        return self.conn

    def create_run(self, experiment: str) -> str:
        run_id = uuid.uuid4().hex[:12]
        self._db().execute(
            "INSERT INTO experiment_runs (run_id, experiment, config_hash, seed) "
            "VALUES (?, ?, ?, ?)",
            (run_id, experiment, config_hash(self.config), self.seed),
        )
        self._db().commit()
        log_event("run_created", run_id=run_id, experiment=experiment, seed=self.seed)
        return run_id

    def record_result(
        self,
        run_id: str,
        experiment: str,
        check: CheckOutcome,
        metadata: dict[str, Any] | None = None,
    ) -> None:
        self._db().execute(
            "INSERT INTO check_results "
            "(run_id, experiment, check_name, metric_value, passed, metadata) "
            "VALUES (?, ?, ?, ?, ?, ?)",
            (
                run_id,
                experiment,
                check.name,
                check.value,
                int(check.passed),
                json.dumps(metadata),
            ),
        )
        self._db().commit()
        log_event(
            "result_recorded",
            run_id=run_id,
            experiment=experiment,
            check=check.name,
            value=check.value,
        )

    def finish_run(self, run_id: str, status: str) -> None:
        self._db().execute(
            "UPDATE experiment_runs SET status = ? WHERE run_id = ?", (status, run_id)
        )
        self._db().commit()

    def run(self, experiment: str) -> ExperimentOutcome:
        """Run one experiment and write <output_dir>/<experiment>.json."""
        if experiment not in self.experiments:
            raise ConfigError(f"unknown experiment {experiment!r}")
        self.output_dir.mkdir(parents=True, exist_ok=True)
        run_id = self.create_run(experiment) if self.conn is not None else None
        log_event("experiment_started", run_id=run_id, experiment=experiment, seed=self.seed)
        try:
            outcome = self.experiments[experiment]()
        except Exception:
            if run_id is not None:
                self.finish_run(run_id, "error")
            raise
        for check in outcome.checks:
            log_event(
                "check_result",
                run_id=run_id,
                experiment=experiment,
                check=check.name,
                value=check.value,
                passed=check.passed,
            )
            if run_id is not None:
                self.record_result(run_id, experiment, check)
        if run_id is not None:
            self.finish_run(run_id, "passed" if outcome.passed else "failed")

        path = self.output_dir / f"{experiment}.json"
        path.write_text(json.dumps(outcome.report(), sort_keys=True, indent=2, default=float))
        log_event(
            "experiment_finished",
            run_id=run_id,
            experiment=experiment,
            passed=outcome.passed,
            report=str(path),
        )
        return outcome

    def simulate(self) -> ExperimentOutcome:
        config = self.config
        section = config.simulate
        params = build_params(config)
        b0 = config.initial.build(params.grid, params.trunc, self.seed)
        snapshot_dir = self.output_dir if params.snapshot_stride else None

        csv_path = self.output_dir / "diagnostics.csv"
        with open(csv_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)

            def write_record(record: DiagnosticRecord) -> None:
                writer.writerow(record.as_row())

            result = simulate(params, b0, snapshot_dir=snapshot_dir, on_record=write_record)
        log_event("record_written", path=str(csv_path), records=len(result.records))

        norms = [math.sqrt(r.b_l2_sq) for r in result.records]
        initial_norm = norms[0]
        increase = max((b - a for a, b in zip(norms, norms[1:], strict=False)), default=0.0)
        divergence = max(
            max(r.max_div_b, r.max_div_u) / math.sqrt(r.b_l2_sq) if r.b_l2_sq > 0 else 0.0
            for r in result.records
        )
        energy = _max([r.energy_residual for r in result.records])
        checks = [
            CheckOutcome(
                name="energy_identity", value=energy, passed=energy < section.energy_tolerance
            ),
            CheckOutcome(
                name="monotone_decay",
                value=increase,
                passed=increase <= section.monotone_slack * max(initial_norm, 1.0),
            ),
            CheckOutcome(
                name="divergence_free",
                value=divergence,
                passed=divergence <= section.divergence_tolerance,
            ),
        ]

        payload: dict[str, Any] = {
            "params": params.model_dump(),
            "records": len(result.records),
            "final": result.records[-1].model_dump(),
            "initial_energy": result.initial_energy,
            "velocity_dissipation": result.velocity_dissipation,
            "magnetic_dissipation": result.magnetic_dissipation,
            "snapshots": [p.name for p in result.snapshots],
            "lorentz_constant_min": min(result.lorentz_constants, default=None),
            "lorentz_constant_max": max(result.lorentz_constants, default=None),
        }
        if section.weak_tests and params.nonlinear:
            grid, trunc = params.grid, params.trunc
            tensor = outer_product(result.final, result.final, trunc.scaled(2.0))
            tests = random_test_fields(grid, self.rng(), section.weak_tests, trunc.R)
            weak = very_weak_residual(
                result.velocity, tensor, params.alpha, tests, nu=params.nu
            )
            payload["very_weak_residual"] = weak
        return ExperimentOutcome(experiment="simulate", payload=payload, checks=checks)

    def heat(self) -> ExperimentOutcome:
        config = self.config
        section = config.heat
        params = build_params(config)
        grid = params.grid
        rng = self.rng()
        b0 = config.initial.build(grid, params.trunc, self.seed)
        velocity = None
        if section.velocity_band is not None:
            velocity = section.velocity_amplitude * random_field(
                grid, rng, components=grid.d, band=section.velocity_band, solenoidal=True
            )
        forcing = None
        if section.forcing:
            forcing = field_from_modes(grid, section.forcing, components=grid.d * grid.d)
        result = heat_solve(params, b0, velocity=velocity, forcing=forcing)
        residual = _max([r.energy_residual for r in result.records])
        checks = [
            CheckOutcome(
                name="heat_energy_balance",
                value=residual,
                passed=residual < section.energy_tolerance,
            )
        ]
        payload = {
            "gronwall_exponent": result.gronwall_exponent,
            "records": [r.model_dump() for r in result.records],
        }
        return ExperimentOutcome(experiment="heat", payload=payload, checks=checks)

    def _stokes_forcings(self, grid: GridSpec, band: float) -> list[SpectralField]:
        section = self.config.stokes
        if section.forcing_path is not None:
            F = read_snapshot(section.forcing_path)
            if F.c != F.d * F.d:
                raise ComponentMismatchError(
                    f"forcing snapshot has {F.c} components, need {F.d**2}"
                )
            return [F]
        rng = self.rng()
        return [
            random_field(grid, rng, components=grid.d * grid.d, band=band)
            for _ in range(section.trials)
        ]

    def stokes(self) -> ExperimentOutcome:
        config = self.config
        section = config.stokes
        grid = config.grid.to_grid()
        band = section.band or config.model.truncation(grid).R
        forcings = self._stokes_forcings(grid, band)
        grid = forcings[0].grid
        tests = random_test_fields(grid, self.rng(), section.weak_tests, band)

        by_alpha: dict[str, dict[str, Any]] = {}
        plugback: list[float] = []
        energy: list[float] = []
        for alpha in section.alpha_values:
            rows = []
            for F in forcings:
                sol = solve_stokes_spectral(F, alpha, config.model.nu)
                rows.append(
                    (
                        stokes_plugback_residual(sol, F),
                        stokes_energy_residual(sol, F),
                        very_weak_residual(sol.velocity, F, alpha, tests, config.model.nu),
                    )
                )
            plugback.append(max(r[0] for r in rows))
            energy.append(max(r[1] for r in rows))
            by_alpha[f"{alpha:g}"] = {
                "plugback_residual": plugback[-1],
                "energy_residual": energy[-1],
                "very_weak_residual": max(r[2] for r in rows),
                "in_theory_range": 0.5 < alpha < (grid.d + 1) / 2,
            }

        primary = solve_stokes_spectral(forcings[0], config.model.alpha, config.model.nu)
        write_snapshot(self.output_dir / "velocity.fmhd", primary.velocity)
        write_snapshot(self.output_dir / "pressure.fmhd", primary.pressure)

        checks = [
            CheckOutcome(
                name="stokes_plugback",
                value=_max(plugback),
                passed=_max(plugback) < section.plugback_tolerance,
            ),
            CheckOutcome(
                name="stokes_energy",
                value=_max(energy),
                passed=_max(energy) < section.energy_tolerance,
            ),
        ]
        payload = {
            "alpha": config.model.alpha,
            "energy_residual": stokes_energy_residual(primary, forcings[0]),
            "plugback_residual": stokes_plugback_residual(primary, forcings[0]),
            "forcings": len(forcings),
            "by_alpha": by_alpha,
        }
        return ExperimentOutcome(experiment="stokes", payload=payload, checks=checks)

    def kernel_check(self) -> ExperimentOutcome:
        config = self.config
        section = config.kernel_check
        d, nu = config.grid.d, config.model.nu
        spec = KernelSpec(alpha=section.alpha, d=d, nu=nu)
        forcing = moment_forcing(d, section.sigma)

        boxes = []
        for L in section.box_sizes:
            M = 2 * round(section.points_per_unit * L / 2)
            box = GridSpec(d=d, M=M, L=L)
            error = kernel_box_comparison(forcing, box, section.alpha, section.window, nu)
            boxes.append({"L": L, "M": M, "error": error})
        errors = [b["error"] for b in boxes]

        identities = [
            fourier_identity_check(
                case.part, case.lam, case.indices, case.gamma, section.identity_tolerance
            )
            for case in section.identity_cases
        ]
        reference = abs(kernel_coefficient(1.0, 3) - 1.0 / (8.0 * math.pi))
        checks = [
            CheckOutcome(
                name="kernel_coefficient_reference",
                value=reference,
                passed=reference < KERNEL_REFERENCE_TOLERANCE,
            ),
            CheckOutcome(
                name="kernel_box_error",
                value=errors[-1] if errors else None,
                passed=bool(errors) and errors[-1] < section.tolerance,
            ),
            CheckOutcome(
                name="kernel_box_refinement",
                value=None,
                passed=all(b < a for a, b in zip(errors, errors[1:], strict=False)),
            ),
        ]
        for part in (1, 2, 3):
            reports = [r for r in identities if r.part == part]
            if reports:
                checks.append(
                    CheckOutcome(
                        name=f"fourier_identity_part{part}",
                        value=max(r.discrepancy for r in reports),
                        passed=all(r.passed for r in reports),
                    )
                )
        payload = {
            "alpha": section.alpha,
            "d": d,
            "coefficient": spec.coefficient,
            "decay_constant": kernel_decay_constant(spec, section.decay_directions, self.rng()),
            "boxes": boxes,
            "identities": [r.model_dump() for r in identities],
        }
        return ExperimentOutcome(experiment="kernel-check", payload=payload, checks=checks)

    def regime(self) -> ExperimentOutcome:
        reports = [classify_regime(p.d, p.alpha, p.beta) for p in self.config.regime.points]
        violations = sum(1 for r in reports if r.uniqueness and not r.existence)
        checks = [
            CheckOutcome(
                name="uniqueness_implies_existence",
                value=float(violations),
                passed=violations == 0,
            )
        ]
        payload = {"reports": [r.model_dump() for r in reports]}
        return ExperimentOutcome(experiment="regime", payload=payload, checks=checks)

    def _estimate_runner(self, name: str) -> Callable[[GridSpec], EstimateReport]:
        """Check bound to a fresh generator per call, so every grid sees the same fields."""
        config = self.config
        section = config.estimate_check
        trials, band, sigma = section.trials, section.band, section.sigma
        alpha, beta = config.model.alpha, config.model.beta
        if name == "product":
            selection = exponent_search(config.grid.d, alpha, beta, section.mu)
            return lambda g: product_estimate_check(
                g, selection, trials, self.rng(), band=band, sigma=sigma
            )
        if name == "gagliardo":
            kw = section.gagliardo
            return lambda g: gagliardo_check(
                g,
                kw["s0"],
                kw["s"],
                kw["p"],
                kw["p1"],
                kw["theta"],
                trials,
                self.rng(),
                band=band,
                sigma=sigma,
            )
        if name == "sobolev_lorentz":
            kw = section.sobolev_lorentz
            return lambda g: sobolev_lorentz_check(
                g, kw["s"], kw["p"], kw["p1"], kw["theta"], trials, self.rng(), band, sigma
            )
        if name == "commutator":
            kw = section.commutator
            return lambda g: commutator_check(g, kw["s"], kw["gamma"], trials, self.rng(), band)
        if name == "dual_product":
            return lambda g: dual_product_check(g, alpha, beta, trials, self.rng(), band, sigma)
        if name == "heat_interpolation":
            return lambda g: heat_interpolation_check(
                g, section.heat_beta, trials, self.rng(), band
            )
        if name == "lp_sobolev":
            return lambda g: lp_sobolev_comparison(
                g, section.lp_s, trials, self.rng(), band, sigma
            )
        raise ConfigError(f"unknown estimate check {name!r}")

    def estimate_check(self) -> ExperimentOutcome:
        section = self.config.estimate_check
        grid = self.config.grid.to_grid()
        reports: dict[str, Any] = {}
        checks: list[CheckOutcome] = []
        for name in section.checks:
            run = self._estimate_runner(name)
            if section.doubling:
                doubling = resolution_doubling(name, run, grid)
                reports[name] = doubling.model_dump()
                report = doubling.fine
                checks.append(
                    CheckOutcome(
                        name=f"{name}_doubling", value=doubling.growth, passed=doubling.passed
                    )
                )
            else:
                report = run(grid)
                reports[name] = report.model_dump()
            bounded = report.max_ratio is not None and math.isfinite(report.max_ratio)
            checks.append(
                CheckOutcome(name=f"{name}_bounded", value=report.max_ratio, passed=bounded)
            )
            if name == "heat_interpolation":
                sharp = bounded and report.max_ratio <= 1.0 + HEAT_SHARP_SLACK
                checks.append(
                    CheckOutcome(
                        name="heat_interpolation_sharp", value=report.max_ratio, passed=sharp
                    )
                )
        payload = {"reports": reports}
        return ExperimentOutcome(experiment="estimate-check", payload=payload, checks=checks)

    def convergence(self) -> ExperimentOutcome:
        config = self.config
        params = build_params(config)
        b0 = config.initial.build(params.grid, params.trunc, self.seed)
        report = convergence_study(params, config.convergence.radii, b0)
        checks = [
            CheckOutcome(
                name="convergence_decreasing",
                value=report.errors[-1],
                passed=report.decreasing,
            )
        ]
        return ExperimentOutcome(
            experiment="convergence", payload=report.model_dump(), checks=checks
        )

    def stability(self) -> ExperimentOutcome:
        config = self.config
        section = config.stability
        params = build_params(config)
        b0 = config.initial.build(params.grid, params.trunc, self.seed)
        # a stream independent of the one that drew random initial data
        perturbation = default_perturbation(params, np.random.default_rng([self.seed, 1]))
        if section.scaling:
            report = stability_scaling(params, b0, section.delta, perturbation)
        else:
            report = stability_experiment(params, b0, section.delta, perturbation)
        checks = [
            CheckOutcome(
                name="gronwall_envelope",
                value=report.fitted_constant,
                passed=report.envelope_holds,
            )
        ]
        if section.scaling:
            checks.append(
                CheckOutcome(
                    name="quadratic_scaling",
                    value=report.scaling_ratio,
                    passed=bool(report.scaling_passed),
                )
            )
        return ExperimentOutcome(experiment="stability", payload=report.model_dump(), checks=checks)

    def bogovskii_check(self) -> ExperimentOutcome:
        section = self.config.bogovskii_check
        box = BoxGrid(d=section.d, n=section.n, A=section.A)
        weights = unit_weights(box, section.halfwidth)
        corpus = smooth_corpus(box, self.rng(), weights, section.gaussians)
        report = bogovskii_check(
            box,
            corpus,
            weights,
            section.halfwidth,
            section.method,
            section.fd_order,
            section.tolerance,
        )
        checks = [
            CheckOutcome(name="bogovskii_divergence", value=report.max_error, passed=report.passed)
        ]
        payload: dict[str, Any] = {"report": report.model_dump()}
        if section.refinement:
            order = refinement_order(
                lambda g: gaussian(g, np.zeros(g.d), 0.45),
                box,
                section.halfwidth,
                section.method,
                section.fd_order,
            )
            required = min(REFINEMENT_ORDER, section.fd_order - REFINEMENT_SLACK)
            payload["refinement_order"] = order
            checks.append(
                CheckOutcome(name="bogovskii_refinement", value=order, passed=order >= required)
            )
        return ExperimentOutcome(experiment="bogovskii-check", payload=payload, checks=checks)

    def lp_check(self) -> ExperimentOutcome:
        section = self.config.lp_check
        grid = self.config.grid.to_grid()
        bumps = LPBumpSpec()
        radii = np.linspace(0.0, 64.0, 4097)
        inhomogeneous, homogeneous = partition_defect(bumps, radii)
        defect = max(inhomogeneous, homogeneous)
        sweep = bernstein_sweep(
            grid,
            section.j_values,
            section.p,
            section.q,
            section.k,
            section.trials,
            self.rng(),
            section.budget,
        )
        checks = [
            CheckOutcome(
                name="lp_partition",
                value=defect,
                passed=defect < section.partition_tolerance,
            ),
            CheckOutcome(name="bernstein_stability", value=sweep.stability, passed=sweep.passed),
        ]
        sample = random_field(grid, self.rng(), band=(grid.M // 4) / grid.L)
        norms = norm_profile(sample, section.norm_orders, section.lorentz_orders)
        payload = {
            "partition_inhomogeneous": inhomogeneous,
            "partition_homogeneous": homogeneous,
            "bernstein": sweep.model_dump(),
            "norms": [report.model_dump() for report in norms],
        }
        return ExperimentOutcome(experiment="lp-check", payload=payload, checks=checks)

