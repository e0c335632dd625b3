"""Tests for the cutoff-convergence and perturbation-stability experiments."""

from __future__ import annotations

import math

import numpy as np
import pytest

from stokes_magneto.errors import AliasError, ParameterRangeError
from stokes_magneto.evolver import ModelParams, simulate
from stokes_magneto.fields import ModeSpec, field_from_modes, random_field
from stokes_magneto.spectral import GridSpec, TruncationSpec
from stokes_magneto.suites import experiments
from stokes_magneto.suites.experiments import (
    convergence_study,
    default_perturbation,
    gronwall_envelope,
    stability_exponent,
    stability_experiment,
    stability_scaling,
)


@pytest.fixture()
def small_box() -> GridSpec:
    return GridSpec(d=2, M=72, L=0.5)


def _base(grid: GridSpec, R: float, **overrides: object) -> ModelParams:
    values: dict[str, object] = {
        "grid": grid,
        "trunc": TruncationSpec(R=R),
        "alpha": 1.0,
        "beta": 1.0,
        "dt": 1e-3,
        "T_final": 0.02,
    }
    values.update(overrides)
    return ModelParams(**values)


def test_cutoff_errors_decrease(small_box: GridSpec, rng: np.random.Generator) -> None:
    b0 = random_field(
        small_box, rng, components=2, band=16.0, sigma=2.0, solenoidal=True
    )
    report = convergence_study(_base(small_box, 16.0), [4.0, 8.0, 16.0], b0)
    assert report.radii == [4.0, 8.0, 16.0]
    assert len(report.errors) == 3
    assert report.errors[0] > 0
    assert report.decreasing


def test_shear_mode_needs_no_cutoff(small_box: GridSpec) -> None:
    # b = (sin(2 pi y / L), 0) drives no velocity, so every cutoff containing it agrees.
    b0 = field_from_modes(
        small_box, [ModeSpec(k=(0, 1), phase=-math.pi / 2)], components=2
    )
    report = convergence_study(_base(small_box, 4.0), [4.0, 8.0], b0)
    assert report.errors == pytest.approx([0.0, 0.0], abs=1e-14)
    assert report.decreasing


def test_convergence_radii_validated(small_box: GridSpec, rng: np.random.Generator) -> None:
    b0 = random_field(small_box, rng, components=2, band=4.0, solenoidal=True)
    with pytest.raises(ParameterRangeError):
        convergence_study(_base(small_box, 4.0), [8.0, 4.0], b0)
    with pytest.raises(AliasError):
        convergence_study(_base(small_box, 4.0), [16.0, 32.0], b0)


def test_stability_exponent() -> None:
    assert stability_exponent(2, 1.0, 1.0) == ("lambda", pytest.approx(0.5))
    assert stability_exponent(3, 0.75, 0.5) == ("mu", pytest.approx(0.5))


def _stability_params() -> ModelParams:
    grid = GridSpec(d=2, M=32, L=2 * math.pi)
    return ModelParams(
        grid=grid,
        trunc=TruncationSpec.from_modes(4, grid.L),
        alpha=1.0,
        beta=1.0,
        dt=0.01,
        T_final=0.5,
    )


def test_perturbation_distance_scales_quadratically(rng: np.random.Generator) -> None:
    params = _stability_params()
    b0 = random_field(
        params.grid, rng, components=2, band=params.trunc.R, solenoidal=True
    )
    perturbation = default_perturbation(params, rng)
    report = stability_scaling(params, b0, 1e-3, perturbation)
    assert report.envelope_holds
    assert report.in_theory
    assert report.exponent_name == "lambda"
    assert report.scaling_ratio is not None
    assert 3.2 <= report.scaling_ratio <= 4.8
    assert report.scaling_passed
    assert report.distance[0] == pytest.approx(1e-6, rel=1e-9)


def test_identical_data_stay_identical(rng: np.random.Generator) -> None:
    params = _stability_params()
    b0 = random_field(
        params.grid, rng, components=2, band=params.trunc.R, solenoidal=True
    )
    report = stability_experiment(params, b0, 0.0, default_perturbation(params, rng))
    assert report.envelope_holds
    assert max(report.distance) == 0.0
    assert report.fitted_constant == 0.0
    assert report.phi_integral[0] == 0.0
    assert all(b > a for a, b in zip(report.phi_integral, report.phi_integral[1:], strict=False))


def test_zero_data_counts_as_converged(small_box: GridSpec) -> None:
    b0 = field_from_modes(small_box, [], components=2)
    report = convergence_study(_base(small_box, 4.0), [4.0, 8.0], b0)
    assert report.errors == [0.0, 0.0]
    assert report.decreasing


def test_envelope_holds_for_exponential_growth_in_phi() -> None:
    Phi = np.linspace(0.0, 2.0, 21)
    distance = 1e-6 * np.exp(0.5 * Phi)
    fitted, n_fit, holds = gronwall_envelope(distance, Phi)
    assert n_fit == 11
    assert fitted == pytest.approx(0.5)
    assert holds


def test_envelope_fails_when_growth_outpaces_phi() -> None:
    # log D grows like Phi^2, so a constant fitted on the early records
    # underestimates the held-out ones.
    Phi = np.linspace(0.0, 2.0, 21)
    distance = 1e-6 * np.exp(0.5 * Phi**2)
    fitted, _, holds = gronwall_envelope(distance, Phi)
    assert fitted == pytest.approx(0.5 * Phi[10])
    assert not holds


def test_envelope_fit_fraction_validated() -> None:
    Phi = np.linspace(0.0, 1.0, 5)
    with pytest.raises(ParameterRangeError):
        gronwall_envelope(np.ones(5), Phi, fit_fraction=1.0)


def test_decaying_distance_fits_zero_constant() -> None:
    Phi = np.linspace(0.0, 1.0, 11)
    fitted, _, holds = gronwall_envelope(np.exp(-Phi), Phi)
    assert fitted == 0.0
    assert holds


def test_scaling_reuses_the_unperturbed_run(
    rng: np.random.Generator, monkeypatch: pytest.MonkeyPatch
) -> None:
    params = _stability_params()
    b0 = random_field(
        params.grid, rng, components=2, band=params.trunc.R, solenoidal=True
    )
    perturbation = default_perturbation(params, rng)
    calls: list[float] = []

    def counting_simulate(*args: object, **kwargs: object) -> object:
        calls.append(1.0)
        return simulate(*args, **kwargs)  # type: ignore[arg-type]

    monkeypatch.setattr(experiments, "simulate", counting_simulate)
    report = stability_scaling(params, b0, 1e-3, perturbation)
    assert len(calls) == 3
    direct = stability_experiment(params, b0, 1e-3, perturbation)
    assert direct.distance == report.distance
    assert direct.fitted_constant == report.fitted_constant
