"""Tests for initial data builders and FMHD snapshots."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from stokes_magneto.errors import ConfigError, ParameterRangeError
from stokes_magneto.fields import ModeSpec, field_from_modes, random_field
from stokes_magneto.norms import l2_norm_sq
from stokes_magneto.snapshot import HEADER, read_snapshot, write_snapshot
from stokes_magneto.spectral import GridSpec, divergence, inverse_transform


def test_mode_list_samples(grid2: GridSpec) -> None:
    f = field_from_modes(
        grid2,
        [ModeSpec(k=(1, 0), amplitude=2.0, phase=0.5), ModeSpec(k=(0, 0), amplitude=3.0)],
    )
    x, _ = grid2.coordinates()
    expected = 3.0 + 2.0 * np.cos(2 * np.pi * x / grid2.L + 0.5) * np.ones(grid2.shape)
    np.testing.assert_allclose(inverse_transform(f)[0], expected, atol=1e-13)


def test_mode_list_rejects_nyquist(grid2: GridSpec) -> None:
    with pytest.raises(ParameterRangeError):
        field_from_modes(grid2, [ModeSpec(k=(grid2.M // 2, 0))])


def test_random_field_is_normalized_and_solenoidal(
    grid2: GridSpec, rng: np.random.Generator
) -> None:
    b = random_field(grid2, rng, components=2, band=5 / grid2.L, solenoidal=True)
    assert l2_norm_sq(b) == pytest.approx(1.0, rel=1e-12)
    assert np.max(np.abs(divergence(b).coeffs)) < 1e-12
    assert abs(b.mean()).max() == 0.0
    assert b.mode_radius() == 5


def test_random_field_independent_of_resolution() -> None:
    coarse = GridSpec(d=2, M=16, L=1.0)
    fine = GridSpec(d=2, M=32, L=1.0)
    a = random_field(coarse, np.random.default_rng(4), band=5.0, sigma=1.5)
    b = random_field(fine, np.random.default_rng(4), band=5.0, sigma=1.5)
    np.testing.assert_allclose(
        inverse_transform(b)[0, ::2, ::2], inverse_transform(a)[0], atol=1e-13
    )


def test_random_field_band_must_be_resolved(grid2: GridSpec, rng: np.random.Generator) -> None:
    with pytest.raises(ParameterRangeError):
        random_field(grid2, rng, band=20 / grid2.L)


def test_snapshot_preserves_field(
    tmp_path: Path, grid3: GridSpec, rng: np.random.Generator
) -> None:
    f = random_field(grid3, rng, components=9, band=3 / grid3.L)
    path = tmp_path / "tensor.fmhd"
    write_snapshot(path, f)
    g = read_snapshot(path)
    assert g.grid == grid3
    assert g.c == 9
    assert g.real_valued
    np.testing.assert_array_equal(g.coeffs, f.coeffs)
    assert path.stat().st_size == HEADER.size + 9 * 16**3 * 16


def test_snapshot_header_is_checked(tmp_path: Path, grid2: GridSpec) -> None:
    path = tmp_path / "bad.fmhd"
    path.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(ConfigError, match="bad magic"):
        read_snapshot(path)
    with pytest.raises(ConfigError, match="not found"):
        read_snapshot(tmp_path / "missing.fmhd")


def test_snapshot_truncated_payload(tmp_path: Path, grid2: GridSpec) -> None:
    f = field_from_modes(grid2, [ModeSpec(k=(1, 1))])
    path = tmp_path / "short.fmhd"
    write_snapshot(path, f)
    path.write_bytes(path.read_bytes()[:-16])
    with pytest.raises(ConfigError, match="expected"):
        read_snapshot(path)


def test_snapshot_header_layout(tmp_path: Path) -> None:
    grid = GridSpec(d=2, M=8, L=math.pi)
    path = tmp_path / "one.fmhd"
    write_snapshot(path, field_from_modes(grid, [ModeSpec(k=(1, 0))]))
    magic, version, d, M, L, c, real = HEADER.unpack_from(path.read_bytes())
    assert (magic, version, d, M, L, c, real) == (b"FMHD", 1, 2, 8, math.pi, 1, 1)
