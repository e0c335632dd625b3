"""Shared test fixtures."""

from __future__ import annotations

import json
import math
import sqlite3
from collections.abc import Callable, Iterator
from pathlib import Path
from typing import Any

import numpy as np
import pytest
from click.testing import CliRunner

from stokes_magneto.config import load_catalog
from stokes_magneto.db import init_db
from stokes_magneto.models import CheckCatalog
from stokes_magneto.spectral import GridSpec

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture()
def catalog_data() -> dict:
    return load_catalog(ROOT / "docs" / "checks.json")


@pytest.fixture()
def catalog(catalog_data: dict) -> CheckCatalog:
    return CheckCatalog(catalog_data["CHECKS"])


@pytest.fixture()
def db_conn(tmp_path: Path) -> Iterator[sqlite3.Connection]:
    conn = init_db(tmp_path / "test.db")
    yield conn
    conn.close()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture()
def grid2() -> GridSpec:
    return GridSpec(d=2, M=32, L=2 * math.pi)


@pytest.fixture()
def grid3() -> GridSpec:
    return GridSpec(d=3, M=16, L=2 * math.pi)


@pytest.fixture()
def unit_grid() -> GridSpec:
    return GridSpec(d=2, M=32, L=1.0)


@pytest.fixture()
def write_config(tmp_path: Path) -> Callable[[dict[str, Any]], Path]:
    """Write an experiment config to a fresh JSON file and return its path."""
    counter = iter(range(1_000_000))

    def write(data: dict[str, Any]) -> Path:
        path = tmp_path / f"config_{next(counter)}.json"
        path.write_text(json.dumps(data))
        return path

    return write


@pytest.fixture()
def cli_runner(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> CliRunner:
    monkeypatch.setenv("STOKES_MAGNETO_CATALOG_PATH", str(ROOT / "docs" / "checks.json"))
    monkeypatch.setenv("STOKES_MAGNETO_DB_PATH", str(tmp_path / "results.db"))
    monkeypatch.setenv("STOKES_MAGNETO_OUTPUT_DIR", str(tmp_path / "runs"))
    return CliRunner()
