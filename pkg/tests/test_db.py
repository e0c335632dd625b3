"""Tests for database initialization and run recording."""

from __future__ import annotations

import sqlite3
from pathlib import Path

import pytest

from stokes_magneto.db import init_db
from stokes_magneto.models import ExperimentConfig, RegimePoint, RegimeSection
from stokes_magneto.runner import CheckOutcome, ExperimentRunner


def test_schema_version_exists(db_conn: sqlite3.Connection) -> None:
    row = db_conn.execute("SELECT version FROM schema_version").fetchone()
    assert row is not None
    assert row[0] == 1


def test_tables_created(db_conn: sqlite3.Connection) -> None:
    tables = {
        row[0]
        for row in db_conn.execute(
            "SELECT name FROM sqlite_master WHERE type='table'"
        ).fetchall()
    }
    assert "experiment_runs" in tables
    assert "check_results" in tables


def test_foreign_keys_enabled(db_conn: sqlite3.Connection) -> None:
    row = db_conn.execute("PRAGMA foreign_keys").fetchone()
    assert row[0] == 1


def test_reopen_keeps_schema(tmp_path: Path) -> None:
    init_db(tmp_path / "again.db").close()
    conn = init_db(tmp_path / "again.db")
    assert conn.execute("SELECT COUNT(*) FROM schema_version").fetchone()[0] == 1
    conn.close()


def test_version_mismatch_raises(tmp_path: Path) -> None:
    conn = init_db(tmp_path / "old.db")
    conn.execute("UPDATE schema_version SET version = 99")
    conn.commit()
    conn.close()
    with pytest.raises(RuntimeError, match="schema version mismatch"):
        init_db(tmp_path / "old.db")


def test_runner_records_checks(db_conn: sqlite3.Connection, tmp_path: Path) -> None:
    config = ExperimentConfig(
        regime=RegimeSection(points=[RegimePoint(d=2, alpha=1.0, beta=1.0)])
    )
    runner = ExperimentRunner(config, seed=3, output_dir=tmp_path / "out", conn=db_conn)
    outcome = runner.run("regime")
    assert outcome.passed

    run = db_conn.execute(
        "SELECT run_id, experiment, seed, status FROM experiment_runs"
    ).fetchone()
    assert run[1:] == ("regime", 3, "passed")
    assert len(run[0]) == 12
    rows = db_conn.execute(
        "SELECT check_name, passed FROM check_results WHERE run_id = ?", (run[0],)
    ).fetchall()
    assert rows == [("uniqueness_implies_existence", 1)]


def test_record_result_needs_existing_run(
    db_conn: sqlite3.Connection, tmp_path: Path
) -> None:
    runner = ExperimentRunner(ExperimentConfig(), seed=0, output_dir=tmp_path, conn=db_conn)
    with pytest.raises(sqlite3.IntegrityError):
        runner.record_result("missing", "regime", CheckOutcome(name="x", value=1.0, passed=True))
