"""Tests for structured JSON logging."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from stokes_magneto.logging import log_event


def _last_record(capsys: pytest.CaptureFixture[str]) -> dict:
    captured = capsys.readouterr()
    assert captured.out == ""
    return json.loads(captured.err.strip().splitlines()[-1])


def test_event_fields(capsys: pytest.CaptureFixture[str]) -> None:
    log_event("check_result", run_id="abc", experiment="regime", value=0.5, passed=True)
    record = _last_record(capsys)
    assert record["event"] == "check_result"
    assert record["level"] == "info"
    assert record["run_id"] == "abc"
    assert record["experiment"] == "regime"
    assert record["value"] == 0.5
    assert "ts" in record


def test_numpy_and_paths_are_encoded(capsys: pytest.CaptureFixture[str]) -> None:
    log_event("record_written", path=Path("runs/x.csv"), norm=np.float64(2.0), k=np.arange(3))
    record = _last_record(capsys)
    assert record["path"] == str(Path("runs/x.csv"))
    assert record["norm"] == 2.0
    assert record["k"] == [0, 1, 2]
    assert "run_id" not in record


def test_non_finite_values_stay_valid_json(capsys: pytest.CaptureFixture[str]) -> None:
    log_event("blowup_detected", level="error", norm=math.inf, values=[1.0, math.nan])
    line = capsys.readouterr().err.strip()
    record = json.loads(line, parse_constant=lambda c: pytest.fail(f"bare {c} in log"))
    assert record["norm"] == "inf"
    assert record["values"] == [1.0, "nan"]
