"""Structured JSON logging."""

from __future__ import annotations

import json
import math
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np


def _encode(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return float(value)


def _finite(value: Any) -> Any:
    """Non-finite floats become strings so blow-up events stay valid JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_finite(v) for v in value]
    return value


def log_event(
    event: str,
    *,
    run_id: str | None = None,
    experiment: str | None = None,
    level: str = "info",
    **extra: Any,
) -> None:
    """Write a structured JSON log line to stderr."""
    record: dict[str, Any] = {
        "ts": time.time(),
        "level": level,
        "event": event,
    }
    if run_id is not None:
        record["run_id"] = run_id
    if experiment is not None:
        record["experiment"] = experiment
    record.update(extra)
    try:
        line = json.dumps(record, default=_encode)
        if "NaN" in line or "Infinity" in line:
            line = json.dumps(_finite(json.loads(line)), allow_nan=False)
        print(line, file=sys.stderr)
    except Exception:
        pass  # a failed log line never aborts a run
