"""Configuration loading and startup validation."""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings

from .logging import log_event
from .models import ExperimentConfig


class Settings(BaseSettings):
    model_config = {"env_prefix": "STOKES_MAGNETO_"}

    catalog_path: Path = Field(
        default=Path("docs/checks.json"),
        description="Path to the verification check catalog.",
    )
    db_path: Path = Field(
        default=Path("stokes_magneto.db"),
        description="Path to SQLite results database.",
    )
    output_dir: Path = Field(
        default=Path("runs"),
        description="Directory for reports, diagnostics and snapshots.",
    )
    seed: int = Field(default=0, description="Seed used when neither flag nor config sets one.")
    record_db: bool = Field(
        default=False,
        description="Record every experiment and its checks in the results database.",
    )


def _fatal(message: str) -> None:
    print(f"FATAL: {message}", file=sys.stderr)
    sys.exit(1)


def load_catalog(path: Path) -> dict[str, Any]:
    """Load and validate the check catalog from checks.json."""
    if not path.exists():
        _fatal(f"catalog file not found: {path}")
    with open(path) as f:
        data = json.load(f)
    if "CHECKS" not in data:
        _fatal(f"missing required key 'CHECKS' in {path}")
    return data


def load_experiment_config(path: Path) -> ExperimentConfig:
    """Read and schema-validate an experiment file before any computation."""
    if not path.exists():
        _fatal(f"config file not found: {path}")
    try:
        with open(path) as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        _fatal(f"{path} is not valid JSON: {exc}")
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        _fatal(f"invalid config {path}:\n{exc}")
    log_event("config_loaded", path=str(path))
    return config


def get_settings() -> Settings:
    """Create and validate settings. Fails fast on invalid state."""
    return Settings()
