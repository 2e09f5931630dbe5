"""Run configuration: command-line flags > config file > SICSEP_* environment > defaults."""

from __future__ import annotations

import json
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from sicsep.errors import DocumentError
from sicsep.models import CorrelationMode
from sicsep.tensor import Functional

ENV_PREFIX = "SICSEP_"


class RunConfig(BaseModel):
    """Settings shared by every command.

    Attributes:
        tolerance: Algebraic tolerance (Hermiticity, trace, completeness).
        psd_tolerance: Eigenvalue floor for positivity checks.
        verdict_tolerance: Margin a report must exceed to be ENTANGLED.
        mode: Correlation construction used by ``detect`` and ``sweep``.
        partition: Partition text; ``None`` scans every canonical tree.
        povm: POVM spec, broadcast or one per subsystem.
        conjugate_assignment: Pattern over M/C, cycled over subsystems.
        functional: Matrix functional compared with the bound.
        normalization: ``auto``, ``povm`` or ``renormalized``.
        workers: Thread pool size for scans and sweeps.
        log_level: structlog filtering level.
    """

    model_config = ConfigDict(extra="forbid")

    tolerance: float = Field(default=1e-12, gt=0)
    psd_tolerance: float = Field(default=1e-10, gt=0)
    verdict_tolerance: float = Field(default=1e-9, ge=0)
    mode: CorrelationMode = CorrelationMode.UNFOLDING
    partition: str | None = None
    povm: str = "sic2"
    conjugate_assignment: str = "MCM"
    functional: Functional = Functional.TRACE_NORM
    normalization: Literal["auto", "povm", "renormalized"] = "auto"
    workers: int = Field(default=4, ge=1, le=256)
    log_level: str = "INFO"

    @field_validator("conjugate_assignment")
    @classmethod
    def validate_assignment(cls, value: str) -> str:
        cleaned = value.strip().upper()
        if not cleaned or set(cleaned) - {"M", "C"}:
            raise ValueError("conjugate_assignment may contain only M and C")
        return cleaned

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, value: str) -> str:
        return value.strip().upper()


def _from_env(environ: Mapping[str, str]) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for name in RunConfig.model_fields:
        raw = environ.get(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None and raw.strip():
            values[name] = raw.strip()
    return values


def _from_file(path: Path) -> dict[str, Any]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DocumentError(f"config file not found: {path}", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}",
            path=str(path),
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    if not isinstance(payload, dict):
        raise DocumentError(f"{path}: config must be a JSON object", path=str(path))
    return payload


def load_run_config(
    overrides: Mapping[str, Any] | None = None,
    *,
    config_path: Path | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Merge the configuration layers; ``None`` overrides are ignored."""
    merged: dict[str, Any] = _from_env(os.environ if environ is None else environ)
    source = "environment"
    if config_path is not None:
        merged.update(_from_file(config_path))
        source = str(config_path)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        raise DocumentError(f"invalid configuration ({source}): {exc}", source=source) from exc
