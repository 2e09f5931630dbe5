"""Parameter sweeps over named state families, written as CSV."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Literal, TextIO

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from sicsep.criteria import VERDICT_TOLERANCE, evaluate
from sicsep.errors import (
    DocumentError,
    InvalidStateError,
    ParameterRangeError,
    SweepGuardError,
)
from sicsep.logging import get_logger
from sicsep.models import CorrelationMode
from sicsep.partitions import chain, parse_partition
from sicsep.povm import resolve_povms
from sicsep.states import build_named_state
from sicsep.tensor import Functional

logger = get_logger(__name__)

MAX_GRID_POINTS = 1_000_000
OUT_OF_DOMAIN = "OUT_OF_DOMAIN"
RESULT_FIELDS = ("trace_norm", "bound", "margin", "verdict")
# Axis that feeds the GSIC family parameter instead of the state.
FAMILY_AXIS = "t"


class SweepAxis(BaseModel):
    """Inclusive grid start, start + step, ..., stop."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    start: float
    stop: float
    step: float = Field(..., gt=0)
    exclude_zero: bool = Field(default=False, description="Drop the point at 0 (GSIC t axes)")

    @model_validator(mode="after")
    def validate_range(self) -> SweepAxis:
        if self.stop < self.start:
            raise ValueError(f"axis {self.name}: stop {self.stop} is below start {self.start}")
        return self

    @property
    def count(self) -> int:
        return int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1

    def values(self) -> list[float]:
        last = self.start + (self.count - 1) * self.step
        grid = np.linspace(self.start, last, self.count)
        # Snap to the step lattice so 0.05-step grids print as 0.05, 0.1, ...
        points = [round(float(v), 12) for v in grid]
        if self.exclude_zero:
            points = [v for v in points if v != 0.0]
        return points


class SweepSpec(BaseModel):
    """Everything a sweep needs; axes vary, ``params`` stay fixed."""

    model_config = ConfigDict(extra="forbid")

    state: str
    params: dict[str, float] = Field(default_factory=dict)
    axes: list[SweepAxis] = Field(..., min_length=1)
    povm: str = "sic2"
    conjugate_assignment: str = "MCM"
    normalization: Literal["auto", "povm", "renormalized"] = "auto"
    extended: bool = False
    t: float | None = Field(default=None, description="GSIC t when no axis is named t")
    partition: str | None = Field(default=None, description="Defaults to the full chain")
    mode: CorrelationMode = CorrelationMode.UNFOLDING
    functional: Functional = Functional.TRACE_NORM
    verdict_tolerance: float = VERDICT_TOLERANCE
    output: Path | None = None

    @model_validator(mode="after")
    def validate_axes(self) -> SweepSpec:
        names = [axis.name for axis in self.axes]
        if len(set(names)) != len(names):
            raise ValueError(f"axis names repeat: {names}")
        clash = sorted(set(names) & set(self.params))
        if clash:
            raise ValueError(f"parameters {clash} are both fixed and swept")
        return self

    @property
    def grid_size(self) -> int:
        return math.prod(axis.count for axis in self.axes)

    @property
    def fieldnames(self) -> list[str]:
        return [axis.name for axis in self.axes] + list(RESULT_FIELDS)


def load_sweep_spec(path: Path) -> SweepSpec:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return SweepSpec.model_validate(raw)
    except FileNotFoundError as exc:
        raise DocumentError(f"sweep spec not found: {path}", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}",
            path=str(path),
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    except ValidationError as exc:
        raise DocumentError(f"{path}: invalid sweep spec: {exc}", path=str(path)) from exc


def _evaluate_point(spec: SweepSpec, point: dict[str, float]) -> dict[str, Any]:
    params = dict(spec.params)
    params.update({k: v for k, v in point.items() if k != FAMILY_AXIS})
    row: dict[str, Any] = dict(point)
    try:
        rho = build_named_state(spec.state, params)
        povms = resolve_povms(
            spec.povm,
            rho.dims,
            conjugate_assignment=spec.conjugate_assignment,
            normalization=spec.normalization,
            t=point.get(FAMILY_AXIS, spec.t),
            extended=spec.extended,
        )
    except (ParameterRangeError, InvalidStateError):
        row.update({field: "" for field in RESULT_FIELDS})
        row["verdict"] = OUT_OF_DOMAIN
        return row
    tree = (
        parse_partition(spec.partition, rho.n_subsystems)
        if spec.partition
        else chain(list(range(rho.n_subsystems)))
    )
    report = evaluate(
        rho,
        povms,
        tree,
        spec.mode,
        functional=spec.functional,
        verdict_tolerance=spec.verdict_tolerance,
    )
    row.update(
        trace_norm=report.trace_norm,
        bound=report.bound.value,
        margin=report.margin,
        verdict=report.verdict.value,
    )
    return row


def run_sweep(spec: SweepSpec, *, workers: int = 4) -> list[dict[str, Any]]:
    """One row per grid point, in grid order (last axis fastest)."""
    if spec.grid_size > MAX_GRID_POINTS:
        raise SweepGuardError(
            f"sweep grid has {spec.grid_size} points, limit is {MAX_GRID_POINTS}",
            points=spec.grid_size,
        )
    names = [axis.name for axis in spec.axes]
    points = [
        dict(zip(names, combo, strict=True))
        for combo in itertools.product(*(axis.values() for axis in spec.axes))
    ]
    if not points:
        raise SweepGuardError("sweep grid is empty")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda p: _evaluate_point(spec, p), points))
    logger.info(
        "sweep_completed",
        state=spec.state,
        points=len(rows),
        out_of_domain=sum(1 for r in rows if r["verdict"] == OUT_OF_DOMAIN),
    )
    return rows


def _format(value: Any) -> Any:
    if isinstance(value, float):
        return format(value, ".17g")
    return value


def write_csv(rows: list[dict[str, Any]], fieldnames: list[str], stream: TextIO) -> None:
    """Header plus one line per row; floats at 17 significant digits."""
    writer = csv.DictWriter(
        stream, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n"
    )
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _format(row.get(k, "")) for k in fieldnames})


def write_sweep_csv(rows: list[dict[str, Any]], fieldnames: list[str], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        write_csv(rows, fieldnames, handle)


def render_csv(rows: list[dict[str, Any]], fieldnames: list[str]) -> str:
    buffer = io.StringIO()
    write_csv(rows, fieldnames, buffer)
    return buffer.getvalue()
