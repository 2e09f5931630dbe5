"""Pydantic models for sicsep.

This module defines the data structures exchanged with the outside world:
- State and POVM documents (JSON files read and written by the CLI)
- POVM validation reports
- Separable bounds and criterion reports
- Example reproduction summaries

Complex matrices travel as flat row-major lists of ``[re, im]`` pairs. JSON
floats use Python's shortest round-trip repr, so a write/read cycle is
bit-faithful.
"""

from __future__ import annotations

from enum import StrEnum
from typing import Any, Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sicsep.tensor import DenseMatrix, Functional

ComplexPair = tuple[float, float]


class PovmKind(StrEnum):
    SIC = "sic"
    GSIC = "gsic"
    GENERIC = "generic"


class Normalization(StrEnum):
    POVM = "povm"
    RENORMALIZED = "renormalized"


class CorrelationMode(StrEnum):
    """Which correlation matrix a partition tree is turned into."""

    BLOCK_DIAG = "blockdiag"
    MARGINAL_KRON = "marginal"
    UNFOLDING = "unfolding"


class Verdict(StrEnum):
    ENTANGLED = "ENTANGLED"
    INCONCLUSIVE = "INCONCLUSIVE"


def matrix_to_pairs(matrix: npt.ArrayLike) -> list[ComplexPair]:
    """Flatten a complex matrix to row-major ``[re, im]`` pairs."""
    flat = np.asarray(matrix, dtype=np.complex128).reshape(-1)
    return [(float(z.real), float(z.imag)) for z in flat]


def pairs_to_matrix(pairs: list[ComplexPair], side: int) -> DenseMatrix:
    """Inverse of :func:`matrix_to_pairs` for a square ``side`` x ``side`` matrix."""
    if len(pairs) != side * side:
        raise ValueError(
            f"expected {side * side} entries for a {side}x{side} matrix, got {len(pairs)}"
        )
    values = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    return values.reshape(side, side)


class StateDocument(BaseModel):
    """Density matrix on disk.

    Either ``name`` (plus ``params``) selects a built-in family, or ``matrix``
    carries the entries explicitly. Raw matrices are validated on load.

    Attributes:
        dims: Ordered subsystem dimensions.
        name: Built-in family name, e.g. ``example1_rho``.
        params: Family parameters.
        matrix: Row-major ``[re, im]`` entries.
        label: Free-form descriptor used in reports.
    """

    model_config = ConfigDict(extra="forbid")

    dims: list[int] = Field(..., description="Subsystem dimensions, A leftmost")
    name: str | None = Field(default=None, description="Named state family")
    params: dict[str, float] = Field(default_factory=dict, description="Family parameters")
    matrix: list[ComplexPair] | None = Field(default=None, description="Row-major entries")
    label: str | None = Field(default=None, description="Descriptor for reports")

    @field_validator("dims")
    @classmethod
    def validate_dims(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("dims must be non-empty")
        if any(d < 1 for d in value):
            raise ValueError("dims must be positive")
        return value

    @model_validator(mode="after")
    def validate_source(self) -> StateDocument:
        if (self.name is None) == (self.matrix is None):
            raise ValueError("exactly one of 'name' or 'matrix' must be given")
        if self.matrix is not None:
            side = int(np.prod(self.dims))
            if len(self.matrix) != side * side:
                raise ValueError(
                    f"matrix has {len(self.matrix)} entries, dims {self.dims} need {side * side}"
                )
        return self


class PovmDocument(BaseModel):
    """POVM on disk; ``elements`` holds d² row-major element matrices."""

    model_config = ConfigDict(extra="forbid")

    dim: int = Field(..., ge=1, description="Subsystem dimension d")
    kind: PovmKind = Field(default=PovmKind.GENERIC)
    parameter: float | None = Field(default=None, description="GSIC purity a")
    normalization: Normalization = Field(default=Normalization.POVM)
    label: str = Field(default="file")
    elements: list[list[ComplexPair]] = Field(..., description="d² elements, row-major")

    @model_validator(mode="after")
    def validate_shape(self) -> PovmDocument:
        count = self.dim * self.dim
        if len(self.elements) != count:
            raise ValueError(
                f"expected {count} elements for dim {self.dim}, got {len(self.elements)}"
            )
        for index, element in enumerate(self.elements):
            if len(element) != count:
                raise ValueError(f"element {index} has {len(element)} entries, expected {count}")
        return self


class ValidationCheck(BaseModel):
    id: str
    description: str
    deviation: float = Field(..., description="Largest measured violation")
    passed: bool
    details: dict[str, Any] = Field(default_factory=dict)


class ValidationReport(BaseModel):
    """Outcome of every algebraic condition checked on one POVM."""

    povm: str
    kind: PovmKind
    dim: int
    tolerance: float
    status: Literal["pass", "fail"]
    checks: list[ValidationCheck]


class BoundFactor(BaseModel):
    dim: int
    parameter: float
    renormalized: bool
    value: float


class CriterionBound(BaseModel):
    """Separable upper bound for a set of per-subsystem POVMs.

    Attributes:
        value: Product of the per-subsystem factors.
        provenance: ``sic_unit`` when every POVM is a renormalized SIC (value 1),
            ``gsic_product`` otherwise.
        factors: The per-subsystem factors, in subsystem order.
    """

    value: float
    provenance: Literal["sic_unit", "gsic_product"]
    factors: list[BoundFactor]


class CriterionReport(BaseModel):
    """One criterion evaluation. Field order is the serialization order."""

    state: str
    partition: str
    mode: CorrelationMode
    povm: str
    functional: Functional = Functional.TRACE_NORM
    trace_norm: float = Field(..., description="Value of the chosen functional")
    bound: CriterionBound
    margin: float
    verdict: Verdict
    parameters: dict[str, float] = Field(default_factory=dict)


class ScanResult(BaseModel):
    state: str
    mode: CorrelationMode
    functional: Functional
    overall: Verdict
    reports: list[CriterionReport]


class PptReport(BaseModel):
    """Minimum eigenvalue of each single-subsystem partial transpose."""

    state: str
    tolerance: float
    min_eigenvalues: list[float]
    ppt: bool


class ExampleAssertion(BaseModel):
    id: str
    description: str
    passed: bool
    observed: float | str | None = None
    expected: str | None = None


class ExampleSummary(BaseModel):
    example: int
    status: Literal["pass", "fail"]
    assertions: list[ExampleAssertion]
    values: dict[str, Any] = Field(default_factory=dict)
    artifacts: list[str] = Field(default_factory=list)
