"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations

from typing import Any


class ErrorCode:
    """Stable machine-readable error codes."""

    DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
    INVALID_STATE = "INVALID_STATE"
    INVALID_POVM = "INVALID_POVM"
    PARAMETER_RANGE = "PARAMETER_RANGE"
    PARTITION_PARSE = "PARTITION_PARSE"
    NON_CONVERGENCE = "NON_CONVERGENCE"
    DOCUMENT = "DOCUMENT"
    SWEEP_GUARD = "SWEEP_GUARD"
    NOT_HERMITIAN = "NOT_HERMITIAN"


class SicsepError(RuntimeError):
    """Base class for every error raised by sicsep."""

    code = "SICSEP_ERROR"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_payload(self) -> dict[str, Any]:
        """Return the JSON payload the CLI prints on failure."""
        return {"error_code": self.code, "error": self.message, "details": self.details}


class DimensionMismatchError(SicsepError):
    """Raised when matrix sizes, subsystem dims or POVM dims disagree."""

    code = ErrorCode.DIMENSION_MISMATCH


class NotHermitianError(SicsepError):
    """Raised when a Hermitian-only routine receives a non-Hermitian matrix."""

    code = ErrorCode.NOT_HERMITIAN


class InvalidStateError(SicsepError):
    """Raised when a matrix is not a density matrix or state parameters are invalid."""

    code = ErrorCode.INVALID_STATE


class PovmError(SicsepError):
    """Raised when a POVM cannot be built, renormalized or characterized."""

    code = ErrorCode.INVALID_POVM


class ParameterRangeError(SicsepError):
    """Raised when a family parameter falls outside its admissible range."""

    code = ErrorCode.PARAMETER_RANGE


class PartitionParseError(SicsepError):
    """Raised for malformed partition strings or trees."""

    code = ErrorCode.PARTITION_PARSE

    def __init__(self, message: str, *, text: str, column: int | None = None) -> None:
        super().__init__(message, text=text, column=column)
        self.text = text
        self.column = column


class ConvergenceError(SicsepError):
    """Raised when an eigenvalue or singular-value routine fails to converge."""

    code = ErrorCode.NON_CONVERGENCE


class DocumentError(SicsepError):
    """Raised when a state, POVM, config or sweep document cannot be read."""

    code = ErrorCode.DOCUMENT


class SweepGuardError(SicsepError):
    """Raised when a sweep specification violates its grid guards."""

    code = ErrorCode.SWEEP_GUARD
