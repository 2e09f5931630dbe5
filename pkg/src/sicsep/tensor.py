"""Dense complex linear algebra for small multipartite operators.

Every operator in the package (states, POVM elements, correlation matrices)
is a numpy array. Subsystem order is the tensor order: subsystem 0 is the
leftmost Kronecker factor.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from enum import StrEnum
from functools import reduce

import numpy as np
import numpy.typing as npt

from sicsep.errors import (
    ConvergenceError,
    DimensionMismatchError,
    NotHermitianError,
    ParameterRangeError,
)

DenseMatrix = npt.NDArray[np.complex128]
RealMatrix = npt.NDArray[np.float64]

ALGEBRAIC_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10


class Functional(StrEnum):
    """Matrix functional compared against the separable bound."""

    TRACE_NORM = "trace"
    COLUMN_NORM = "column"


def as_matrix(values: npt.ArrayLike) -> DenseMatrix:
    """Copy ``values`` into a fresh 2-D complex matrix."""
    matrix = np.array(values, dtype=np.complex128, copy=True)
    if matrix.ndim != 2:
        raise DimensionMismatchError(
            f"expected a 2-D matrix, got {matrix.ndim} dimensions", shape=list(matrix.shape)
        )
    return matrix


def kron(a: npt.ArrayLike, b: npt.ArrayLike) -> DenseMatrix:
    """Kronecker product with ``a`` as the outer (row-major leading) factor."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(factors: Iterable[npt.ArrayLike]) -> DenseMatrix:
    """Left-to-right Kronecker product of one or more factors."""
    matrices = [as_matrix(f) for f in factors]
    if not matrices:
        raise DimensionMismatchError("kron_all needs at least one factor")
    return reduce(np.kron, matrices)


def block_diagonal(blocks: Sequence[npt.ArrayLike]) -> DenseMatrix:
    """Direct sum of rectangular blocks; off-block entries are exactly zero."""
    parts = [as_matrix(b) for b in blocks]
    rows = sum(p.shape[0] for p in parts)
    cols = sum(p.shape[1] for p in parts)
    out = np.zeros((rows, cols), dtype=np.complex128)
    r = c = 0
    for part in parts:
        out[r : r + part.shape[0], c : c + part.shape[1]] = part
        r += part.shape[0]
        c += part.shape[1]
    return out


def check_dims(matrix: npt.NDArray[np.generic], dims: Sequence[int]) -> None:
    """Raise unless ``matrix`` is square with side equal to the product of ``dims``."""
    if not dims or any(int(d) < 1 for d in dims):
        raise DimensionMismatchError("subsystem dims must be positive", dims=list(dims))
    total = math.prod(int(d) for d in dims)
    if matrix.shape != (total, total):
        raise DimensionMismatchError(
            f"matrix shape {matrix.shape} does not match dims {list(dims)} (size {total})",
            dims=list(dims),
            shape=list(matrix.shape),
        )


def _check_keep(keep: Sequence[int], n: int) -> tuple[int, ...]:
    kept = tuple(int(k) for k in keep)
    if not kept:
        raise DimensionMismatchError("keep set must be non-empty")
    if any(k < 0 or k >= n for k in kept):
        raise DimensionMismatchError(f"keep indices {list(kept)} out of range for {n} subsystems")
    if any(b <= a for a, b in zip(kept, kept[1:], strict=False)):
        raise DimensionMismatchError(f"keep indices {list(kept)} must be strictly increasing")
    return kept


def partial_trace(
    matrix: npt.ArrayLike, dims: Sequence[int], keep: Sequence[int]
) -> DenseMatrix:
    """Trace out every subsystem not listed in ``keep``.

    Works for any square operator, not only unit-trace states; the correlation
    builders rely on this for conditional (unnormalized) operators.
    """
    m = as_matrix(matrix)
    check_dims(m, dims)
    n = len(dims)
    kept = _check_keep(keep, n)
    tensor = m.reshape(tuple(dims) * 2)
    remaining = n
    for index in sorted(set(range(n)) - set(kept), reverse=True):
        tensor = np.trace(tensor, axis1=index, axis2=index + remaining)
        remaining -= 1
    side = math.prod(dims[k] for k in kept)
    return np.ascontiguousarray(tensor.reshape(side, side))


def partial_transpose(matrix: npt.ArrayLike, dims: Sequence[int], subsystem: int) -> DenseMatrix:
    """Transpose the row and column indices of one subsystem."""
    m = as_matrix(matrix)
    check_dims(m, dims)
    n = len(dims)
    if not 0 <= subsystem < n:
        raise DimensionMismatchError(f"subsystem {subsystem} out of range for {n} subsystems")
    tensor = m.reshape(tuple(dims) * 2)
    swapped = np.swapaxes(tensor, subsystem, subsystem + n)
    return np.ascontiguousarray(swapped.reshape(m.shape))


def is_hermitian(matrix: npt.ArrayLike, tol: float = ALGEBRAIC_TOLERANCE) -> bool:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def hermitian_eigvalsh(matrix: npt.ArrayLike, tol: float = ALGEBRAIC_TOLERANCE) -> RealMatrix:
    """Ascending eigenvalues of a Hermitian matrix (checked, not assumed)."""
    m = as_matrix(matrix)
    if not is_hermitian(m, tol):
        raise NotHermitianError(
            f"matrix of shape {m.shape} is not Hermitian within {tol:g}", tolerance=tol
        )
    try:
        return np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc


def singular_values(matrix: npt.ArrayLike) -> RealMatrix:
    """Singular values in descending order; rectangular input allowed."""
    m = as_matrix(matrix)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"singular value iteration failed: {exc}") from exc


def trace_norm(matrix: npt.ArrayLike) -> float:
    """Sum of singular values."""
    return float(np.sum(singular_values(matrix)))


def column_norm_sum(matrix: npt.ArrayLike) -> float:
    """Sum of the Euclidean norms of the columns."""
    m = as_matrix(matrix)
    return float(np.sum(np.linalg.norm(m, axis=0)))


def apply_functional(matrix: npt.ArrayLike, functional: Functional) -> float:
    if functional is Functional.TRACE_NORM:
        return trace_norm(matrix)
    if functional is Functional.COLUMN_NORM:
        return column_norm_sum(matrix)
    raise ParameterRangeError(f"unknown functional {functional!r}")


def min_eigenvalue(matrix: npt.ArrayLike, tol: float = PSD_TOLERANCE) -> float:
    return float(hermitian_eigvalsh(matrix, tol)[0])


def is_psd(matrix: npt.ArrayLike, tol: float = PSD_TOLERANCE) -> bool:
    """True iff the Hermitian matrix has minimum eigenvalue >= -tol."""
    return min_eigenvalue(matrix, tol) >= -tol


def real_part(matrix: npt.ArrayLike, tol: float = ALGEBRAIC_TOLERANCE) -> RealMatrix:
    """Drop an imaginary residue that must vanish; raise if it does not."""
    m = np.asarray(matrix)
    residue = float(np.max(np.abs(m.imag), initial=0.0)) if np.iscomplexobj(m) else 0.0
    if residue > tol:
        raise NotHermitianError(
            f"expected real values, imaginary residue {residue:.3e} exceeds {tol:g}",
            residue=residue,
        )
    return np.ascontiguousarray(np.real(m), dtype=np.float64)
