"""Density matrices: validation, the worked-example families and noise mixing.

Basis convention: computational basis, subsystem A leftmost in every Kronecker
product, |±> = (|0> ± |1>)/sqrt2.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
from pydantic import ValidationError

from sicsep.errors import (
    DimensionMismatchError,
    DocumentError,
    InvalidStateError,
    ParameterRangeError,
)
from sicsep.models import PptReport, StateDocument, matrix_to_pairs, pairs_to_matrix
from sicsep.tensor import (
    ALGEBRAIC_TOLERANCE,
    PSD_TOLERANCE,
    DenseMatrix,
    as_matrix,
    check_dims,
    hermitian_eigvalsh,
    is_hermitian,
    kron_all,
    partial_trace,
    partial_transpose,
)

SIMPLEX_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class DensityState:
    """A density matrix with its ordered subsystem dimensions."""

    dims: tuple[int, ...]
    matrix: DenseMatrix
    label: str = "state"

    def __post_init__(self) -> None:
        matrix = as_matrix(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        check_dims(matrix, dims)
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_matrix(
        cls,
        matrix: npt.ArrayLike,
        dims: Sequence[int],
        *,
        label: str = "matrix",
        tol: float = ALGEBRAIC_TOLERANCE,
        psd_tol: float = PSD_TOLERANCE,
    ) -> DensityState:
        """Validate a raw matrix: Hermitian, unit trace, PSD."""
        m = as_matrix(matrix)
        check_dims(m, dims)
        if not is_hermitian(m, tol):
            raise InvalidStateError(f"{label}: matrix is not Hermitian within {tol:g}")
        trace = complex(np.trace(m))
        if abs(trace - 1.0) > tol:
            raise InvalidStateError(
                f"{label}: trace {trace.real:.15g} differs from 1", trace=trace.real
            )
        lowest = float(hermitian_eigvalsh(m, tol)[0])
        if lowest < -psd_tol:
            raise InvalidStateError(
                f"{label}: matrix has negative eigenvalue {lowest:.3e}", min_eigenvalue=lowest
            )
        return cls(dims=tuple(dims), matrix=m, label=label)

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    @property
    def dimension(self) -> int:
        return math.prod(self.dims)

    def reduce(self, keep: Sequence[int]) -> DensityState:
        """Reduced state on ``keep`` (strictly increasing subsystem indices)."""
        reduced = partial_trace(self.matrix, self.dims, keep)
        kept = tuple(self.dims[k] for k in keep)
        return DensityState(dims=kept, matrix=reduced, label=f"{self.label}{list(keep)}")

    def partial_transpose(self, subsystem: int) -> DenseMatrix:
        return partial_transpose(self.matrix, self.dims, subsystem)


def basis_ket(digits: Sequence[int], dims: Sequence[int]) -> npt.NDArray[np.complex128]:
    """Computational basis vector |d0 d1 ...>."""
    if len(digits) != len(dims):
        raise DimensionMismatchError(f"{len(digits)} digits for {len(dims)} subsystems")
    factors = []
    for digit, dim in zip(digits, dims, strict=True):
        if not 0 <= digit < dim:
            raise DimensionMismatchError(f"digit {digit} out of range for dimension {dim}")
        v = np.zeros(dim, dtype=np.complex128)
        v[digit] = 1.0
        factors.append(v)
    ket = factors[0]
    for factor in factors[1:]:
        ket = np.kron(ket, factor)
    return ket


def product_ket(*factors: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    ket = np.asarray(factors[0], dtype=np.complex128)
    for factor in factors[1:]:
        ket = np.kron(ket, np.asarray(factor, dtype=np.complex128))
    return ket


def projector(ket: npt.ArrayLike) -> DenseMatrix:
    v = np.asarray(ket, dtype=np.complex128).reshape(-1, 1)
    return v @ v.conj().T


_ZERO = np.array([1.0, 0.0], dtype=np.complex128)
_ONE = np.array([0.0, 1.0], dtype=np.complex128)
_PLUS = np.array([1.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)
_MINUS = np.array([1.0, -1.0], dtype=np.complex128) / math.sqrt(2.0)


def _bell_pair(first: int, second: int, n: int) -> npt.NDArray[np.complex128]:
    """(|0..0> + |1 on first and second, 0 elsewhere>)/sqrt2 on n qubits."""
    excited = [0] * n
    excited[first] = excited[second] = 1
    dims = [2] * n
    return (basis_ket([0] * n, dims) + basis_ket(excited, dims)) / math.sqrt(2.0)


def _simplex_weights(params: Mapping[str, float], names: tuple[str, str, str]) -> list[float]:
    first, second, third = names
    values = dict(params)
    if first not in values:
        if second not in values or third not in values:
            raise InvalidStateError(f"need at least {second} and {third}")
        values[first] = 1.0 - values[second] - values[third]
    weights = [float(values[name]) for name in names]
    if any(w < -SIMPLEX_TOLERANCE for w in weights):
        raise ParameterRangeError(
            f"weights {dict(zip(names, weights, strict=True))} must be non-negative"
        )
    if abs(sum(weights) - 1.0) > SIMPLEX_TOLERANCE:
        raise ParameterRangeError(f"weights {names} must sum to 1, got {sum(weights):.15g}")
    return [max(w, 0.0) for w in weights]


def _example1_rho_prime(params: Mapping[str, float]) -> DensityState:
    a, b, c = _simplex_weights(params, ("a", "b", "c"))
    matrix = (
        a * projector(_bell_pair(0, 1, 3))
        + b * projector(_bell_pair(0, 2, 3))
        + c * projector(_bell_pair(1, 2, 3))
    )
    return DensityState.from_matrix(
        matrix, (2, 2, 2), label=f"example1_rho_prime(a={a:g},b={b:g},c={c:g})"
    )


def _example1_rho(params: Mapping[str, float]) -> DensityState:
    third = 1.0 / 3.0
    state = _example1_rho_prime({"a": third, "b": third, "c": third})
    return DensityState(dims=state.dims, matrix=state.matrix, label="example1_rho")


def _example1_four_partite(params: Mapping[str, float]) -> DensityState:
    x, y, z = _simplex_weights(params, ("x", "y", "z"))
    matrix = (
        x * projector(_bell_pair(0, 1, 4))
        + y * projector(_bell_pair(0, 2, 4))
        + z * projector(_bell_pair(0, 3, 4))
    )
    return DensityState.from_matrix(
        matrix, (2, 2, 2, 2), label=f"example1_four_partite(x={x:g},y={y:g},z={z:g})"
    )


def example2_product_vectors() -> list[npt.NDArray[np.complex128]]:
    """The four mutually orthogonal product vectors removed from I₈."""
    return [
        product_ket(_ZERO, _ONE, _PLUS),
        product_ket(_ONE, _PLUS, _ZERO),
        product_ket(_PLUS, _ZERO, _ONE),
        product_ket(_MINUS, _MINUS, _MINUS),
    ]


def _example2_upb(params: Mapping[str, float]) -> DensityState:
    removed = sum((projector(v) for v in example2_product_vectors()), start=np.zeros((8, 8)))
    matrix = (np.eye(8) - removed) / 4.0
    return DensityState.from_matrix(matrix, (2, 2, 2), label="example2_upb")


def example3_mixture_weights(b: float) -> tuple[float, float]:
    """Weights of the inseparable part and of |phi_b><phi_b|."""
    return 7 * b / (7 * b + 1), 1 / (7 * b + 1)


def _example3_sigma(params: Mapping[str, float]) -> DensityState:
    """sigma(b) exactly as printed, with |phi_b> = |1>(sqrt((1+b)/2)|00> + sqrt((1-b)/2)|10>).

    That ket superposes B while C stays |0>, so for 0 < b < 1 the partial
    transposes on A and C have negative eigenvalues and the one on B is PSD.
    The PPT 2 x 4 family pairs |00> with |11> instead. Keep the printed ket:
    example 3 reports its PT minima as data.
    """
    b = float(params["b"])
    if not 0 < b <= 1:
        raise ParameterRangeError(f"b must satisfy 0 < b <= 1, got {b}")
    dims = (2, 2, 2)
    psi = [
        (basis_ket([0, 0, 0], dims) + basis_ket([1, 0, 1], dims)) / math.sqrt(2.0),
        (basis_ket([0, 0, 1], dims) + basis_ket([1, 1, 0], dims)) / math.sqrt(2.0),
        (basis_ket([0, 1, 0], dims) + basis_ket([1, 1, 1], dims)) / math.sqrt(2.0),
    ]
    inseparable = (2.0 / 7.0) * sum(
        (projector(v) for v in psi), start=np.zeros((8, 8), dtype=np.complex128)
    ) + (1.0 / 7.0) * projector(basis_ket([0, 1, 1], dims))
    phi_b = product_ket(
        _ONE,
        math.sqrt((1 + b) / 2) * basis_ket([0, 0], (2, 2))
        + math.sqrt((1 - b) / 2) * basis_ket([1, 0], (2, 2)),
    )
    w_insep, w_phi = example3_mixture_weights(b)
    matrix = w_insep * inseparable + w_phi * projector(phi_b)
    return DensityState.from_matrix(matrix, dims, label=f"example3_sigma(b={b:g})")


def example4_pure_vector() -> npt.NDArray[np.complex128]:
    """(1/sqrt5)[(|10>+|21>)|0> + (|00>+|11>+|22>)|1>] on 3 x 3 x 2."""
    dims = (3, 3, 2)
    terms = [(1, 0, 0), (2, 1, 0), (0, 0, 1), (1, 1, 1), (2, 2, 1)]
    total = sum((basis_ket(list(t), dims) for t in terms), start=np.zeros(18, dtype=np.complex128))
    return total / math.sqrt(5.0)


def _example4_rho(params: Mapping[str, float]) -> DensityState:
    p = float(params["p"])
    pure = DensityState.from_matrix(projector(example4_pure_vector()), (3, 3, 2), label="phi")
    mixed = mix_white_noise(pure, p)
    return DensityState(dims=mixed.dims, matrix=mixed.matrix, label=f"example4_rho(p={p:g})")


def _maximally_mixed(params: Mapping[str, float]) -> DensityState:
    n = int(params.get("n", 3))
    d = int(params.get("d", 2))
    if n < 1 or d < 1:
        raise ParameterRangeError("n and d must be positive")
    dims = (d,) * n
    size = d**n
    label = f"maximally_mixed(n={n},d={d})"
    return DensityState(dims=dims, matrix=np.eye(size) / size, label=label)


def _bell_psi_plus(params: Mapping[str, float]) -> DensityState:
    return DensityState.from_matrix(projector(_bell_pair(0, 1, 2)), (2, 2), label="bell_psi_plus")


def _product_zero(params: Mapping[str, float]) -> DensityState:
    n = int(params.get("n", 3))
    if n < 1:
        raise ParameterRangeError("n must be positive")
    return DensityState(
        dims=(2,) * n, matrix=projector(basis_ket([0] * n, [2] * n)), label=f"product_zero(n={n})"
    )


StateBuilder = Callable[[Mapping[str, float]], DensityState]


def _registry() -> dict[str, tuple[str, tuple[str, ...], StateBuilder]]:
    """name -> (description, accepted parameters, builder)."""
    return {
        "example1_rho": ("Equal mixture of the three Bell-pair-plus-|0> terms.", (), _example1_rho),
        "example1_rho_prime": (
            "Weighted mixture a, b, c of the three Bell-pair terms (a defaults to 1-b-c).",
            ("a", "b", "c"),
            _example1_rho_prime,
        ),
        "example1_four_partite": (
            "Bell pair between A and one of B, C, D with weights x, y, z.",
            ("x", "y", "z"),
            _example1_four_partite,
        ),
        "example2_upb": ("Complement of four orthogonal product vectors.", (), _example2_upb),
        "example3_sigma": ("Seven-term three-qubit family, 0 < b <= 1.", ("b",), _example3_sigma),
        "example4_rho": ("Qutrit-qutrit-qubit pure state in white noise.", ("p",), _example4_rho),
        "maximally_mixed": ("I / d^n.", ("n", "d"), _maximally_mixed),
        "bell_psi_plus": ("(|00> + |11>)/sqrt2.", (), _bell_psi_plus),
        "product_zero": ("|0...0> on n qubits.", ("n",), _product_zero),
    }


def named_states() -> dict[str, str]:
    return {name: entry[0] for name, entry in sorted(_registry().items())}


def build_named_state(name: str, params: Mapping[str, float] | None = None) -> DensityState:
    """Build one of the registered state families."""
    registry = _registry()
    if name not in registry:
        raise InvalidStateError(
            f"unknown state {name!r}; known: {', '.join(sorted(registry))}", name=name
        )
    _, accepted, builder = registry[name]
    values = dict(params or {})
    unknown = sorted(set(values) - set(accepted))
    if unknown:
        raise InvalidStateError(f"{name} does not take parameters {unknown}", name=name)
    try:
        return builder(values)
    except KeyError as exc:
        raise InvalidStateError(f"{name} needs parameter {exc.args[0]!r}", name=name) from exc


def mix_white_noise(rho: DensityState, p: float) -> DensityState:
    """(1 - p) I/D + p rho."""
    if not 0.0 <= p <= 1.0:
        raise ParameterRangeError(f"visibility p must lie in [0, 1], got {p}")
    size = rho.dimension
    matrix = (1.0 - p) * np.eye(size) / size + p * rho.matrix
    return DensityState(dims=rho.dims, matrix=matrix, label=f"noisy({rho.label},p={p:g})")


def ppt_report(rho: DensityState, tol: float = PSD_TOLERANCE) -> PptReport:
    """Minimum eigenvalue of the partial transpose on each subsystem."""
    lows = [
        float(hermitian_eigvalsh(rho.partial_transpose(k), tol)[0])
        for k in range(rho.n_subsystems)
    ]
    return PptReport(
        state=rho.label,
        tolerance=tol,
        min_eigenvalues=lows,
        ppt=all(low >= -tol for low in lows),
    )


def random_density_matrix(
    rng: np.random.Generator, dim: int, rank: int | None = None
) -> DenseMatrix:
    """Ginibre-distributed density matrix of the given rank (full rank by default)."""
    k = rank or dim
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_product_state(
    rng: np.random.Generator, dims: Sequence[int], *, pure: bool = False
) -> DensityState:
    factors = [random_density_matrix(rng, d, 1 if pure else None) for d in dims]
    return DensityState(dims=tuple(dims), matrix=kron_all(factors), label="random_product")


def random_separable_mixture(
    rng: np.random.Generator, dims: Sequence[int], terms: int = 3
) -> DensityState:
    weights = rng.dirichlet(np.ones(terms))
    matrix = sum(
        (w * random_product_state(rng, dims).matrix for w in weights),
        start=np.zeros((math.prod(dims),) * 2, dtype=np.complex128),
    )
    return DensityState(dims=tuple(dims), matrix=matrix, label="random_separable")


def state_to_document(rho: DensityState) -> StateDocument:
    return StateDocument(dims=list(rho.dims), matrix=matrix_to_pairs(rho.matrix), label=rho.label)


def state_from_document(
    document: StateDocument,
    *,
    source: str = "document",
    tol: float = ALGEBRAIC_TOLERANCE,
    psd_tol: float = PSD_TOLERANCE,
) -> DensityState:
    if document.name is not None:
        state = build_named_state(document.name, document.params)
        if list(state.dims) != document.dims:
            raise DimensionMismatchError(
                f"{source}: {document.name} has dims {list(state.dims)}, "
                f"document says {document.dims}"
            )
        return state
    assert document.matrix is not None
    side = math.prod(document.dims)
    return DensityState.from_matrix(
        pairs_to_matrix(document.matrix, side),
        document.dims,
        label=document.label or source,
        tol=tol,
        psd_tol=psd_tol,
    )


def load_state(
    path: Path, *, tol: float = ALGEBRAIC_TOLERANCE, psd_tol: float = PSD_TOLERANCE
) -> DensityState:
    """Read and validate a state document; raw matrices are checked at ``tol`` and ``psd_tol``."""
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        document = StateDocument.model_validate(raw)
    except FileNotFoundError as exc:
        raise DocumentError(f"state file not found: {path}", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}",
            path=str(path),
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    except ValidationError as exc:
        raise DocumentError(f"{path}: invalid state document: {exc}", path=str(path)) from exc
    return state_from_document(document, source=path.stem, tol=tol, psd_tol=psd_tol)


def save_state(rho: DensityState, path: Path) -> None:
    payload = state_to_document(rho).model_dump(mode="json", exclude_none=True)
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
