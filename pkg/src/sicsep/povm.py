"""SIC and GSIC POVM construction, renormalization and validation."""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import numpy.typing as npt
from pydantic import ValidationError

from sicsep.errors import DocumentError, ParameterRangeError, PovmError
from sicsep.logging import get_logger
from sicsep.models import (
    Normalization,
    PovmDocument,
    PovmKind,
    ValidationCheck,
    ValidationReport,
    matrix_to_pairs,
    pairs_to_matrix,
)
from sicsep.tensor import (
    PSD_TOLERANCE,
    DenseMatrix,
    as_matrix,
    hermitian_eigvalsh,
)

logger = get_logger(__name__)

VALIDATION_TOLERANCE = 1e-10

# Ranges printed alongside the two explicit families.
PRINTED_T_RANGE: dict[int, float] = {2: 0.068, 3: 0.012}

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)
_SQRT6 = math.sqrt(6.0)


@dataclass(frozen=True, eq=False)
class Povm:
    """Ordered d² operators on one subsystem.

    ``parameter`` is the GSIC purity a of the POVM-normalized elements; for a
    SIC it is 1/d². Elements are copied and frozen on construction.
    """

    dim: int
    elements: tuple[DenseMatrix, ...]
    kind: PovmKind = PovmKind.GENERIC
    parameter: float | None = None
    normalization: Normalization = Normalization.POVM
    label: str = "generic"
    family_t: float | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise PovmError(f"dimension must be positive, got {self.dim}")
        frozen: list[DenseMatrix] = []
        for element in self.elements:
            matrix = as_matrix(element)
            if matrix.shape != (self.dim, self.dim):
                raise PovmError(
                    f"element shape {matrix.shape} does not match dim {self.dim}",
                    label=self.label,
                )
            matrix.flags.writeable = False
            frozen.append(matrix)
        if len(frozen) != self.dim * self.dim:
            raise PovmError(
                f"a POVM on C^{self.dim} needs {self.dim * self.dim} elements, got {len(frozen)}",
                label=self.label,
            )
        object.__setattr__(self, "elements", tuple(frozen))

    @property
    def scale(self) -> float:
        """Factor applied by :func:`renormalize` (1 for POVM-normalized sets)."""
        if self.normalization is Normalization.RENORMALIZED:
            return renormalization_factor(self.dim)
        return 1.0

    @property
    def descriptor(self) -> str:
        if self.normalization is Normalization.RENORMALIZED:
            return f"{self.label}*"
        return self.label

    def stacked(self) -> npt.NDArray[np.complex128]:
        """Elements as an (d², d, d) array."""
        return np.stack(self.elements)


def renormalization_factor(dim: int) -> float:
    return math.sqrt(dim * (dim + 1) / 2.0)


def _projector(vector: Sequence[complex]) -> DenseMatrix:
    ket = np.asarray(vector, dtype=np.complex128).reshape(-1, 1)
    return ket @ ket.conj().T


def sic_qubit_vectors() -> tuple[npt.NDArray[np.complex128], ...]:
    """The four tetrahedral qubit vectors used by every worked example."""
    w = np.exp(-1j * math.pi / 3)
    return (
        np.array([1.0, 0.0], dtype=np.complex128),
        np.array([1.0, _SQRT2], dtype=np.complex128) / _SQRT3,
        1j * np.array([w, -_SQRT2], dtype=np.complex128) / _SQRT3,
        np.array([1.0, -_SQRT2 * w], dtype=np.complex128) / _SQRT3,
    )


def build_sic_qubit() -> Povm:
    """Qubit SIC-POVM with elements |phi_k><phi_k| / 2."""
    elements = tuple(_projector(v) / 2.0 for v in sic_qubit_vectors())
    return Povm(dim=2, elements=elements, kind=PovmKind.SIC, parameter=0.25, label="sic2")


def renormalize(povm: Povm) -> Povm:
    """Scale every element by sqrt(d(d+1)/2) so the SIC separable bound becomes 1."""
    if povm.normalization is Normalization.RENORMALIZED:
        raise PovmError(f"POVM {povm.label!r} is already renormalized")
    factor = renormalization_factor(povm.dim)
    return Povm(
        dim=povm.dim,
        elements=tuple(e * factor for e in povm.elements),
        kind=povm.kind,
        parameter=povm.parameter,
        normalization=Normalization.RENORMALIZED,
        label=povm.label,
        family_t=povm.family_t,
    )


def conjugate(povm: Povm) -> Povm:
    """Entrywise complex conjugate of every element."""
    label = povm.label[5:-1] if povm.label.startswith("conj(") else f"conj({povm.label})"
    return Povm(
        dim=povm.dim,
        elements=tuple(e.conj() for e in povm.elements),
        kind=povm.kind,
        parameter=povm.parameter,
        normalization=povm.normalization,
        label=label,
        family_t=povm.family_t,
    )


def gsic_generators(dim: int) -> tuple[DenseMatrix, ...]:
    """Orthonormal traceless Hermitian generators of the two explicit GSIC families."""
    if dim == 2:
        r = 1.0 / _SQRT2
        return (
            r * np.array([[0, 1], [1, 0]], dtype=np.complex128),
            r * np.array([[0, 1j], [-1j, 0]], dtype=np.complex128),
            r * np.array([[1, 0], [0, -1]], dtype=np.complex128),
        )
    if dim == 3:
        r = 1.0 / _SQRT2
        g = [np.zeros((3, 3), dtype=np.complex128) for _ in range(8)]
        g[0][0, 0], g[0][1, 1] = r, -r
        g[1][0, 1] = g[1][1, 0] = r
        g[2][0, 2] = g[2][2, 0] = r
        g[3][0, 1], g[3][1, 0] = -1j * r, 1j * r
        g[4][0, 0] = g[4][1, 1] = 1.0 / _SQRT6
        g[4][2, 2] = -math.sqrt(2.0 / 3.0)
        g[5][1, 2] = g[5][2, 1] = r
        g[6][0, 2], g[6][2, 0] = -1j * r, 1j * r
        g[7][1, 2], g[7][2, 1] = -1j * r, 1j * r
        return tuple(g)
    raise ParameterRangeError(f"explicit GSIC families exist for d=2 and d=3 only, got d={dim}")


def printed_distinguished_qubit_generator() -> DenseMatrix:
    """The d=2 distinguished operator exactly as printed (entry (2,2) = +1/sqrt2)."""
    return np.array([[1, 1 + 1j], [1 - 1j, 1]], dtype=np.complex128) / _SQRT2


def _family_offsets(dim: int, *, misprinted: bool = False) -> list[DenseMatrix]:
    generators = gsic_generators(dim)
    if misprinted:
        if dim != 2:
            raise ParameterRangeError("the misprinted variant exists for d=2 only")
        total = printed_distinguished_qubit_generator()
    else:
        total = sum(generators, start=np.zeros((dim, dim), dtype=np.complex128))
    weight = dim * (dim + 1)
    offsets = [total - weight * g for g in generators]
    offsets.append((dim + 1) * total)
    return offsets


def gsic_elements(dim: int, t: float, *, misprinted: bool = False) -> list[DenseMatrix]:
    """Raw elements I/d² + t·X_α, without any validation."""
    identity = np.eye(dim, dtype=np.complex128) / (dim * dim)
    return [identity + t * x for x in _family_offsets(dim, misprinted=misprinted)]


def gsic_t_range(dim: int) -> float:
    """Largest |t| for which every element of the family is PSD."""
    largest = max(float(np.linalg.norm(x, 2)) for x in _family_offsets(dim))
    return 1.0 / (dim * dim * largest)


def gsic_parameter(povm: Povm, tol: float = VALIDATION_TOLERANCE) -> float:
    """Common purity Tr(M²) of the POVM-normalized elements."""
    scale2 = povm.scale**2
    purities = [float(np.real(np.trace(e @ e))) / scale2 for e in povm.elements]
    spread = max(purities) - min(purities)
    if spread > tol:
        raise PovmError(
            f"element purities differ by {spread:.3e}; {povm.label!r} is not a GSIC",
            spread=spread,
        )
    return float(np.mean(purities))


def build_gsic(dim: int, t: float, *, extended: bool = False) -> Povm:
    """One of the two explicit GSIC families at parameter ``t``.

    The distinguished operator is the sum of the generators, which keeps
    Σ M_α = I. ``extended=True`` admits any |t| up to :func:`gsic_t_range`
    instead of the printed range.
    """
    if dim not in PRINTED_T_RANGE:
        raise ParameterRangeError(f"explicit GSIC families exist for d=2 and d=3 only, got d={dim}")
    if t == 0:
        raise ParameterRangeError("t must be non-zero")
    limit = gsic_t_range(dim) if extended else PRINTED_T_RANGE[dim]
    if abs(t) > limit:
        raise ParameterRangeError(
            f"|t|={abs(t):g} exceeds the admissible range {limit:g} for d={dim}",
            dim=dim,
            t=t,
            limit=limit,
        )
    elements = gsic_elements(dim, t)
    for index, element in enumerate(elements):
        lowest = float(hermitian_eigvalsh(element)[0])
        if lowest < -PSD_TOLERANCE:
            raise PovmError(
                f"element {index + 1} has eigenvalue {lowest:.3e} at t={t:g}",
                dim=dim,
                t=t,
            )
    povm = Povm(
        dim=dim,
        elements=tuple(elements),
        kind=PovmKind.GSIC,
        label=f"gsic{dim}(t={t:g})",
        family_t=t,
    )
    return replace(povm, parameter=gsic_parameter(povm))


def misprinted_gsic_qubit(t: float) -> Povm:
    """The d=2 family built from the printed distinguished operator.

    Completeness fails for every t != 0; kept so validation can show where.
    """
    return Povm(
        dim=2,
        elements=tuple(gsic_elements(2, t, misprinted=True)),
        kind=PovmKind.GSIC,
        label=f"gsic2-printed(t={t:g})",
        family_t=t,
    )


CheckFn = Callable[[Povm], tuple[float, dict[str, object]]]


def _check_hermitian(povm: Povm) -> tuple[float, dict[str, object]]:
    worst = max(float(np.max(np.abs(e - e.conj().T))) for e in povm.elements)
    return worst, {}


def _check_psd(povm: Povm) -> tuple[float, dict[str, object]]:
    lowest = min(
        float(np.linalg.eigvalsh((e + e.conj().T) / 2)[0]) for e in povm.elements
    )
    return max(0.0, -lowest), {"min_eigenvalue": lowest}


def _check_completeness(povm: Povm) -> tuple[float, dict[str, object]]:
    residual = sum(povm.elements, start=np.zeros((povm.dim, povm.dim), dtype=np.complex128))
    residual = residual / povm.scale - np.eye(povm.dim)
    magnitude = np.abs(residual)
    row, col = np.unravel_index(int(np.argmax(magnitude)), magnitude.shape)
    return float(magnitude[row, col]), {"entry": [int(row), int(col)]}


def _pairwise_traces(povm: Povm) -> npt.NDArray[np.float64]:
    stacked = povm.stacked() / povm.scale
    gram = np.einsum("aij,bji->ab", stacked, stacked)
    return np.real(gram)


def _check_sic_overlap(povm: Povm) -> tuple[float, dict[str, object]]:
    d = povm.dim
    gram = _pairwise_traces(povm)
    expected = (d * np.eye(d * d) + 1.0) / ((d + 1) * d * d)
    return float(np.max(np.abs(gram - expected))), {}


def _check_gsic_purity(povm: Povm) -> tuple[float, dict[str, object]]:
    purities = np.diag(_pairwise_traces(povm))
    spread = float(np.max(purities) - np.min(purities))
    details: dict[str, object] = {"a": float(np.mean(purities))}
    if povm.parameter is not None:
        spread = max(spread, float(np.max(np.abs(purities - povm.parameter))))
    return spread, details


def _check_gsic_overlap(povm: Povm) -> tuple[float, dict[str, object]]:
    d = povm.dim
    gram = _pairwise_traces(povm)
    a = float(np.mean(np.diag(gram)))
    expected = (1.0 - d * a) / (d * (d * d - 1))
    off = gram[~np.eye(d * d, dtype=bool)]
    return float(np.max(np.abs(off - expected))), {"expected": expected}


def _check_gsic_range(povm: Povm) -> tuple[float, dict[str, object]]:
    d = povm.dim
    a = float(np.mean(np.diag(_pairwise_traces(povm))))
    low, high = 1.0 / d**3, 1.0 / d**2
    return max(0.0, low - a, a - high), {"a": a, "range": [low, high]}


def _registry(kind: PovmKind) -> dict[str, tuple[str, CheckFn]]:
    checks: dict[str, tuple[str, CheckFn]] = {
        "hermitian": ("Every element is Hermitian.", _check_hermitian),
        "psd": ("Every element is positive semidefinite.", _check_psd),
        "completeness": ("Elements sum to the identity.", _check_completeness),
    }
    if kind is PovmKind.SIC:
        checks["sic_overlap"] = (
            "Tr(Π_k Π_l) = (dδ_kl + 1) / ((d+1) d²).",
            _check_sic_overlap,
        )
    if kind is PovmKind.GSIC:
        checks["gsic_purity"] = ("Tr(M_α²) = a for every element.", _check_gsic_purity)
        checks["gsic_overlap"] = (
            "Tr(M_α M_β) = (1 - d a) / (d (d² - 1)) for α != β.",
            _check_gsic_overlap,
        )
        checks["gsic_parameter_range"] = ("1/d³ <= a <= 1/d².", _check_gsic_range)
    return checks


def validate(povm: Povm, tol: float = VALIDATION_TOLERANCE) -> ValidationReport:
    """Measure every algebraic condition for the POVM's kind; failures are entries."""
    results: list[ValidationCheck] = []
    for check_id, (description, checker) in _registry(povm.kind).items():
        deviation, details = checker(povm)
        results.append(
            ValidationCheck(
                id=check_id,
                description=description,
                deviation=deviation,
                passed=deviation <= tol,
                details=details,
            )
        )
    status = "pass" if all(c.passed for c in results) else "fail"
    logger.debug("povm_validated", povm=povm.label, status=status)
    return ValidationReport(
        povm=povm.descriptor,
        kind=povm.kind,
        dim=povm.dim,
        tolerance=tol,
        status=status,
        checks=results,
    )


def povm_to_document(povm: Povm) -> PovmDocument:
    return PovmDocument(
        dim=povm.dim,
        kind=povm.kind,
        parameter=povm.parameter,
        normalization=povm.normalization,
        label=povm.label,
        elements=[matrix_to_pairs(e) for e in povm.elements],
    )


def povm_from_document(document: PovmDocument) -> Povm:
    return Povm(
        dim=document.dim,
        elements=tuple(pairs_to_matrix(e, document.dim) for e in document.elements),
        kind=document.kind,
        parameter=document.parameter,
        normalization=document.normalization,
        label=document.label,
    )


def save_povm(povm: Povm, path: Path) -> None:
    payload = povm_to_document(povm).model_dump(mode="json")
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_povm(path: Path, *, tol: float = VALIDATION_TOLERANCE) -> Povm:
    """Read a POVM document; structural conditions must hold."""
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        povm = povm_from_document(PovmDocument.model_validate(raw))
    except FileNotFoundError as exc:
        raise DocumentError(f"POVM file not found: {path}", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}",
            path=str(path),
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    except ValidationError as exc:
        raise DocumentError(f"{path}: invalid POVM document: {exc}", path=str(path)) from exc
    report = validate(povm, tol)
    structural = {"hermitian", "psd", "completeness"}
    failed = [c.id for c in report.checks if c.id in structural and not c.passed]
    if failed:
        raise PovmError(f"{path}: POVM fails {', '.join(failed)}", path=str(path), failed=failed)
    return povm


def _parse_t(token: str, raw: str, fallback: float | None) -> float:
    if raw == "":
        if fallback is None:
            raise ParameterRangeError(f"POVM spec {token!r} needs a parameter, e.g. {token}:0.05")
        return fallback
    try:
        return float(raw)
    except ValueError as exc:
        raise ParameterRangeError(f"invalid GSIC parameter in {token!r}") from exc


def resolve_povm(
    token: str,
    dim: int | None,
    *,
    t: float | None = None,
    extended: bool = False,
) -> Povm:
    """Build one POVM from ``sic2 | gsic2[:t] | gsic3[:t] | gsic[:t] | file:<path>``.

    ``dim`` is the subsystem dimension the POVM must act on; ``None`` accepts
    whatever the token names (bare ``gsic`` then has no dimension to take).
    """
    token = token.strip()
    name, _, raw = token.partition(":")
    name = name.lower()
    if name == "file":
        povm = load_povm(Path(raw))
    elif name == "sic2":
        povm = build_sic_qubit()
    elif name in {"gsic", "gsic2", "gsic3"}:
        family_dim = dim if name == "gsic" else int(name[-1])
        if family_dim is None:
            raise PovmError(f"POVM spec {token!r} needs a dimension")
        povm = build_gsic(family_dim, _parse_t(token, raw, t), extended=extended)
    else:
        raise PovmError(f"unknown POVM spec {token!r}")
    if dim is not None and povm.dim != dim:
        raise PovmError(
            f"POVM {token!r} acts on C^{povm.dim} but the subsystem has dimension {dim}",
            povm=token,
            dim=dim,
        )
    return povm


def resolve_povms(
    spec: str,
    dims: Sequence[int],
    *,
    conjugate_assignment: str = "M",
    normalization: str = "auto",
    t: float | None = None,
    extended: bool = False,
) -> list[Povm]:
    """One POVM per subsystem from a broadcast or comma-separated spec.

    ``conjugate_assignment`` is a pattern over ``M`` (as built) and ``C``
    (conjugate), cycled over subsystems; it pairs GSIC families with their
    conjugates and leaves SIC and file POVMs as built. ``normalization`` is ``auto``
    (renormalize SICs only), ``povm`` or ``renormalized``.
    """
    tokens = [part for part in spec.split(",") if part.strip()]
    if len(tokens) == 1:
        tokens = tokens * len(dims)
    if len(tokens) != len(dims):
        raise PovmError(
            f"POVM spec lists {len(tokens)} entries for {len(dims)} subsystems",
            spec=spec,
        )
    pattern = conjugate_assignment.strip().upper() or "M"
    if set(pattern) - {"M", "C"}:
        raise PovmError(f"conjugate assignment {conjugate_assignment!r} may contain only M and C")
    if normalization not in {"auto", "povm", "renormalized"}:
        raise PovmError(f"unknown normalization {normalization!r}")

    povms: list[Povm] = []
    for index, (token, dim) in enumerate(zip(tokens, dims, strict=True)):
        povm = resolve_povm(token, int(dim), t=t, extended=extended)
        if povm.kind is PovmKind.GSIC and pattern[index % len(pattern)] == "C":
            povm = conjugate(povm)
        wants_renormalized = normalization == "renormalized" or (
            normalization == "auto" and povm.kind is PovmKind.SIC
        )
        if wants_renormalized and povm.normalization is Normalization.POVM:
            povm = renormalize(povm)
        povms.append(povm)
    return povms

