"""Separable bounds, criterion evaluation and scans over partition trees."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from sicsep.correlations import npartite_correlation
from sicsep.errors import ParameterRangeError
from sicsep.logging import get_logger
from sicsep.models import (
    BoundFactor,
    CorrelationMode,
    CriterionBound,
    CriterionReport,
    Normalization,
    PovmKind,
    ScanResult,
    Verdict,
)
from sicsep.partitions import (
    PartitionTree,
    canonical_trees,
    label_for,
    leaves,
    parse_partition,
)
from sicsep.povm import PRINTED_T_RANGE, Povm, gsic_parameter, gsic_t_range
from sicsep.states import DensityState, mix_white_noise
from sicsep.tensor import Functional, apply_functional

logger = get_logger(__name__)

VERDICT_TOLERANCE = 1e-9
DEFAULT_T_POINTS = 49


def _purity(povm: Povm) -> float:
    if povm.kind is PovmKind.SIC:
        return 1.0 / povm.dim**2
    if povm.parameter is not None:
        return povm.parameter
    return gsic_parameter(povm)


def separable_bound(povms: Sequence[Povm]) -> CriterionBound:
    """Product of sqrt((a d² + 1) / (d (d + 1))) over subsystems.

    Renormalized POVMs fold in their factor sqrt(d(d+1)/2), which makes the
    bound exactly 1 for renormalized SICs.
    """
    factors: list[BoundFactor] = []
    for povm in povms:
        a = _purity(povm)
        d = povm.dim
        value = math.sqrt((a * d * d + 1.0) / (d * (d + 1.0))) * povm.scale
        factors.append(
            BoundFactor(
                dim=d,
                parameter=a,
                renormalized=povm.normalization is Normalization.RENORMALIZED,
                value=value,
            )
        )
    sic_unit = all(
        p.kind is PovmKind.SIC and p.normalization is Normalization.RENORMALIZED for p in povms
    )
    return CriterionBound(
        value=1.0 if sic_unit else math.prod(f.value for f in factors),
        provenance="sic_unit" if sic_unit else "gsic_product",
        factors=factors,
    )


def _family_parameters(povms: Sequence[Povm], subsystems: Sequence[int]) -> dict[str, float]:
    return {
        f"t_{label_for(sub)}": float(povms[sub].family_t)
        for sub in subsystems
        if povms[sub].family_t is not None
    }


def evaluate(
    rho: DensityState,
    povms: Sequence[Povm],
    partition: PartitionTree | str,
    mode: CorrelationMode,
    *,
    functional: Functional = Functional.TRACE_NORM,
    verdict_tolerance: float = VERDICT_TOLERANCE,
    state_label: str | None = None,
) -> CriterionReport:
    """Compare the functional of one correlation matrix with its separable bound."""
    tree = partition
    if isinstance(tree, str):
        tree = parse_partition(tree, rho.n_subsystems)
    correlation = npartite_correlation(rho, tree, povms, mode)
    if correlation.blocks is not None:
        value = math.fsum(apply_functional(block, functional) for block in correlation.blocks)
    else:
        value = apply_functional(correlation.matrix, functional)
    subsystems = sorted(leaves(tree))
    bound = separable_bound([povms[sub] for sub in subsystems])
    margin = value - bound.value
    verdict = Verdict.ENTANGLED if margin > verdict_tolerance else Verdict.INCONCLUSIVE
    report = CriterionReport(
        state=state_label or rho.label,
        partition=correlation.partition,
        mode=mode,
        povm=",".join(povms[sub].descriptor for sub in subsystems),
        functional=functional,
        trace_norm=value,
        bound=bound,
        margin=margin,
        verdict=verdict,
        parameters=_family_parameters(povms, subsystems),
    )
    logger.debug(
        "criterion_evaluated",
        partition=report.partition,
        mode=mode.value,
        margin=margin,
        verdict=verdict.value,
    )
    return report


def scan(
    rho: DensityState,
    povms: Sequence[Povm],
    mode: CorrelationMode,
    *,
    functional: Functional = Functional.TRACE_NORM,
    verdict_tolerance: float = VERDICT_TOLERANCE,
    trees: Sequence[PartitionTree] | None = None,
    workers: int = 4,
    state_label: str | None = None,
) -> ScanResult:
    """Evaluate every canonical tree (pairs, distinguished triples, N-partite presets)."""
    chosen = list(trees) if trees is not None else canonical_trees(rho.n_subsystems)

    def run(tree: PartitionTree) -> CriterionReport:
        return evaluate(
            rho,
            povms,
            tree,
            mode,
            functional=functional,
            verdict_tolerance=verdict_tolerance,
            state_label=state_label,
        )

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        reports = list(pool.map(run, chosen))
    reports.sort(key=lambda r: (r.partition, sorted(r.parameters.items())))
    overall = (
        Verdict.ENTANGLED
        if any(r.verdict is Verdict.ENTANGLED for r in reports)
        else Verdict.INCONCLUSIVE
    )
    logger.info(
        "scan_completed",
        state=state_label or rho.label,
        mode=mode.value,
        trees=len(reports),
        overall=overall.value,
    )
    return ScanResult(
        state=state_label or rho.label,
        mode=mode,
        functional=functional,
        overall=overall,
        reports=reports,
    )


def closed_form_example1(b: float, c: float) -> float:
    """(3√3/4)·sqrt(b²+c²+b+c+1) + (3/4)·sqrt(2+(b+c-1)²-b-c) on the simplex."""
    if b < 0 or c < 0 or b + c > 1 + 1e-12:
        raise ParameterRangeError(f"(b, c) = ({b}, {c}) lies outside the simplex")
    first = (3 * math.sqrt(3) / 4) * math.sqrt(b * b + c * c + b + c + 1)
    second = 0.75 * math.sqrt(2 + (b + c - 1) ** 2 - b - c)
    return first + second


def closed_form_four_partite(x: float, y: float) -> float:
    """The printed four-partite expression, read with a = x and b = y."""
    if x < 0 or y < 0 or x + y > 1 + 1e-12:
        raise ParameterRangeError(f"(x, y) = ({x}, {y}) lies outside the simplex")
    a, b = x, y
    left = math.sqrt(3 * (a * a + a + 1)) + math.sqrt(a * a - 3 * a + 3)
    right = math.sqrt(a * a + a * b + 2 * a + b * b + b + 1) + math.sqrt(
        max(a * a + 3 * a * b - 6 * a + 3 * b * b - 9 * b + 9, 0.0)
    )
    return 3.0 / 16.0 * left * right


def t_grid(dim: int, points: int = DEFAULT_T_POINTS, *, extended: bool = False) -> list[float]:
    """Symmetric grid over the admissible t range with t = 0 removed."""
    if points < 2:
        raise ParameterRangeError(f"a t grid needs at least two points, got {points}")
    limit = gsic_t_range(dim) if extended else PRINTED_T_RANGE[dim]
    grid = np.linspace(-limit, limit, points)
    return [float(t) for t in grid if abs(t) > 1e-15]


def best_t_margin(
    build: Callable[[float], CriterionReport],
    t_values: Sequence[float],
    *,
    workers: int = 4,
) -> CriterionReport:
    """The report with the largest margin over a family grid (ties go to smaller t)."""
    if not t_values:
        raise ParameterRangeError("empty t grid")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        reports = list(pool.map(build, t_values))
    best_index = max(range(len(reports)), key=lambda i: (reports[i].margin, -t_values[i]))
    return reports[best_index]


def noise_margins(
    rho: DensityState,
    povms: Sequence[Povm],
    partition: PartitionTree | str,
    mode: CorrelationMode,
    p_values: Sequence[float],
    *,
    functional: Functional = Functional.TRACE_NORM,
) -> list[float]:
    """Margins of (1 - p) I/D + p rho for every p in ``p_values``.

    UNFOLDING matrices are linear in the state, so they are built once for
    rho and once for I/D and blended. Other modes are rebuilt per p.
    """
    tree = partition
    if isinstance(tree, str):
        tree = parse_partition(tree, rho.n_subsystems)
    bound = separable_bound([povms[sub] for sub in sorted(leaves(tree))]).value
    if mode is not CorrelationMode.UNFOLDING:
        return [
            evaluate(mix_white_noise(rho, p), povms, tree, mode, functional=functional).margin
            for p in p_values
        ]
    signal = npartite_correlation(rho, tree, povms, mode).matrix
    noise = npartite_correlation(mix_white_noise(rho, 0.0), tree, povms, mode).matrix
    return [
        apply_functional(p * signal + (1.0 - p) * noise, functional) - bound for p in p_values
    ]


def detection_threshold(
    p_values: Sequence[float],
    margins: Sequence[float],
    tolerance: float = VERDICT_TOLERANCE,
) -> float | None:
    """Smallest p whose margin exceeds ``tolerance``; None if none does."""
    detected = [p for p, m in zip(p_values, margins, strict=True) if m > tolerance]
    return min(detected) if detected else None

