"""Separable bounds, evaluation, scans and the family-parameter helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sicsep.criteria import (
    best_t_margin,
    closed_form_example1,
    closed_form_four_partite,
    detection_threshold,
    evaluate,
    noise_margins,
    scan,
    separable_bound,
    t_grid,
)
from sicsep.errors import ParameterRangeError
from sicsep.models import (
    CorrelationMode,
    CriterionBound,
    CriterionReport,
    Verdict,
)
from sicsep.povm import Povm, build_gsic, gsic_t_range, renormalize, resolve_povms
from sicsep.states import (
    DensityState,
    build_named_state,
    mix_white_noise,
    random_density_matrix,
    random_product_state,
    random_separable_mixture,
)
from sicsep.tensor import Functional

ROOT3 = math.sqrt(3)


def _report(margin: float) -> CriterionReport:
    return CriterionReport(
        state="s",
        partition="A|B",
        mode=CorrelationMode.UNFOLDING,
        povm="p",
        trace_norm=margin,
        bound=CriterionBound(value=0.0, provenance="gsic_product", factors=[]),
        margin=margin,
        verdict=Verdict.ENTANGLED if margin > 0 else Verdict.INCONCLUSIVE,
    )


def test_renormalized_sic_bound_is_one(sic3: list[Povm]) -> None:
    bound = separable_bound(sic3)
    assert bound.value == 1.0
    assert bound.provenance == "sic_unit"
    assert math.prod(f.value for f in bound.factors) == pytest.approx(1.0)


def test_povm_normalized_sic_bound() -> None:
    povms = resolve_povms("sic2", (2, 2, 2), normalization="povm")
    bound = separable_bound(povms)
    assert bound.provenance == "gsic_product"
    assert bound.value == pytest.approx((1 / 3) ** 1.5)


def test_gsic_qubit_bound_matches_purity() -> None:
    t = 0.05
    povms = resolve_povms("gsic2", (2, 2, 2), t=t, conjugate_assignment="MCM")
    a = 1 / 8 + 27 * t * t
    assert separable_bound(povms).value == pytest.approx(((4 * a + 1) / 6) ** 1.5)


def test_gsic_at_sic_purity_renormalizes_to_unit_bound() -> None:
    povm = renormalize(build_gsic(2, gsic_t_range(2), extended=True))
    bound = separable_bound([povm, povm])
    assert bound.provenance == "gsic_product"
    assert bound.value == pytest.approx(1.0, abs=1e-10)


def test_example1_unfolding_detects(example1_rho: DensityState, sic3: list[Povm]) -> None:
    report = evaluate(example1_rho, sic3, "A|(B|C)", CorrelationMode.UNFOLDING)
    assert report.trace_norm == pytest.approx(1.0687, abs=1e-3)
    assert report.verdict is Verdict.ENTANGLED
    assert report.margin == pytest.approx(report.trace_norm - 1.0)
    assert report.povm == "sic2*,sic2*,sic2*"
    assert report.state == "example1_rho"


def test_example1_column_functional_matches_closed_form(
    example1_rho: DensityState, sic3: list[Povm]
) -> None:
    column = evaluate(
        example1_rho,
        sic3,
        "A|(B|C)",
        CorrelationMode.MARGINAL_KRON,
        functional=Functional.COLUMN_NORM,
    )
    assert column.trace_norm == pytest.approx(closed_form_example1(1 / 3, 1 / 3), abs=1e-10)
    assert column.trace_norm == pytest.approx(2.687, abs=0.005)
    trace = evaluate(example1_rho, sic3, "A|(B|C)", CorrelationMode.MARGINAL_KRON)
    assert trace.trace_norm == pytest.approx(ROOT3)


def test_rho_prime_matches_closed_form_on_a_coarse_grid(sic3: list[Povm]) -> None:
    for b, c in [(0.0, 0.0), (0.25, 0.5), (1.0, 0.0), (0.1, 0.9)]:
        rho = build_named_state("example1_rho_prime", {"b": b, "c": c})
        report = evaluate(
            rho, sic3, "A|(B|C)", CorrelationMode.MARGINAL_KRON, functional=Functional.COLUMN_NORM
        )
        assert report.trace_norm == pytest.approx(closed_form_example1(b, c), abs=1e-8)


def test_block_diag_flags_a_product_state(sic3: list[Povm]) -> None:
    rho = build_named_state("product_zero", {"n": 3})
    report = evaluate(rho, sic3, "A|(B|C)", CorrelationMode.BLOCK_DIAG)
    assert report.trace_norm == pytest.approx(ROOT3, abs=1e-10)
    assert report.verdict is Verdict.ENTANGLED
    unfolding = evaluate(rho, sic3, "A|(B|C)", CorrelationMode.UNFOLDING)
    assert unfolding.verdict is Verdict.INCONCLUSIVE


def test_unfolding_never_flags_separable_states(rng: np.random.Generator) -> None:
    povms = resolve_povms("sic2", (2, 2, 2))
    for index in range(400):
        if index % 2:
            rho = random_separable_mixture(rng, (2, 2, 2), terms=3)
        else:
            rho = random_product_state(rng, (2, 2, 2), pure=True)
        report = evaluate(rho, povms, "A|(B|C)", CorrelationMode.UNFOLDING)
        assert report.margin <= 1e-9


def test_scan_covers_canonical_trees(example1_rho: DensityState, sic3: list[Povm]) -> None:
    result = scan(example1_rho, sic3, CorrelationMode.UNFOLDING, workers=2)
    partitions = [r.partition for r in result.reports]
    assert partitions == ["A|(B|C)", "A|B", "A|C", "B|(A|C)", "B|C", "C|(A|B)"]
    assert result.overall is Verdict.ENTANGLED
    for report in result.reports:
        if "(" not in report.partition:
            assert report.trace_norm == pytest.approx(1.0)
            assert report.verdict is Verdict.INCONCLUSIVE


def test_scan_of_maximally_mixed_is_inconclusive(
    maximally_mixed_3q: DensityState, sic3: list[Povm]
) -> None:
    result = scan(maximally_mixed_3q, sic3, CorrelationMode.UNFOLDING, workers=1)
    assert result.overall is Verdict.INCONCLUSIVE
    assert max(r.trace_norm for r in result.reports) == pytest.approx(0.75)


def test_gsic_reports_carry_family_parameters() -> None:
    rho = build_named_state("example4_rho", {"p": 1.0})
    povms = resolve_povms("gsic:0.01", rho.dims, conjugate_assignment="MCM")
    report = evaluate(rho, povms, "A|(B|C)", CorrelationMode.MARGINAL_KRON)
    assert report.parameters == {"t_A": 0.01, "t_B": 0.01, "t_C": 0.01}
    assert report.bound.provenance == "gsic_product"
    assert report.verdict is Verdict.ENTANGLED


def test_closed_forms_reject_points_off_the_simplex() -> None:
    assert closed_form_example1(0.0, 0.0) == pytest.approx(3 * ROOT3 / 4 + 0.75 * math.sqrt(3))
    assert math.isfinite(closed_form_four_partite(1 / 3, 1 / 3))
    with pytest.raises(ParameterRangeError, match="outside the simplex"):
        closed_form_example1(0.8, 0.4)
    with pytest.raises(ParameterRangeError, match="outside the simplex"):
        closed_form_four_partite(-0.1, 0.2)


def test_t_grid_drops_zero() -> None:
    grid = t_grid(2)
    assert len(grid) == 48
    assert min(grid) == pytest.approx(-0.068)
    assert max(grid) == pytest.approx(0.068)
    assert all(t != 0 for t in grid)
    assert max(t_grid(3, 5, extended=True)) == pytest.approx(gsic_t_range(3))
    with pytest.raises(ParameterRangeError, match="at least two points"):
        t_grid(2, 1)


def test_best_t_margin_prefers_the_smaller_t_on_ties() -> None:
    margins = {-0.02: 0.1, -0.01: 0.3, 0.01: 0.3, 0.02: -0.5}
    best = best_t_margin(lambda t: _report(margins[t]), list(margins), workers=2)
    assert best.margin == 0.3
    chosen = best_t_margin(
        lambda t: _report(margins[t]).model_copy(update={"parameters": {"t_A": t}}),
        list(margins),
    )
    assert chosen.parameters == {"t_A": -0.01}
    with pytest.raises(ParameterRangeError, match="empty"):
        best_t_margin(lambda t: _report(0.0), [])


def test_detection_threshold() -> None:
    p_values = [0.0, 0.1, 0.2, 0.3]
    assert detection_threshold(p_values, [-0.2, -0.1, 0.05, 0.2]) == 0.2
    assert detection_threshold(p_values, [-0.2, -0.1, 0.0, 1e-12]) is None


def _random_state(rng: np.random.Generator, dims: tuple[int, ...]) -> DensityState:
    return DensityState(dims=dims, matrix=random_density_matrix(rng, math.prod(dims)))


def _qutrit_qubit_povms(t2: float) -> list[Povm]:
    return resolve_povms(
        f"gsic3:0.012,gsic3:0.012,gsic2:{t2!r}", (3, 3, 2), conjugate_assignment="MCM"
    )


@pytest.mark.parametrize("mode", [CorrelationMode.UNFOLDING, CorrelationMode.MARGINAL_KRON])
def test_noise_margins_match_evaluating_each_mixture(mode: CorrelationMode) -> None:
    pure = build_named_state("example4_rho", {"p": 1.0})
    povms = _qutrit_qubit_povms(0.068)
    p_values = [0.0, 0.1, 0.41, 0.75, 1.0]
    margins = noise_margins(pure, povms, "C|(A|B)", mode, p_values)
    for p, margin in zip(p_values, margins, strict=True):
        direct = evaluate(mix_white_noise(pure, p), povms, "C|(A|B)", mode)
        assert margin == pytest.approx(direct.margin, abs=1e-12)


def test_unfolding_detects_the_noisy_qutrit_state_above_the_threshold() -> None:
    pure = build_named_state("example4_rho", {"p": 1.0})
    povms = _qutrit_qubit_povms(0.068 / 6)
    low, high = noise_margins(pure, povms, "C|(A|B)", CorrelationMode.UNFOLDING, [0.40, 0.41])
    assert low < 0 < high


def test_unfolding_trace_norm_is_convex_under_mixing(
    rng: np.random.Generator, sic3: list[Povm]
) -> None:
    for _ in range(10):
        rho, sigma = _random_state(rng, (2, 2, 2)), _random_state(rng, (2, 2, 2))
        weight = float(rng.uniform())
        blend = weight * rho.matrix + (1 - weight) * sigma.matrix
        mixed = DensityState(dims=rho.dims, matrix=blend)
        norms = [
            evaluate(state, sic3, "A|(B|C)", CorrelationMode.UNFOLDING).trace_norm
            for state in (mixed, rho, sigma)
        ]
        assert norms[0] <= weight * norms[1] + (1 - weight) * norms[2] + 1e-12


def test_renormalized_gsic_at_sic_purity_reproduces_sic_margins(
    rng: np.random.Generator, sic3: list[Povm]
) -> None:
    boundary = renormalize(build_gsic(2, gsic_t_range(2), extended=True))
    for _ in range(20):
        rho = _random_state(rng, (2, 2, 2))
        sic = evaluate(rho, sic3, "A|(B|C)", CorrelationMode.UNFOLDING)
        gsic = evaluate(rho, [boundary] * 3, "A|(B|C)", CorrelationMode.UNFOLDING)
        assert gsic.margin == pytest.approx(sic.margin, abs=1e-10)


def test_renormalization_scales_matrix_and_bound_together(rng: np.random.Generator) -> None:
    rho = _random_state(rng, (2, 2, 2))
    plain = resolve_povms("sic2", rho.dims, normalization="povm")
    scaled = resolve_povms("sic2", rho.dims, normalization="renormalized")
    factor = 3.0**1.5
    before = evaluate(rho, plain, "A|(B|C)", CorrelationMode.UNFOLDING)
    after = evaluate(rho, scaled, "A|(B|C)", CorrelationMode.UNFOLDING)
    assert after.trace_norm == pytest.approx(factor * before.trace_norm)
    assert after.bound.value == pytest.approx(factor * before.bound.value)
    assert (after.margin > 0) == (before.margin > 0)


def test_separable_bound_grows_with_purity() -> None:
    for dim, limit in [(2, 0.068), (3, 0.012)]:
        ts = np.linspace(limit / 6, limit, 6)
        values = [separable_bound([build_gsic(dim, float(t))] * 2).value for t in ts]
        purities = [separable_bound([build_gsic(dim, float(t))]).factors[0].parameter for t in ts]
        assert all(b > a for a, b in zip(purities, purities[1:], strict=False))
        assert all(b > a for a, b in zip(values, values[1:], strict=False))
