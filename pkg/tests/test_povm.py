"""POVM construction and validation."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from sicsep.errors import DocumentError, ParameterRangeError, PovmError
from sicsep.models import Normalization, PovmKind, ValidationCheck, ValidationReport
from sicsep.povm import (
    build_gsic,
    build_sic_qubit,
    conjugate,
    gsic_t_range,
    load_povm,
    misprinted_gsic_qubit,
    renormalize,
    resolve_povm,
    resolve_povms,
    save_povm,
    validate,
)


def _checks(report: ValidationReport) -> dict[str, ValidationCheck]:
    return {check.id: check for check in report.checks}


def test_sic_qubit_passes_every_check() -> None:
    report = validate(build_sic_qubit())
    assert report.status == "pass"
    assert set(_checks(report)) == {"hermitian", "psd", "completeness", "sic_overlap"}


def test_renormalized_sic_still_validates() -> None:
    povm = renormalize(build_sic_qubit())
    assert povm.scale == pytest.approx(math.sqrt(3))
    assert povm.descriptor == "sic2*"
    assert validate(povm).status == "pass"
    with pytest.raises(PovmError, match="already renormalized"):
        renormalize(povm)


@pytest.mark.parametrize(("dim", "limit"), [(2, 0.068), (3, 0.012)])
def test_gsic_families_validate_over_the_printed_range(dim: int, limit: float) -> None:
    for t in np.linspace(-limit, limit, 21):
        if abs(t) < 1e-15:
            continue
        povm = build_gsic(dim, float(t))
        report = validate(povm)
        assert report.status == "pass", (t, report)
        expected = 1 / 8 + 27 * t * t if dim == 2 else 1 / 27 + 128 * t * t
        assert povm.parameter == pytest.approx(expected, abs=1e-12)


def test_gsic_rejects_zero_and_out_of_range_t() -> None:
    with pytest.raises(ParameterRangeError, match="non-zero"):
        build_gsic(2, 0.0)
    with pytest.raises(ParameterRangeError, match="exceeds"):
        build_gsic(3, 0.013)
    with pytest.raises(ParameterRangeError, match="d=2 and d=3"):
        build_gsic(4, 0.01)


def test_psd_boundary_of_the_families() -> None:
    assert gsic_t_range(2) == pytest.approx(1 / math.sqrt(216), abs=1e-12)
    assert 0.012 <= gsic_t_range(3) <= 0.014
    beyond_printed = 0.5 * (0.012 + gsic_t_range(3))
    assert build_gsic(3, beyond_printed, extended=True).family_t == beyond_printed
    with pytest.raises(ParameterRangeError):
        build_gsic(3, beyond_printed)
    with pytest.raises(ParameterRangeError):
        build_gsic(2, 0.0685, extended=True)


def test_gsic_at_the_boundary_is_a_sic() -> None:
    povm = build_gsic(2, gsic_t_range(2), extended=True)
    assert povm.parameter == pytest.approx(0.25, abs=1e-12)


def test_misprinted_family_fails_completeness_by_six_root_two_t() -> None:
    t = 0.05
    report = validate(misprinted_gsic_qubit(t))
    checks = _checks(report)
    assert report.status == "fail"
    assert not checks["completeness"].passed
    assert checks["completeness"].deviation == pytest.approx(6 * math.sqrt(2) * t, abs=1e-12)
    assert checks["completeness"].details["entry"] == [1, 1]


def test_conjugate_is_an_involution() -> None:
    povm = build_gsic(2, 0.03)
    twice = conjugate(conjugate(povm))
    assert conjugate(povm).label == "conj(gsic2(t=0.03))"
    assert twice.label == povm.label
    for a, b in zip(povm.elements, twice.elements, strict=True):
        assert np.array_equal(a, b)
    assert validate(conjugate(povm)).status == "pass"


def test_resolve_povms_broadcasts_and_conjugates_gsic_only() -> None:
    povms = resolve_povms("gsic:0.01", (3, 3, 2), conjugate_assignment="MCM")
    assert [p.label for p in povms] == ["gsic3(t=0.01)", "conj(gsic3(t=0.01))", "gsic2(t=0.01)"]
    assert all(p.normalization is Normalization.POVM for p in povms)

    sics = resolve_povms("sic2", (2, 2, 2), conjugate_assignment="MCM")
    assert {p.label for p in sics} == {"sic2"}
    assert all(p.normalization is Normalization.RENORMALIZED for p in sics)


def test_resolve_povms_per_subsystem_list() -> None:
    povms = resolve_povms("sic2,gsic2:0.04", (2, 2), normalization="povm")
    assert [p.kind for p in povms] == [PovmKind.SIC, PovmKind.GSIC]
    assert povms[1].family_t == pytest.approx(0.04)


def test_resolve_povm_errors() -> None:
    with pytest.raises(PovmError, match="subsystem has dimension 3"):
        resolve_povm("sic2", 3)
    with pytest.raises(PovmError, match="unknown POVM spec"):
        resolve_povm("tetra", 2)
    with pytest.raises(ParameterRangeError, match="needs a parameter"):
        resolve_povm("gsic2", 2)
    with pytest.raises(PovmError, match="needs a dimension"):
        resolve_povm("gsic:0.01", None)
    assert resolve_povm("gsic3:0.01", None).dim == 3
    with pytest.raises(PovmError, match="2 entries for 3 subsystems"):
        resolve_povms("sic2,sic2", (2, 2, 2))
    with pytest.raises(PovmError, match="only M and C"):
        resolve_povms("sic2", (2,), conjugate_assignment="MX")


def test_povm_document_round_trip(tmp_path) -> None:
    path = tmp_path / "gsic.json"
    povm = build_gsic(3, 0.01)
    save_povm(povm, path)
    loaded = load_povm(path)
    assert loaded.kind is PovmKind.GSIC
    assert loaded.parameter == povm.parameter
    for a, b in zip(povm.elements, loaded.elements, strict=True):
        assert np.array_equal(a, b)
    assert resolve_povm(f"file:{path}", 3).label == povm.label


def test_load_povm_rejects_incomplete_sets(tmp_path) -> None:
    path = tmp_path / "bad.json"
    save_povm(misprinted_gsic_qubit(0.05), path)
    with pytest.raises(PovmError, match="completeness"):
        load_povm(path)


def test_load_povm_reports_json_position(tmp_path) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{\n  "dim": 2,\n  "elements": [\n', encoding="utf-8")
    with pytest.raises(DocumentError) as excinfo:
        load_povm(path)
    assert excinfo.value.details["line"] >= 3

    path.write_text(json.dumps({"dim": 2, "elements": []}), encoding="utf-8")
    with pytest.raises(DocumentError, match="invalid POVM document"):
        load_povm(path)
