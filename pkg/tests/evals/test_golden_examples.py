"""Golden reproduction of the four worked examples."""

from __future__ import annotations

import csv
import json
import math

import pytest
from rich.console import Console

from sicsep.models import ExampleSummary
from sicsep.reproduce import ReproduceConfig, run_example


def _config(tmp_path) -> ReproduceConfig:
    return ReproduceConfig(out_dir=tmp_path, workers=4, console=Console(file=None, quiet=True))


def _assertions(summary: ExampleSummary) -> dict[str, bool]:
    return {item.id: item.passed for item in summary.assertions}


@pytest.mark.evals
def test_example1_headline_and_oracle(tmp_path) -> None:
    summary = run_example(1, _config(tmp_path))
    assert _assertions(summary) == {
        "example1.headline": True,
        "example1.printed_matrix": True,
        "example1.oracle": True,
        "example1.unfolding_detects": True,
    }
    assert summary.values["p_bc_trace_norm"] == pytest.approx(1.0)
    assert summary.values["unfolding_verdict"] == "ENTANGLED"
    assert summary.values["unfolding_margin"] == pytest.approx(0.0687, abs=5e-4)
    marginal = summary.values["mode_relative"]["marginal_kron"]
    assert marginal["trace_norm"] == pytest.approx(math.sqrt(3))
    assert marginal["grid_min_column_norm"] > 1.0
    assert marginal["four_partite_trace_norm_at_third"] == pytest.approx(0.92476, abs=1e-4)
    with (tmp_path / "example1.csv").open(encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 231
    assert {"b", "c", "column_norm", "closed_form"} <= set(rows[0])


@pytest.mark.evals
def test_example2_is_ppt_and_unfolding_inconclusive(tmp_path) -> None:
    summary = run_example(2, _config(tmp_path))
    assert _assertions(summary) == {
        "example2.ppt": True,
        "example2.unfolding_inconclusive": True,
    }
    assert summary.values["t_points"] == 24
    assert summary.values["max_unfolding_margin"] == pytest.approx(-1.445e-4, abs=5e-6)
    assert summary.values["mode_relative"]["marginal_kron"]["min_margin"] > 0


@pytest.mark.evals
def test_example3_unfolding_and_pt_data(tmp_path) -> None:
    summary = run_example(3, _config(tmp_path))
    assert _assertions(summary) == {
        "example3.unfolding_inconclusive": True,
        "example3.npt_on_a": True,
    }
    assert summary.values["max_unfolding_margin"] == pytest.approx(-0.0288, abs=5e-4)
    assert summary.values["npt_b_values"] == list(summary.values["b_values"])
    assert summary.values["min_pt_eigenvalue"] < 0
    with (tmp_path / "example3.csv").open(encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert all(abs(float(r["pt_min_B"])) < 1e-9 for r in rows)
    assert all(float(r["pt_min_C"]) < 0 for r in rows)


@pytest.mark.evals
@pytest.mark.parametrize(
    ("example", "names"),
    [
        (1, ("example1.csv", "example1_four_partite.csv", "example1_summary.json")),
        (2, ("example2.csv", "example2_summary.json")),
    ],
)
def test_reruns_are_byte_identical(tmp_path, example: int, names: tuple[str, ...]) -> None:
    first, second = tmp_path / "first", tmp_path / "second"
    run_example(example, _config(first))
    run_example(example, _config(second))
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


@pytest.mark.evals
@pytest.mark.slow
def test_example4_unfolding_threshold(tmp_path) -> None:
    summary = run_example(4, _config(tmp_path))
    assert _assertions(summary) == {
        "example4.pure_detected": True,
        "example4.noise_inconclusive": True,
        "example4.threshold": True,
    }
    values = summary.values
    assert values["unfolding_threshold"] == pytest.approx(0.41)
    assert values["unfolding_margin_at_one"] == pytest.approx(1.7527e-2, rel=1e-3)
    assert values["unfolding_margin_at_noise"] == pytest.approx(-3.79e-4, abs=5e-6)
    assert values["best_partition_at_one"] == "C|(A|B)"
    assert values["t3_points"] == 12
    assert values["t2_points"] == 12
    assert values["mode_relative"]["marginal"]["threshold"] == 0.0
    assert values["mode_relative"]["blockdiag"]["threshold"] == 0.0
    with (tmp_path / "example4.csv").open(encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert [r["verdict"] for r in rows if float(r["p"]) >= 0.41] == ["ENTANGLED"] * 60
    payload = json.loads((tmp_path / "example4_summary.json").read_text(encoding="utf-8"))
    assert payload["artifacts"] == [
        "example4.csv",
        "example4_t.csv",
        "example4_modes.csv",
        "example4_summary.json",
    ]
