"""Reproduction runner plumbing."""

from __future__ import annotations

import pytest
from rich.console import Console

from sicsep.errors import ParameterRangeError
from sicsep.reproduce import RUNNERS, ReproduceConfig, run_example


def test_runners_cover_every_example() -> None:
    assert sorted(RUNNERS) == [1, 2, 3, 4]


def test_unknown_example_number(tmp_path) -> None:
    config = ReproduceConfig(out_dir=tmp_path, console=Console(quiet=True))
    with pytest.raises(ParameterRangeError, match="numbered 1-4"):
        run_example(5, config)


def test_summary_table_is_rendered(tmp_path) -> None:
    console = Console(record=True, width=110)
    summary = run_example(2, ReproduceConfig(out_dir=tmp_path / "out", console=console))
    text = console.export_text()
    assert "Example 2: PASS" in text
    assert "example2.unfolding_inconclusive" in text
    assert summary.artifacts == ["example2.csv", "example2_summary.json"]


def test_example3_npt_check_uses_the_configured_psd_tolerance(tmp_path) -> None:
    config = ReproduceConfig(out_dir=tmp_path, psd_tolerance=0.05, console=Console(quiet=True))
    summary = run_example(3, config)
    assert summary.status == "fail"
    assert {a.id: a.passed for a in summary.assertions} == {
        "example3.unfolding_inconclusive": True,
        "example3.npt_on_a": False,
    }
    assert summary.values["npt_b_values"] == []
