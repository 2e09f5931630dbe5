"""Structured logging configuration."""

from __future__ import annotations

import json

from sicsep.logging import (
    bind_run_context,
    clear_logging_context,
    configure_logging,
    get_logger,
)


def test_json_logs_carry_bound_context(capsys) -> None:
    configure_logging("INFO")
    bind_run_context(command="detect")
    try:
        get_logger("sicsep.test").info("scan_completed", trees=6)
        get_logger("sicsep.test").debug("criterion_evaluated")
    finally:
        clear_logging_context()
    captured = capsys.readouterr()
    assert captured.out == ""
    lines = [line for line in captured.err.splitlines() if line.strip()]
    assert len(lines) == 1
    record = json.loads(lines[0])
    assert record["event"] == "scan_completed"
    assert record["command"] == "detect"
    assert record["trees"] == 6
    assert record["level"] == "info"
