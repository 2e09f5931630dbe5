"""Model validation tests."""

from __future__ import annotations

import pytest

from sicsep.errors import ErrorCode, PartitionParseError
from sicsep.models import PovmDocument, StateDocument, pairs_to_matrix


def test_state_document_needs_exactly_one_source() -> None:
    with pytest.raises(ValueError, match="exactly one of"):
        StateDocument(dims=[2])
    with pytest.raises(ValueError, match="dims must be positive"):
        StateDocument(dims=[2, 0], name="bell_psi_plus")
    with pytest.raises(ValueError, match="need 4"):
        StateDocument(dims=[2], matrix=[(1.0, 0.0)])


def test_povm_document_shape() -> None:
    with pytest.raises(ValueError, match="expected 4 elements"):
        PovmDocument(dim=2, elements=[[(1.0, 0.0)] * 4])
    with pytest.raises(ValueError, match="element 0 has 1 entries"):
        PovmDocument(dim=2, elements=[[(1.0, 0.0)]] * 4)


def test_pairs_to_matrix_checks_length() -> None:
    assert pairs_to_matrix([(1.0, 0.0), (0.0, 1.0)] * 2, 2)[0, 1] == 1j
    with pytest.raises(ValueError, match="expected 4 entries"):
        pairs_to_matrix([(1.0, 0.0)], 2)


def test_error_payload() -> None:
    error = PartitionParseError("bad", text="A|", column=3)
    assert error.code == ErrorCode.PARTITION_PARSE
    assert error.to_payload() == {
        "error_code": "PARTITION_PARSE",
        "error": "bad",
        "details": {"text": "A|", "column": 3},
    }
