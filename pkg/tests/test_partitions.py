"""Partition tree grammar, presets and scan sets."""

from __future__ import annotations

import pytest

from sicsep.errors import PartitionParseError
from sicsep.partitions import (
    Leaf,
    Split,
    canonical_trees,
    chain,
    leaves,
    parse_partition,
    preset,
    render_partition,
)

A_BC = Split(Leaf(0), Split(Leaf(1), Leaf(2)))


@pytest.mark.parametrize("text", ["A|(B|C)", "A|B|C", "ABC", " A | ( B C ) ", "0|(1|2)"])
def test_equivalent_spellings_of_a_chain(text: str) -> None:
    assert parse_partition(text) == A_BC


def test_render_is_canonical() -> None:
    tree = parse_partition("(AB)|(CD)")
    assert render_partition(tree) == "(A|B)|(C|D)"
    assert parse_partition(render_partition(tree)) == tree
    assert leaves(tree) == (0, 1, 2, 3)


def test_distinguished_subsystem() -> None:
    assert A_BC.distinguished == 0
    assert parse_partition("(A|B)|C").distinguished == 2
    assert parse_partition("A|B").distinguished is None
    assert parse_partition("(A|B)|(C|D)").distinguished is None


@pytest.mark.parametrize(
    ("text", "message", "column"),
    [
        ("A|(B|C", "expected '\\)'", 7),
        ("A|?", "expected a subsystem label", 3),
        ("A|B)", "unexpected '\\)'", 4),
    ],
)
def test_parse_errors_carry_the_column(text: str, message: str, column: int) -> None:
    with pytest.raises(PartitionParseError, match=message) as excinfo:
        parse_partition(text)
    assert excinfo.value.column == column
    assert excinfo.value.text == text


def test_tree_validation() -> None:
    with pytest.raises(PartitionParseError, match="empty partition"):
        parse_partition("   ")
    with pytest.raises(PartitionParseError, match="at least two subsystems"):
        parse_partition("A")
    with pytest.raises(PartitionParseError, match="repeated"):
        parse_partition("A|(B|A)")
    with pytest.raises(PartitionParseError, match="the state has 3"):
        parse_partition("A|D", 3)


def test_presets() -> None:
    labels = [0, 1, 2, 3, 4]
    assert render_partition(chain(labels)) == "A|(B|(C|(D|E)))"
    assert render_partition(preset("nc2", 5)) == "(A|B)|(C|(D|E))"
    assert render_partition(preset("nc3", 5)) == "(A|B)|(C|(D|E))"
    assert render_partition(preset("nc3", 4)) == "(A|B)|(C|D)"
    with pytest.raises(PartitionParseError, match="unknown preset"):
        preset("nc9", 4)
    with pytest.raises(PartitionParseError, match="at least three"):
        preset("nc2", 2)


def test_canonical_trees_for_three_subsystems() -> None:
    texts = [render_partition(tree) for tree in canonical_trees(3)]
    assert texts == ["A|(B|C)", "A|B", "A|C", "B|(A|C)", "B|C", "C|(A|B)"]


def test_canonical_trees_for_four_subsystems_include_every_pairing() -> None:
    texts = {render_partition(tree) for tree in canonical_trees(4)}
    assert {"(A|B)|(C|D)", "(A|C)|(B|D)", "(A|D)|(B|C)"} <= texts
    assert {"A|(B|(C|D))", "D|(A|(B|C))", "A|B", "C|D", "B|(C|D)"} <= texts
    with pytest.raises(PartitionParseError):
        canonical_trees(1)
