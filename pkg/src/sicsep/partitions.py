"""Partition trees and their compact text form.

A tree says how an N-partite correlation matrix is assembled. Leaves carry
0-based subsystem indices; text labels ``A..Z`` map to indices by position.

Grammar (whitespace ignored)::

    tree  := group ('|' group)*      '|' is right-associative
    group := '(' tree ')' | label+   several labels form a chain: A B C == A|(B|C)
    label := 'A'..'Z' | digits
"""

from __future__ import annotations

import itertools
import string
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from sicsep.errors import PartitionParseError


@dataclass(frozen=True)
class Leaf:
    index: int


@dataclass(frozen=True)
class Split:
    left: PartitionTree
    right: PartitionTree

    @property
    def distinguished(self) -> int | None:
        """Subsystem labelling the diagonal blocks, if this split has one."""
        if isinstance(self.left, Leaf) and isinstance(self.right, Split):
            return self.left.index
        if isinstance(self.right, Leaf) and isinstance(self.left, Split):
            return self.right.index
        return None


PartitionTree = Leaf | Split


def leaves(tree: PartitionTree) -> tuple[int, ...]:
    """Subsystem indices in left-to-right order."""
    if isinstance(tree, Leaf):
        return (tree.index,)
    return leaves(tree.left) + leaves(tree.right)


def label_for(index: int) -> str:
    return string.ascii_uppercase[index] if index < 26 else str(index)


def render_partition(tree: PartitionTree) -> str:
    if isinstance(tree, Leaf):
        return label_for(tree.index)

    def part(child: PartitionTree) -> str:
        text = render_partition(child)
        return f"({text})" if isinstance(child, Split) else text

    return f"{part(tree.left)}|{part(tree.right)}"


def validate_tree(tree: PartitionTree, n_subsystems: int | None = None) -> PartitionTree:
    """Raise unless ``tree`` is a split over distinct, in-range subsystems."""
    text = render_partition(tree)
    if not isinstance(tree, Split):
        raise PartitionParseError("a partition needs at least two subsystems", text=text)
    indices = leaves(tree)
    if len(set(indices)) != len(indices):
        raise PartitionParseError(f"subsystem repeated in {text}", text=text)
    if n_subsystems is not None:
        outside = [i for i in indices if i < 0 or i >= n_subsystems]
        if outside:
            raise PartitionParseError(
                f"{text} names subsystems {outside} but the state has {n_subsystems}",
                text=text,
            )
    return tree


def chain(labels: Sequence[int]) -> PartitionTree:
    """labels[0] | (labels[1] | (...))."""
    if not labels:
        raise PartitionParseError("empty chain", text="")
    tree: PartitionTree = Leaf(labels[-1])
    for index in reversed(labels[:-1]):
        tree = Split(Leaf(index), tree)
    return tree


def pair_then_chain(labels: Sequence[int]) -> PartitionTree:
    """(A1|A2) | (A3|...|AN)."""
    if len(labels) < 3:
        raise PartitionParseError("pair_then_chain needs at least three subsystems", text="")
    return Split(chain(labels[:2]), chain(labels[2:]))


def half_split(labels: Sequence[int]) -> PartitionTree:
    """First floor(N/2) subsystems against the rest, each side a chain."""
    if len(labels) < 2:
        raise PartitionParseError("half_split needs at least two subsystems", text="")
    cut = len(labels) // 2
    return Split(chain(labels[:cut]), chain(labels[cut:]))


PRESETS: dict[str, Callable[[Sequence[int]], PartitionTree]] = {
    "nc1": chain,
    "nc2": pair_then_chain,
    "nc3": half_split,
}


def preset(name: str, n: int) -> PartitionTree:
    if name not in PRESETS:
        raise PartitionParseError(
            f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}", text=name
        )
    return PRESETS[name](list(range(n)))


def canonical_trees(n: int) -> list[PartitionTree]:
    """The trees a scan evaluates on an n-subsystem state, sorted by text."""
    if n < 2:
        raise PartitionParseError("a scan needs at least two subsystems", text=str(n))
    trees: list[PartitionTree] = [
        Split(Leaf(a), Leaf(b)) for a, b in itertools.combinations(range(n), 2)
    ]
    for triple in itertools.combinations(range(n), 3):
        for dist in triple:
            rest = [i for i in triple if i != dist]
            trees.append(Split(Leaf(dist), chain(rest)))
    if n >= 4:
        trees.extend(preset(name, n) for name in PRESETS)
    if n == 4:
        for partner in (1, 2, 3):
            others = [i for i in (1, 2, 3) if i != partner]
            trees.append(Split(chain([0, partner]), chain(others)))
        for dist in range(4):
            trees.append(Split(Leaf(dist), chain([i for i in range(4) if i != dist])))
    unique = {render_partition(tree): tree for tree in trees}
    return [unique[text] for text in sorted(unique)]


class _Parser:
    """Recursive descent over the partition grammar; columns are 1-based."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: int | None = None) -> PartitionParseError:
        column = (self.pos if pos is None else pos) + 1
        return PartitionParseError(
            f"{message} at column {column} in {self.text!r}", text=self.text, column=column
        )

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> PartitionTree:
        tree = self.tree()
        if self.peek():
            raise self.error(f"unexpected {self.peek()!r}")
        return tree

    def tree(self) -> PartitionTree:
        groups = [self.group()]
        while self.peek() == "|":
            self.pos += 1
            groups.append(self.group())
        result = groups[-1]
        for group in reversed(groups[:-1]):
            result = Split(group, result)
        return result

    def group(self) -> PartitionTree:
        char = self.peek()
        if char == "(":
            self.pos += 1
            inner = self.tree()
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.pos += 1
            return inner
        labels: list[int] = []
        while (char := self.peek()) and (char in string.ascii_uppercase or char.isdigit()):
            labels.append(self.label())
        if not labels:
            found = repr(char) if char else "end of input"
            raise self.error(f"expected a subsystem label or '(' but found {found}")
        return chain(labels)

    def label(self) -> int:
        char = self.text[self.pos]
        if char.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            return int(self.text[start : self.pos])
        self.pos += 1
        return string.ascii_uppercase.index(char)


def parse_partition(text: str, n_subsystems: int | None = None) -> PartitionTree:
    """Parse ``A|(B|C)``-style text into a validated tree."""
    if not text.strip():
        raise PartitionParseError("empty partition", text=text, column=1)
    tree = _Parser(text).parse()
    return validate_tree(tree, n_subsystems)
