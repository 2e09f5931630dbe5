"""Expectation vectors and correlation matrices over partition trees.

Three constructions are available for trees with more than two leaves:

- ``BLOCK_DIAG``: a leading leaf labels diagonal blocks, block i being the
  correlation matrix of the remaining group conditioned on outcome i.
- ``MARGINAL_KRON``: each split is the Kronecker product of the correlation
  objects of its two reduced groups, a lone leaf contributing diag(e).
- ``UNFOLDING``: a flattening of the joint correlation tensor.

Every construction reduces to the bipartite matrix on a two-leaf split.
Operators always act on the subsystem they belong to; the tree only decides
how outcome indices are arranged.
"""

from __future__ import annotations

import math
import string
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from sicsep.errors import DimensionMismatchError, PartitionParseError
from sicsep.models import CorrelationMode
from sicsep.partitions import (
    Leaf,
    PartitionTree,
    Split,
    leaves,
    parse_partition,
    render_partition,
    validate_tree,
)
from sicsep.povm import Povm
from sicsep.states import DensityState
from sicsep.tensor import (
    DenseMatrix,
    RealMatrix,
    block_diagonal,
    kron_all,
    partial_trace,
    real_part,
)


@dataclass(frozen=True, eq=False)
class ExpectationVector:
    """values[i] = Tr(rho_sub E_i)."""

    subsystem: int
    values: RealMatrix

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """A real correlation matrix and how it was assembled.

    Attributes:
        matrix: The dense matrix.
        mode: Construction mode, ``None`` for a plain bipartite matrix.
        partition: Rendered partition text.
        blocks: Diagonal blocks when the root split is block-diagonal.
    """

    matrix: RealMatrix
    mode: CorrelationMode | None
    partition: str
    blocks: tuple[RealMatrix, ...] | None = None


@dataclass(frozen=True, eq=False)
class _Operator:
    """A (possibly unnormalized) operator on labelled subsystems in state order."""

    matrix: DenseMatrix
    labels: tuple[int, ...]
    dims: tuple[int, ...]

    def reduced(self, keep: Sequence[int]) -> _Operator:
        wanted = set(keep)
        missing = wanted - set(self.labels)
        if missing:
            raise DimensionMismatchError(f"subsystems {sorted(missing)} are not present")
        positions = [p for p, label in enumerate(self.labels) if label in wanted]
        if len(positions) == len(self.labels):
            return self
        return _Operator(
            matrix=partial_trace(self.matrix, self.dims, positions),
            labels=tuple(self.labels[p] for p in positions),
            dims=tuple(self.dims[p] for p in positions),
        )

    def conditioned(self, label: int, element: DenseMatrix) -> _Operator:
        """Tr_label[(E on label) X] as an operator on the other subsystems."""
        position = self.labels.index(label)
        factors = [
            element if p == position else np.eye(d, dtype=np.complex128)
            for p, d in enumerate(self.dims)
        ]
        weighted = kron_all(factors) @ self.matrix
        keep = [p for p in range(len(self.labels)) if p != position]
        return _Operator(
            matrix=partial_trace(weighted, self.dims, keep),
            labels=tuple(self.labels[p] for p in keep),
            dims=tuple(self.dims[p] for p in keep),
        )


def _povm_map(rho: DensityState, povms: Sequence[Povm]) -> dict[int, Povm]:
    if len(povms) != rho.n_subsystems:
        raise DimensionMismatchError(
            f"{len(povms)} POVMs for {rho.n_subsystems} subsystems",
            povms=len(povms),
            subsystems=rho.n_subsystems,
        )
    for index, (povm, dim) in enumerate(zip(povms, rho.dims, strict=True)):
        if povm.dim != dim:
            raise DimensionMismatchError(
                f"POVM {povm.descriptor} acts on C^{povm.dim} but subsystem {index} "
                f"has dim {dim}",
                subsystem=index,
            )
    return dict(enumerate(povms))


def _root(rho: DensityState) -> _Operator:
    return _Operator(matrix=rho.matrix, labels=tuple(range(rho.n_subsystems)), dims=rho.dims)


def _tensor(op: _Operator, order: Sequence[int], povms: dict[int, Povm]) -> RealMatrix:
    """T[i_1..i_k] = Tr(X E_{i_1} (x) ... (x) E_{i_k}), axes in ``order``."""
    reduced = op.reduced(order)
    k = len(reduced.labels)
    if 3 * k > len(string.ascii_letters):
        raise DimensionMismatchError(f"correlation tensor over {k} subsystems is too large")
    rows = string.ascii_letters[:k]
    cols = string.ascii_letters[k : 2 * k]
    outcomes = string.ascii_letters[2 * k : 3 * k]
    operands: list[np.ndarray] = [reduced.matrix.reshape(reduced.dims * 2)]
    subscripts = [rows + cols]
    for slot, label in enumerate(reduced.labels):
        operands.append(povms[label].stacked())
        subscripts.append(outcomes[slot] + cols[slot] + rows[slot])
    tensor = np.einsum(",".join(subscripts) + "->" + outcomes, *operands, optimize=True)
    axes = [reduced.labels.index(label) for label in order]
    return real_part(np.transpose(tensor, axes))


def _pair(op: _Operator, first: int, second: int, povms: dict[int, Povm]) -> RealMatrix:
    return _tensor(op, (first, second), povms)


def _block_kron(
    op: _Operator, tree: Split, povms: dict[int, Povm], mode: CorrelationMode
) -> RealMatrix:
    left = _build(op.reduced(leaves(tree.left)), tree.left, povms, mode)
    right = _build(op.reduced(leaves(tree.right)), tree.right, povms, mode)
    return np.kron(left, right)


def _conditioned_blocks(
    op: _Operator, tree: Split, povms: dict[int, Povm], mode: CorrelationMode
) -> list[RealMatrix]:
    if isinstance(tree.left, Leaf):
        label, rest = tree.left.index, tree.right
    else:
        assert isinstance(tree.right, Leaf)
        label, rest = tree.right.index, tree.left
    return [
        _build(op.conditioned(label, element), rest, povms, mode)
        for element in povms[label].elements
    ]


def _build(
    op: _Operator, tree: PartitionTree, povms: dict[int, Povm], mode: CorrelationMode
) -> RealMatrix:
    if isinstance(tree, Leaf):
        return np.diag(_tensor(op, (tree.index,), povms))
    if isinstance(tree.left, Leaf) and isinstance(tree.right, Leaf):
        return _pair(op, tree.left.index, tree.right.index, povms)
    if mode is CorrelationMode.UNFOLDING:
        rows, cols = unfolding_axes(tree)
        tensor = _tensor(op, rows + cols, povms)
        height = math.prod(tensor.shape[: len(rows)])
        return tensor.reshape(height, -1)
    if mode is CorrelationMode.BLOCK_DIAG and tree.distinguished is not None:
        return real_part(block_diagonal(_conditioned_blocks(op, tree, povms, mode)))
    return _block_kron(op, tree, povms, mode)


def unfolding_axes(tree: Split) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Row and column subsystems of the UNFOLDING matrix of ``tree``."""
    if isinstance(tree.left, Leaf) and isinstance(tree.right, Leaf):
        return (tree.left.index,), (tree.right.index,)
    if isinstance(tree.left, Leaf) and isinstance(tree.right, Split):
        rows, cols = unfolding_axes(tree.right)
        return (tree.left.index, *rows), cols
    return leaves(tree.left), leaves(tree.right)


def correlation_tensor(
    rho: DensityState, subsystems: Sequence[int], povms: Sequence[Povm]
) -> RealMatrix:
    """Joint correlation tensor over ``subsystems``, one axis per subsystem in that order."""
    if len(set(subsystems)) != len(subsystems) or not subsystems:
        raise DimensionMismatchError(
            f"subsystems {list(subsystems)} must be distinct and non-empty"
        )
    return _tensor(_root(rho), subsystems, _povm_map(rho, povms))


def expectation_vector(rho: DensityState, sub: int, povm: Povm) -> ExpectationVector:
    if not 0 <= sub < rho.n_subsystems:
        raise DimensionMismatchError(f"subsystem {sub} out of range for {rho.n_subsystems}")
    if povm.dim != rho.dims[sub]:
        raise DimensionMismatchError(
            f"POVM {povm.descriptor} acts on C^{povm.dim} but subsystem {sub} "
            f"has dim {rho.dims[sub]}"
        )
    values = _tensor(_root(rho), (sub,), {sub: povm})
    return ExpectationVector(subsystem=sub, values=values)


def bipartite_correlation(
    rho: DensityState, sub_a: int, sub_b: int, povm_a: Povm, povm_b: Povm
) -> CorrelationMatrix:
    """[P]_ij = Tr(rho_AB E_i (x) E_j); rows follow ``sub_a``."""
    if sub_a == sub_b:
        raise DimensionMismatchError("bipartite correlation needs two distinct subsystems")
    for sub, povm in ((sub_a, povm_a), (sub_b, povm_b)):
        if not 0 <= sub < rho.n_subsystems or povm.dim != rho.dims[sub]:
            raise DimensionMismatchError(
                f"POVM {povm.descriptor} does not fit subsystem {sub} of dims {list(rho.dims)}"
            )
    matrix = _pair(_root(rho), sub_a, sub_b, {sub_a: povm_a, sub_b: povm_b})
    tree = Split(Leaf(sub_a), Leaf(sub_b))
    return CorrelationMatrix(matrix=matrix, mode=None, partition=render_partition(tree))


def npartite_correlation(
    rho: DensityState,
    tree: PartitionTree | str,
    povms: Sequence[Povm],
    mode: CorrelationMode,
) -> CorrelationMatrix:
    """Correlation matrix of ``tree`` on the reduced state over its leaves."""
    if isinstance(tree, str):
        tree = parse_partition(tree, rho.n_subsystems)
    validated = validate_tree(tree, rho.n_subsystems)
    assert isinstance(validated, Split)
    povm_map = _povm_map(rho, povms)
    op = _root(rho).reduced(sorted(leaves(validated)))
    blocks: tuple[RealMatrix, ...] | None = None
    if mode is CorrelationMode.BLOCK_DIAG and validated.distinguished is not None:
        blocks = tuple(_conditioned_blocks(op, validated, povm_map, mode))
        matrix = real_part(block_diagonal(blocks))
    else:
        matrix = _build(op, validated, povm_map, mode)
    return CorrelationMatrix(
        matrix=matrix, mode=mode, partition=render_partition(validated), blocks=blocks
    )


def tripartite_correlation(
    rho: DensityState,
    distinguished: int,
    povms: Sequence[Povm],
    mode: CorrelationMode,
    *,
    others: Sequence[int] | None = None,
) -> CorrelationMatrix:
    """Three-subsystem correlation with ``distinguished`` labelling the outer index.

    States with more subsystems are reduced onto ``distinguished`` and the two
    ``others``, which must then be named.
    """
    n = rho.n_subsystems
    if n < 3:
        raise DimensionMismatchError(f"tripartite correlation needs three subsystems, got {n}")
    if not 0 <= distinguished < n:
        raise PartitionParseError(
            f"distinguished subsystem {distinguished} out of range", text=str(distinguished)
        )
    if others is None:
        if n != 3:
            raise DimensionMismatchError(
                f"name the two other subsystems of a {n}-subsystem state", subsystems=n
            )
        others = [i for i in range(3) if i != distinguished]
    if len(others) != 2:
        raise DimensionMismatchError(f"expected two other subsystems, got {list(others)}")
    tree = Split(Leaf(distinguished), Split(Leaf(others[0]), Leaf(others[1])))
    return npartite_correlation(rho, tree, povms, mode)
