"""Graph skeletons, oriented 2-cells, and signed boundary matrices.

Conventions used throughout the package:

* Every edge carries an arbitrary but fixed reference orientation
  ``(tail, head)``.  Flow values, incidence signs, and cycle traversals are
  all expressed relative to it.
* ``b1`` is ``node_count x edge_count`` with column ``k`` holding ``-1`` at
  ``tail(e_k)`` and ``+1`` at ``head(e_k)``.
* ``b2`` is ``edge_count x cell_count``; column ``j`` holds the signed
  incidence of cell ``j``'s boundary walk.  ``b1 @ b2 == 0`` always, in
  exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class CellError(ValueError):
    """Invalid skeleton, cycle, or cell complex."""


@dataclass(frozen=True)
class Skeleton:
    """Simple undirected graph with a reference orientation per edge.

    ``edges[k] = (tail, head)`` fixes the orientation of edge ``k``.  The
    edge order is part of the identity of the skeleton: flow matrices and
    boundary matrices are indexed by it.

    Rejects self-loops, parallel edges, and out-of-range node indices.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    _index: dict = field(init=False, repr=False, compare=False)
    _arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, node_count: int, edges: Iterable[Sequence[int]]):
        if node_count < 1:
            raise CellError("node_count must be >= 1")
        pairs = tuple((int(u), int(v)) for u, v in edges)
        index: dict[tuple[int, int], int] = {}
        for k, (u, v) in enumerate(pairs):
            if u == v:
                raise CellError(f"self-loop at node {u}")
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise CellError(f"edge ({u}, {v}) out of range for {node_count} nodes")
            key = (u, v) if u < v else (v, u)
            if key in index:
                raise CellError(f"parallel edge between {key[0]} and {key[1]}")
            index[key] = k
        object.__setattr__(self, "node_count", node_count)
        object.__setattr__(self, "edges", pairs)
        object.__setattr__(self, "_index", index)
        arr = np.asarray(pairs, dtype=np.int64).reshape(len(pairs), 2)
        arr.setflags(write=False)
        object.__setattr__(self, "_arr", arr)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        """Edges as a read-only ``(E, 2)`` int array of (tail, head) rows."""
        return self._arr

    def has_edge(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        return key in self._index

    def edge_id(self, u: int, v: int) -> tuple[int, int]:
        """Index and sign of the edge between ``u`` and ``v``.

        The sign is ``+1`` when ``(u, v)`` equals the reference orientation
        and ``-1`` when it is queried against it.
        """
        key = (u, v) if u < v else (v, u)
        try:
            k = self._index[key]
        except KeyError:
            raise CellError(f"no edge between {u} and {v}") from None
        return k, (1 if self.edges[k] == (u, v) else -1)

    def adjacency(self) -> list[list[int]]:
        """Neighbor lists, each sorted ascending."""
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for nbrs in adj:
            nbrs.sort()
        return adj


@dataclass(frozen=True)
class TwoCell:
    """A polygonal 2-cell: a simple cycle in canonical form.

    ``nodes`` is the canonical closed walk (first node is the smallest on
    the cycle, direction chosen so the second node is smaller than the
    last).  ``boundary`` lists ``(edge_index, sign)`` along that walk, with
    sign ``+1`` where the walk agrees with the edge's reference
    orientation.  Instances are only built through :func:`canonicalize`.
    """

    nodes: tuple[int, ...]
    boundary: tuple[tuple[int, int], ...]

    @property
    def canonical_key(self) -> tuple[int, ...]:
        return self.nodes

    def __len__(self) -> int:
        return len(self.nodes)


def canonicalize(skeleton: Skeleton, cycle: Sequence[int]) -> TwoCell:
    """Build the canonical :class:`TwoCell` for a closed simple cycle.

    ``cycle`` lists the nodes of the walk once (no repeated first node).
    All ``2 * len(cycle)`` rotations and reflections of a cycle map to the
    same cell.

    Raises :class:`CellError` if the cycle is shorter than 3, revisits a
    node, or uses an edge absent from the skeleton.
    """
    nodes = tuple(int(n) for n in cycle)
    if len(nodes) >= 2 and nodes[0] == nodes[-1]:
        nodes = nodes[:-1]
    if len(nodes) < 3:
        raise CellError(f"cycle too short: {nodes}")
    if len(set(nodes)) != len(nodes):
        raise CellError(f"cycle is not simple: {nodes}")

    i = nodes.index(min(nodes))
    forward = nodes[i:] + nodes[:i]
    backward = (forward[0],) + tuple(reversed(forward[1:]))
    canon = forward if forward[1] < backward[1] else backward

    boundary = []
    for a, b in zip(canon, canon[1:] + (canon[0],)):
        boundary.append(skeleton.edge_id(a, b))
    return TwoCell(nodes=canon, boundary=tuple(boundary))


@dataclass(frozen=True)
class CellComplex:
    """A skeleton together with an ordered list of distinct 2-cells."""

    skeleton: Skeleton
    cells: tuple[TwoCell, ...] = ()
    _keys: frozenset = field(init=False, repr=False, compare=False)

    def __init__(self, skeleton: Skeleton, cells: Iterable[TwoCell] = ()):
        cells = tuple(cells)
        keys = set()
        for cell in cells:
            if canonicalize(skeleton, cell.nodes) != cell:
                raise CellError(f"cell {cell.nodes} does not fit the skeleton")
            if cell.canonical_key in keys:
                raise CellError(f"duplicate cell {cell.canonical_key}")
            keys.add(cell.canonical_key)
        object.__setattr__(self, "skeleton", skeleton)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "_keys", frozenset(keys))

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def contains_cell(self, key: tuple[int, ...]) -> bool:
        return key in self._keys

    def cell_keys(self) -> frozenset:
        return self._keys

    def with_cell(self, cell: TwoCell) -> "CellComplex":
        """New complex with ``cell`` appended; rejects duplicates."""
        return CellComplex(self.skeleton, self.cells + (cell,))


def build_b1(skeleton: Skeleton) -> sp.csc_matrix:
    """Node-to-edge incidence matrix: ``-1`` at each tail, ``+1`` at each head."""
    e = skeleton.edge_count
    arr = skeleton.edge_array()
    rows = np.empty(2 * e, dtype=np.int64)
    data = np.empty(2 * e, dtype=np.int64)
    rows[0::2] = arr[:, 0]
    data[0::2] = -1
    rows[1::2] = arr[:, 1]
    data[1::2] = 1
    cols = np.repeat(np.arange(e, dtype=np.int64), 2)
    return sp.csc_matrix((data, (rows, cols)), shape=(skeleton.node_count, e), dtype=np.int64)


def cell_column(cell: TwoCell, edge_count: int) -> sp.csc_matrix:
    """Signed incidence of one cell's boundary as an ``edge_count x 1`` column."""
    rows = np.fromiter((k for k, _ in cell.boundary), dtype=np.int64, count=len(cell.boundary))
    data = np.fromiter((s for _, s in cell.boundary), dtype=np.int64, count=len(cell.boundary))
    cols = np.zeros(len(cell.boundary), dtype=np.int64)
    return sp.csc_matrix((data, (rows, cols)), shape=(edge_count, 1), dtype=np.int64)


def build_b2(complex: CellComplex) -> sp.csc_matrix:
    """Edge-to-cell incidence matrix of all cells in order.

    Satisfies ``build_b1(skeleton) @ build_b2(complex) == 0`` exactly; the
    number of nonzeros in column ``j`` equals the boundary length of cell
    ``j``.
    """
    e = complex.skeleton.edge_count
    rows, cols, data = [], [], []
    for j, cell in enumerate(complex.cells):
        for k, s in cell.boundary:
            rows.append(k)
            cols.append(j)
            data.append(s)
    return sp.csc_matrix(
        (np.asarray(data, dtype=np.int64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(e, complex.cell_count),
        dtype=np.int64,
    )
