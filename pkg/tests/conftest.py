"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's own code paths:
projections go through dense Moore-Penrose pseudoinverses, graph
structure comes from networkx, and cycle walks are summed edge by edge.
Tests compare the fast implementations against these.
"""

import numpy as np
import networkx as nx
import pytest

from cellflow import CellComplex, Skeleton, canonicalize


def dense_project(a: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Orthogonal projection of the columns of ``f`` onto the column span
    of ``a``, via the dense pseudoinverse."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0 or a.shape[1] == 0:
        return np.zeros_like(f)
    return a @ (np.linalg.pinv(a) @ f)


def random_complex(rng: np.random.Generator, max_nodes: int = 50) -> CellComplex:
    """Random simple graph with a random subset of its cycle basis as cells."""
    while True:
        n = int(rng.integers(4, max_nodes + 1))
        p = float(rng.uniform(0.05, 0.5))
        g = nx.gnp_random_graph(n, p, seed=int(rng.integers(2**32)))
        if g.number_of_edges() >= 3:
            break
    edges = sorted((min(u, v), max(u, v)) for u, v in g.edges())
    skeleton = Skeleton(n, edges)
    basis = nx.cycle_basis(g)
    cells = []
    keys = set()
    for cyc in basis:
        if len(cyc) < 3 or rng.random() < 0.4:
            continue
        cell = canonicalize(skeleton, tuple(cyc))
        if cell.canonical_key in keys:
            continue
        keys.add(cell.canonical_key)
        cells.append(cell)
    return CellComplex(skeleton, cells)


def random_small_complex(rng: np.random.Generator, max_edges: int = 30) -> CellComplex:
    """Like :func:`random_complex` but capped by edge count, for dense oracles."""
    while True:
        cx = random_complex(rng, max_nodes=12)
        if cx.skeleton.edge_count <= max_edges:
            return cx


def grid_complex(rows: int = 3, cols: int = 5):
    """Rectangular grid skeleton with three overlapping 8-edge block cells.

    Node (r, c) gets id r*cols + c.  The cells are the perimeters of the
    three 2x2-square windows, so each is an octagon sharing edges with
    its neighbors.
    """
    def nid(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols - 1):
            edges.append((nid(r, c), nid(r, c + 1)))
    for r in range(rows - 1):
        for c in range(cols):
            edges.append((nid(r, c), nid(r + 1, c)))
    skeleton = Skeleton(rows * cols, sorted(edges))

    cells = []
    for c0 in range(cols - 2):
        walk = []
        for c in range(c0, c0 + 2):
            walk.append(nid(0, c))
        for r in range(0, 2):
            walk.append(nid(r, c0 + 2))
        for c in range(c0 + 2, c0, -1):
            walk.append(nid(2, c))
        for r in range(2, 0, -1):
            walk.append(nid(r, c0))
        cells.append(canonicalize(skeleton, tuple(walk)))
    return skeleton, tuple(cells)


def cycle_walk_circulation(skeleton: Skeleton, nodes, flows: np.ndarray) -> np.ndarray:
    """Sum the signed flows around a node cycle, one edge at a time."""
    total = np.zeros(flows.shape[1], dtype=np.float64)
    closed = list(nodes) + [nodes[0]]
    for a, b in zip(closed, closed[1:]):
        e, s = skeleton.edge_id(a, b)
        total += s * flows[e]
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)
