"""Synthetic instances: triangulation and small-world graphs with planted cells.

The triangulation pipeline draws uniform points, takes their Delaunay
triangulation as the skeleton, plants ground-truth polygonal cells as
simple cycles, and prunes away part of the unprotected structure so the
graph is no longer a clean triangulation.  Flows are cell circulations
pushed through the boundary matrix plus white edge noise.

Seeding is split so structure and flows can be varied independently:
the graph is a function of ``[seed, 0]`` and the flow draw of
``[seed, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from .cells import CellComplex, Skeleton, TwoCell, build_b2, canonicalize


class GenerationError(RuntimeError):
    """Raised when a requested structure cannot be built within budget."""


@dataclass(frozen=True)
class SynthConfig:
    node_count: int = 60
    cell_count: int = 5
    cell_length_range: tuple[int, int] = (6, 6)
    sample_count: int = 20
    sigma_c: float = 1.0
    sigma_n: float = 0.0
    prune_prob: float = 0.3
    chord_prob: float = 0.01
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.cell_length_range
        if lo < 3:
            raise ValueError("cell lengths below 3 cannot bound a cell")
        if hi < lo:
            raise ValueError("cell_length_range must be (min, max) with min <= max")
        if self.node_count < 3:
            raise ValueError("node_count must be at least 3")
        if self.cell_count < 0:
            raise ValueError("cell_count must be non-negative")
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        if self.sigma_c < 0 or self.sigma_n < 0:
            raise ValueError("standard deviations must be non-negative")
        if not 0.0 <= self.prune_prob < 1.0:
            raise ValueError("prune_prob must lie in [0, 1)")
        if not 0.0 <= self.chord_prob <= 1.0:
            raise ValueError("chord_prob must lie in [0, 1]")


def _delaunay_skeleton(points: np.ndarray) -> Skeleton:
    tri = Delaunay(points)
    edges = set()
    for simplex in tri.simplices:
        a, b, c = (int(v) for v in simplex)
        edges.add((min(a, b), max(a, b)))
        edges.add((min(a, c), max(a, c)))
        edges.add((min(b, c), max(b, c)))
    return Skeleton(len(points), sorted(edges))


def plant_cells(
    skeleton: Skeleton,
    cell_count: int,
    length_range: tuple[int, int],
    rng: np.random.Generator,
) -> tuple[TwoCell, ...]:
    """Find ``cell_count`` distinct simple cycles with lengths in range.

    Each attempt draws a target length and runs a randomized
    depth-first walk from a random start node, backtracking until the
    walk closes at exactly that length.  Attempts are budgeted at
    100 per requested cell and 4000 expansions per attempt; running out
    raises :class:`GenerationError`.
    """
    if cell_count == 0:
        return ()
    lo, hi = length_range
    adjacency = skeleton.adjacency()
    cells: list[TwoCell] = []
    keys = set()
    attempts = 100 * cell_count
    for _ in range(attempts):
        target = int(rng.integers(lo, hi + 1))
        start = int(rng.integers(skeleton.node_count))
        budget = 4000
        path = [start]
        on_path = {start}
        found: tuple[int, ...] | None = None

        def walk() -> bool:
            nonlocal budget, found
            if budget <= 0:
                return False
            budget -= 1
            u = path[-1]
            if len(path) == target:
                if start in adjacency[u]:
                    found = tuple(path)
                    return True
                return False
            for v in rng.permutation(adjacency[u]).tolist():
                if v in on_path:
                    continue
                path.append(v)
                on_path.add(v)
                if walk():
                    return True
                path.pop()
                on_path.remove(v)
            return False

        if not walk():
            continue
        cell = canonicalize(skeleton, found)
        if cell.canonical_key in keys:
            continue
        keys.add(cell.canonical_key)
        cells.append(cell)
        if len(cells) == cell_count:
            return tuple(cells)
    raise GenerationError(
        f"planted only {len(cells)} of {cell_count} cells with lengths in "
        f"[{lo}, {hi}] after {attempts} attempts; the graph may lack such cycles"
    )


def _prune(
    skeleton: Skeleton,
    cells: tuple[TwoCell, ...],
    positions: np.ndarray,
    prob: float,
    rng: np.random.Generator,
) -> tuple[Skeleton, tuple[TwoCell, ...], np.ndarray]:
    """Thin out structure the planted cells do not touch.

    Unprotected nodes, then unprotected edges, are each dropped with the
    given probability; isolated nodes disappear and everything is
    re-indexed (positions and cell node ids remapped).
    """
    protected_nodes = set()
    protected_edges = set()
    for cell in cells:
        protected_nodes.update(cell.nodes)
        for e, _ in cell.boundary:
            protected_edges.add(skeleton.edges[e])

    dead_nodes = set()
    for v in range(skeleton.node_count):
        if v not in protected_nodes and float(rng.random()) < prob:
            dead_nodes.add(v)
    kept_edges = []
    for u, v in skeleton.edges:
        if u in dead_nodes or v in dead_nodes:
            continue
        if (u, v) not in protected_edges and float(rng.random()) < prob:
            continue
        kept_edges.append((u, v))

    alive = sorted({u for e in kept_edges for u in e} | protected_nodes)
    remap = {old: new for new, old in enumerate(alive)}
    new_skeleton = Skeleton(
        len(alive), sorted((remap[u], remap[v]) for u, v in kept_edges)
    )
    new_cells = tuple(
        canonicalize(new_skeleton, tuple(remap[v] for v in cell.nodes))
        for cell in cells
    )
    return new_skeleton, new_cells, positions[alive]


def generate_triangulation_complex(
    config: SynthConfig,
) -> tuple[CellComplex, np.ndarray]:
    """A pruned Delaunay triangulation carrying planted ground-truth cells.

    Returns the complex (its cells are the ground truth) and the 2-D
    node positions, row per node.
    """
    rng = np.random.default_rng([config.seed, 0])
    points = rng.random((config.node_count, 2))
    skeleton = _delaunay_skeleton(points)
    cells = plant_cells(skeleton, config.cell_count, config.cell_length_range, rng)
    skeleton, cells, points = _prune(skeleton, cells, points, config.prune_prob, rng)
    return CellComplex(skeleton, cells), points


def generate_smallworld(
    node_count: int, extra_edge_prob: float, seed: int | np.random.Generator = 0
) -> Skeleton:
    """Ring lattice plus independent random chords.

    Probability 0 gives the plain cycle, probability 1 the complete
    graph.  The ring edges are always present.
    """
    if node_count < 3:
        raise ValueError("node_count must be at least 3")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise ValueError("extra_edge_prob must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng([seed, 0])
    edges = [(v, (v + 1) % node_count) for v in range(node_count)]
    edges = [(min(u, v), max(u, v)) for u, v in edges]
    ring = set(edges)
    iu, iv = np.triu_indices(node_count, k=1)
    draw = rng.random(len(iu)) < extra_edge_prob
    for u, v, hit in zip(iu.tolist(), iv.tolist(), draw.tolist()):
        if hit and (u, v) not in ring:
            edges.append((u, v))
    return Skeleton(node_count, sorted(edges))


def generate_smallworld_complex(
    config: SynthConfig,
) -> tuple[CellComplex, np.ndarray]:
    """Small-world skeleton with planted cells and circular layout."""
    rng = np.random.default_rng([config.seed, 0])
    skeleton = generate_smallworld(config.node_count, config.chord_prob, rng)
    cells = plant_cells(skeleton, config.cell_count, config.cell_length_range, rng)
    angles = 2.0 * np.pi * np.arange(config.node_count) / config.node_count
    positions = np.column_stack([np.cos(angles), np.sin(angles)])
    return CellComplex(skeleton, cells), positions


def sample_flows(complex: CellComplex, config: SynthConfig) -> np.ndarray:
    """Edge flows: ground-truth cell circulations plus white edge noise.

    Per sample, a circulation strength is drawn for each planted cell
    (std ``sigma_c``) and pushed onto the edges through the boundary
    matrix, then i.i.d. noise (std ``sigma_n``) lands on every edge.
    Shape is (edges, samples).
    """
    rng = np.random.default_rng([config.seed, 1])
    b2 = build_b2(complex).toarray().astype(np.float64)
    strengths = config.sigma_c * rng.standard_normal(
        (complex.cell_count, config.sample_count)
    )
    noise = config.sigma_n * rng.standard_normal(
        (complex.skeleton.edge_count, config.sample_count)
    )
    return b2 @ strengths + noise
