"""Candidate-cycle search heuristics.

All searches share one contract: given the current complex and the
gradient-free flow residual, return a short ranked list of simple cycles
worth testing as new 2-cells.  The greedy driver in
:mod:`cellflow.inference` then scores each candidate by the loss it
would actually achieve.

The two tree-based searches rank edges, grow a spanning forest greedily,
and read one fundamental cycle per non-tree edge out of node potentials:

* ``cs_max`` ranks edges by total absolute flow, so the tree soaks up
  the strongest signal and the leftover cycles close over it.
* ``cs_similarity`` clusters edge-flow profiles (both orientations of
  every edge) with k-means and grows one tree per cluster center,
  ranking edges by profile distance to that center.

``cs_triangles`` scores every triangle by its circulation and serves as
the baseline; ``cs_true_cells`` replays ground-truth cells and puts an
oracle floor under benchmark curves.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cells import CellComplex, Skeleton, TwoCell, canonicalize
from .hodge import validate_flows


@dataclass(frozen=True)
class CellCandidate:
    """A candidate cycle with its search score.

    ``score`` is the 1-norm of the cycle circulation across samples
    divided by the cycle length; the greedy driver re-scores candidates
    by actual loss, so it is informational.  ``origin_edge`` is the
    non-tree edge that closed the cycle, or ``-1`` when the candidate
    did not come from a spanning tree.
    """

    cell: TwoCell
    score: float
    origin_edge: int = -1


@dataclass(frozen=True)
class SpanningTreeData:
    """A rooted spanning forest with per-node flow potentials.

    ``parent[root] = root``; ``potentials`` has one row per flow sample
    and one column per node, holding the cumulative signed flow along
    the tree path from the component root.  For a non-tree edge
    ``(u, v)``, ``potentials[:, u] - potentials[:, v] + flow`` is the
    circulation around the fundamental cycle that edge closes.
    ``non_tree_edges`` always has ``edge_count - node_count +
    component_count`` entries, the cycle-space dimension.
    """

    skeleton: Skeleton
    parent: np.ndarray
    parent_edge: np.ndarray
    depth: np.ndarray
    potentials: np.ndarray
    non_tree_edges: tuple[int, ...]
    roots: tuple[int, ...]


class _UnionFind:
    __slots__ = ("parent", "rank")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def find_spanning_tree(
    skeleton: Skeleton, edge_order: Iterable[int]
) -> tuple[list[int], list[int]]:
    """Greedy spanning forest over a pre-ranked edge ordering.

    Walks ``edge_order`` once, keeping every edge that joins two distinct
    components, so a descending-weight ordering yields a maximum-weight
    spanning forest.  Returns ``(tree_edges, cycle_edges)`` in processing
    order; each rejected edge closes exactly one tree cycle.
    """
    uf = _UnionFind(skeleton.node_count)
    arr = skeleton.edge_array()
    tree: list[int] = []
    rejected: list[int] = []
    for e in edge_order:
        e = int(e)
        if uf.union(int(arr[e, 0]), int(arr[e, 1])):
            tree.append(e)
        else:
            rejected.append(e)
    return tree, rejected


def build_tree(
    skeleton: Skeleton, tree_edges: Sequence[int], flows: np.ndarray
) -> SpanningTreeData:
    """Root each component at its smallest node and integrate potentials.

    BFS from the root; a child's potential is the parent's plus the edge
    flow taken in the parent-to-child direction.
    """
    f = validate_flows(flows, skeleton.edge_count)
    n = skeleton.node_count
    in_tree = set(int(e) for e in tree_edges)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e in in_tree:
        u, v = skeleton.edges[e]
        adj[u].append((v, e))
        adj[v].append((u, e))
    for nbrs in adj:
        nbrs.sort()

    parent = np.arange(n, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    pot = np.zeros((f.shape[1], n), dtype=np.float64)
    seen = np.zeros(n, dtype=bool)
    roots = []
    for r in range(n):
        if seen[r]:
            continue
        roots.append(r)
        seen[r] = True
        queue = deque([r])
        while queue:
            u = queue.popleft()
            for v, e in adj[u]:
                if seen[v]:
                    continue
                seen[v] = True
                parent[v] = u
                parent_edge[v] = e
                depth[v] = depth[u] + 1
                sign = 1.0 if skeleton.edges[e] == (u, v) else -1.0
                pot[:, v] = pot[:, u] + sign * f[e]
                queue.append(v)
    non_tree = tuple(e for e in range(skeleton.edge_count) if e not in in_tree)
    return SpanningTreeData(
        skeleton=skeleton,
        parent=parent,
        parent_edge=parent_edge,
        depth=depth,
        potentials=pot,
        non_tree_edges=non_tree,
        roots=tuple(roots),
    )


def _offline_lca(
    parent: np.ndarray, roots: Sequence[int], queries: Sequence[tuple[int, int]]
) -> np.ndarray:
    """Batched lowest common ancestors: one DFS pass plus union-find."""
    n = len(parent)
    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        p = int(parent[v])
        if p != v:
            children[p].append(v)
    qmap: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for qi, (a, b) in enumerate(queries):
        qmap[a].append((b, qi))
        qmap[b].append((a, qi))

    uf = _UnionFind(n)
    anc = list(range(n))
    done = [False] * n
    out = np.full(len(queries), -1, dtype=np.int64)
    for r in roots:
        stack: list[list[int]] = [[r, 0]]
        while stack:
            top = stack[-1]
            u, ci = top[0], top[1]
            if ci < len(children[u]):
                top[1] += 1
                stack.append([children[u][ci], 0])
                continue
            stack.pop()
            done[u] = True
            for w, qi in qmap[u]:
                if done[w]:
                    out[qi] = anc[uf.find(w)]
            if stack:
                p = stack[-1][0]
                uf.union(p, u)
                anc[uf.find(p)] = p
    return out


def extract_cycle(tree: SpanningTreeData, u: int, v: int) -> TwoCell:
    """The fundamental cycle closed by the non-tree edge (u, v).

    The walk runs from ``u`` up to the lowest common ancestor and back
    down to ``v``; the closing edge is ``(v, u)`` itself.  Returned in
    canonical form, so repeated extraction is representation-stable.
    """
    parent, depth = tree.parent, tree.depth
    path_u = [u]
    path_v = [v]
    a, b = u, v
    while depth[a] > depth[b]:
        a = int(parent[a])
        path_u.append(a)
    while depth[b] > depth[a]:
        b = int(parent[b])
        path_v.append(b)
    while a != b:
        a = int(parent[a])
        b = int(parent[b])
        path_u.append(a)
        path_v.append(b)
    return canonicalize(tree.skeleton, tuple(path_u + path_v[-2::-1]))


def evaluate_tree(
    tree: SpanningTreeData,
    flows: np.ndarray,
    cycle_edges: Sequence[int] | None = None,
    m: int | None = None,
    exclude: frozenset = frozenset(),
) -> list[CellCandidate]:
    """Rank fundamental cycles of the forest by circulation density.

    For each non-tree edge the circulation around its cycle comes
    straight from the potentials, and the cycle length from depths plus
    one offline LCA pass, so nothing longer than the returned cycles is
    ever walked.  Score is the 1-norm of the circulation across samples
    divided by cycle length; ties break toward shorter cycles, then
    lower edge id.

    Returns the ``m`` best (all, when ``m`` is None), skipping canonical
    keys in ``exclude``.  ``cycle_edges`` defaults to every non-tree
    edge of the forest.
    """
    sk = tree.skeleton
    f = validate_flows(flows, sk.edge_count)
    nt = np.asarray(
        tree.non_tree_edges if cycle_edges is None else sorted(int(e) for e in cycle_edges),
        dtype=np.int64,
    )
    if nt.size == 0:
        return []
    arr = sk.edge_array()
    u_arr = arr[nt, 0]
    v_arr = arr[nt, 1]
    lca = _offline_lca(tree.parent, tree.roots, list(zip(u_arr.tolist(), v_arr.tolist())))
    lengths = tree.depth[u_arr] + tree.depth[v_arr] - 2 * tree.depth[lca] + 1
    circ = tree.potentials[:, u_arr] - tree.potentials[:, v_arr] + f[nt].T
    scores = np.abs(circ).sum(axis=0) / lengths
    order = np.lexsort((nt, lengths, -scores))

    out: list[CellCandidate] = []
    for idx in order:
        cell = extract_cycle(tree, int(u_arr[idx]), int(v_arr[idx]))
        if cell.canonical_key in exclude:
            continue
        out.append(
            CellCandidate(cell=cell, score=float(scores[idx]), origin_edge=int(nt[idx]))
        )
        if m is not None and len(out) >= m:
            break
    return out


def _kmeans(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ followed by Lloyd iterations.

    Deterministic for a given generator state: assignment ties go to the
    lowest center index, empty clusters keep their previous center, and
    iteration stops when assignments repeat (100 rounds at most).
    """
    n = len(points)
    k = min(k, n)
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[int(rng.integers(n))]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[j] = points[idx]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))

    assign = None
    for _ in range(100):
        d = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d, axis=1)
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign
        for j in range(k):
            sel = points[assign == j]
            if len(sel):
                centers[j] = sel.mean(axis=0)
    return centers


def cs_max(complex: CellComplex, flows: np.ndarray, m: int = 5) -> list[CellCandidate]:
    """Candidates from the maximum total-flow spanning tree."""
    sk = complex.skeleton
    f = validate_flows(flows, sk.edge_count)
    w = np.abs(f).sum(axis=1)
    order = np.lexsort((np.arange(sk.edge_count), -w))
    tree_edges, _ = find_spanning_tree(sk, order)
    tree = build_tree(sk, tree_edges, f)
    return evaluate_tree(tree, f, m=m, exclude=complex.cell_keys())


def cs_similarity(
    complex: CellComplex,
    flows: np.ndarray,
    m: int = 5,
    k: int = 4,
    rng: np.random.Generator | None = None,
) -> list[CellCandidate]:
    """Candidates pooled from one spanning tree per flow-profile cluster.

    Every edge contributes both orientations of its flow profile to the
    clustering, so a center represents a circulation pattern regardless
    of reference orientations; an edge's distance to a center is taken
    over whichever orientation copy is nearer.  Each center ranks edges
    by that distance (closest first) and grows its own tree; per-tree
    candidate lists merge by score with duplicates dropped.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    sk = complex.skeleton
    f = validate_flows(flows, sk.edge_count)
    centers = _kmeans(np.vstack([f, -f]), k, rng)
    edge_ids = np.arange(sk.edge_count)
    pooled: list[tuple[float, int, int, int, CellCandidate]] = []
    for t in range(len(centers)):
        c = centers[t]
        dist = np.minimum(np.linalg.norm(f - c, axis=1), np.linalg.norm(f + c, axis=1))
        order = np.lexsort((edge_ids, dist))
        tree_edges, _ = find_spanning_tree(sk, order)
        tree = build_tree(sk, tree_edges, f)
        for cand in evaluate_tree(tree, f, m=m, exclude=complex.cell_keys()):
            pooled.append(
                (-cand.score, len(cand.cell), cand.origin_edge, t, cand)
            )
    pooled.sort(key=lambda item: item[:4])
    out: list[CellCandidate] = []
    seen = set()
    for _, _, _, _, cand in pooled:
        key = cand.cell.canonical_key
        if key in seen:
            continue
        seen.add(key)
        out.append(cand)
        if len(out) >= m:
            break
    return out


def cs_triangles(
    complex: CellComplex, flows: np.ndarray, m: int = 5
) -> list[CellCandidate]:
    """All triangles of the skeleton, ranked by mean absolute circulation."""
    sk = complex.skeleton
    f = validate_flows(flows, sk.edge_count)
    nbrs = [set() for _ in range(sk.node_count)]
    for u, v in sk.edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    scored: list[tuple[float, tuple[int, ...], CellCandidate]] = []
    for u, v in sk.edges:
        a, b = (u, v) if u < v else (v, u)
        for w in sorted(nbrs[a] & nbrs[b]):
            if w <= b:
                continue
            cell = canonicalize(sk, (a, b, w))
            if complex.contains_cell(cell.canonical_key):
                continue
            circ = np.zeros(f.shape[1])
            for e, s in cell.boundary:
                circ += s * f[e]
            score = float(np.abs(circ).sum() / 3.0)
            scored.append((score, cell.canonical_key, CellCandidate(cell=cell, score=score)))
    scored.sort(key=lambda item: (-item[0], item[1]))
    picked = scored if m is None else scored[:m]
    return [cand for _, _, cand in picked]


def cs_true_cells(
    complex: CellComplex, truth: Sequence[TwoCell], m: int | None = None
) -> list[CellCandidate]:
    """Ground-truth cells not yet in the complex, in their given order.

    An oracle baseline for synthetic runs; candidates carry no heuristic
    score.
    """
    out = []
    for cell in truth:
        if complex.contains_cell(cell.canonical_key):
            continue
        out.append(CellCandidate(cell=cell, score=0.0))
        if m is not None and len(out) >= m:
            break
    return out
