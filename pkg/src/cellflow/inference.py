"""Greedy cell inference.

``infer`` removes the gradient component of the observed flows once,
then repeatedly asks a candidate search for promising cycles, scores
each candidate by the loss the complex would reach with it attached,
and keeps the best one.  The loop stops on a cell budget, a loss
target, a boundary-sparsity budget, an exhausted candidate pool, or a
residual that is already numerically zero.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .cells import CellComplex, Skeleton, TwoCell, build_b1, build_b2
from .heuristics import (
    CellCandidate,
    cs_max,
    cs_similarity,
    cs_triangles,
    cs_true_cells,
)
from .hodge import (
    SolverConfig,
    SolverError,
    loss_delta,
    project_gradient_out,
    project_harmonic,
    validate_flows,
)

HEURISTIC_NAMES = ("max", "similarity", "triangles", "true_cells")

# Residuals below this fraction of the input norm count as fully explained.
_CONVERGED_REL = 1e-12


@dataclass(frozen=True)
class InferenceConfig:
    """Knobs for one greedy run.

    ``m`` is how many candidates each search round returns and ``k`` the
    cluster count used by the similarity search.  At least one of
    ``max_cells`` (total cells allowed in the complex), ``epsilon``
    (stop once the loss drops below it), or ``b2_nnz_budget`` (stop once
    the boundary matrix has that many nonzeros) must be set; whichever
    triggers first wins.
    """

    heuristic: str = "similarity"
    m: int = 5
    k: int = 4
    max_cells: int | None = None
    epsilon: float | None = None
    b2_nnz_budget: int | None = None
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.heuristic not in HEURISTIC_NAMES:
            raise ValueError(
                f"unknown heuristic {self.heuristic!r}; expected one of {HEURISTIC_NAMES}"
            )
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.max_cells is None and self.epsilon is None and self.b2_nnz_budget is None:
            raise ValueError(
                "no stopping rule: set max_cells, epsilon, or b2_nnz_budget"
            )
        if self.max_cells is not None and self.max_cells < 0:
            raise ValueError("max_cells must be non-negative")
        if self.epsilon is not None and not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        if self.b2_nnz_budget is not None and self.b2_nnz_budget < 0:
            raise ValueError("b2_nnz_budget must be non-negative")


@dataclass(frozen=True)
class IterationRecord:
    """Telemetry for one accepted cell."""

    iteration: int
    cell: TwoCell
    loss: float
    cells_count: int
    b2_nnz: int
    wall_time_ms: float


@dataclass(frozen=True)
class InferenceResult:
    complex: CellComplex
    initial_loss: float
    history: tuple[IterationRecord, ...]
    stop_reason: str

    @property
    def final_loss(self) -> float:
        return self.history[-1].loss if self.history else self.initial_loss


def _thread_budget() -> int:
    raw = os.environ.get("CELLFLOW_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def _score_candidates(
    b2, residual: np.ndarray, candidates: Sequence[CellCandidate], config: SolverConfig
) -> list[float]:
    """Prospective losses for each candidate, in candidate order.

    Candidates are independent given the current residual, so they fan
    out across a small thread pool (LSMR spends its time in BLAS, which
    releases the GIL).  ``CELLFLOW_THREADS`` caps the pool.
    """
    workers = min(len(candidates), _thread_budget())
    if workers <= 1:
        return [loss_delta(b2, residual, c.cell, config) for c in candidates]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(loss_delta, b2, residual, c.cell, config) for c in candidates
        ]
        return [fut.result() for fut in futures]


def _search(
    current: CellComplex,
    residual: np.ndarray,
    config: InferenceConfig,
    truth: Sequence[TwoCell] | None,
    iteration: int,
) -> list[CellCandidate]:
    if config.heuristic == "max":
        return cs_max(current, residual, m=config.m)
    if config.heuristic == "similarity":
        rng = np.random.default_rng([config.seed, iteration])
        return cs_similarity(current, residual, m=config.m, k=config.k, rng=rng)
    if config.heuristic == "triangles":
        return cs_triangles(current, residual, m=config.m)
    assert truth is not None
    return cs_true_cells(current, truth, m=config.m)


def infer(
    skeleton: Skeleton | CellComplex,
    flows: np.ndarray,
    config: InferenceConfig | None = None,
    truth: Sequence[TwoCell] | None = None,
) -> InferenceResult:
    """Grow a cell complex that explains the observed flows.

    ``skeleton`` may already carry cells; they stay in the complex and
    count against ``max_cells``.  ``truth`` is only consulted by the
    ``true_cells`` heuristic.  Solver breakdowns surface as
    :class:`SolverError` tagged with the iteration that failed.
    """
    if config is None:
        config = InferenceConfig(max_cells=5)
    if config.heuristic == "true_cells" and truth is None:
        raise ValueError("true_cells heuristic needs the ground-truth cells")
    if isinstance(skeleton, CellComplex):
        current = skeleton
    else:
        current = CellComplex(skeleton, ())
    sk = current.skeleton
    f = validate_flows(flows, sk.edge_count)
    f_norm = float(np.linalg.norm(f))

    try:
        f0 = project_gradient_out(build_b1(sk), f, config.solver)
    except SolverError as err:
        raise SolverError(f"gradient projection failed before iteration 0: {err}") from err

    history: list[IterationRecord] = []
    b2 = build_b2(current)
    try:
        residual = project_harmonic(b2, f0, config.solver)
    except SolverError as err:
        raise SolverError(f"solver failed at iteration 0: {err}") from err
    cur_loss = float(np.linalg.norm(residual))
    initial_loss = cur_loss

    while True:
        if config.max_cells is not None and current.cell_count >= config.max_cells:
            stop = "max_cells"
            break
        if config.epsilon is not None and cur_loss < config.epsilon:
            stop = "epsilon"
            break
        if config.b2_nnz_budget is not None and b2.nnz >= config.b2_nnz_budget:
            stop = "b2_nnz_budget"
            break
        if cur_loss <= _CONVERGED_REL * f_norm:
            stop = "converged"
            break

        iteration = len(history)
        started = time.perf_counter()
        candidates = _search(current, residual, config, truth, iteration)
        if not candidates:
            stop = "no_candidates"
            break
        try:
            deltas = _score_candidates(b2, residual, candidates, config.solver)
            best = int(np.argmin(deltas))
            current = current.with_cell(candidates[best].cell)
            b2 = build_b2(current)
            residual = project_harmonic(b2, f0, config.solver)
        except SolverError as err:
            raise SolverError(f"solver failed at iteration {iteration}: {err}") from err
        cur_loss = float(np.linalg.norm(residual))
        history.append(
            IterationRecord(
                iteration=iteration,
                cell=candidates[best].cell,
                loss=cur_loss,
                cells_count=current.cell_count,
                b2_nnz=int(b2.nnz),
                wall_time_ms=(time.perf_counter() - started) * 1000.0,
            )
        )

    return InferenceResult(
        complex=current,
        initial_loss=initial_loss,
        history=tuple(history),
        stop_reason=stop,
    )


def recovery_accuracy(
    result: InferenceResult | CellComplex, ground_truth: Sequence[TwoCell]
) -> float:
    """Fraction of ground-truth cells present in the inferred complex.

    Canonical keys absorb rotation and direction, so any representation
    of the same cycle counts as a hit.
    """
    complex = result.complex if isinstance(result, InferenceResult) else result
    if not ground_truth:
        raise ValueError("ground truth is empty")
    truth_keys = {cell.canonical_key for cell in ground_truth}
    hits = sum(1 for key in truth_keys if complex.contains_cell(key))
    return hits / len(truth_keys)


def sparsity_curve(
    skeleton: Skeleton | CellComplex,
    flows: np.ndarray,
    config: InferenceConfig,
    budget_grid: Sequence[int],
    truth: Sequence[TwoCell] | None = None,
) -> list[tuple[int, int, float]]:
    """Loss as a function of the cell budget, from a single greedy run.

    ``budget_grid`` must be ascending.  One run with the largest budget
    supplies every row: for each budget the row reports the cell count
    actually reached (the run may stop early), the boundary-matrix
    nonzeros, and the loss at that point.
    """
    grid = [int(b) for b in budget_grid]
    if not grid:
        raise ValueError("budget_grid is empty")
    if any(b < 0 for b in grid):
        raise ValueError("budgets must be non-negative")
    if any(b2 < b1 for b1, b2 in zip(grid, grid[1:])):
        raise ValueError("budget_grid must be ascending")

    run_config = replace(config, max_cells=grid[-1])
    result = infer(skeleton, flows, run_config, truth=truth)

    start_cells = (
        skeleton.cell_count if isinstance(skeleton, CellComplex) else 0
    )
    start_nnz = int(build_b2(skeleton).nnz) if isinstance(skeleton, CellComplex) else 0
    states = [(start_cells, start_nnz, result.initial_loss)]
    states += [(rec.cells_count, rec.b2_nnz, rec.loss) for rec in result.history]

    rows: list[tuple[int, int, float]] = []
    for budget in grid:
        reachable = [srow for srow in states if srow[0] <= budget]
        rows.append(reachable[-1] if reachable else states[0])
    return rows
