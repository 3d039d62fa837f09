"""Flow projections and the harmonic-residual loss.

Edge flows live in R^E, one column per observed sample.  The gradient
part is the projection onto ``Im(b1.T)`` and the curl part the projection
onto ``Im(b2)``; both are computed per flow column with a sparse
least-squares solver, so cost stays near-linear in matrix nonzeros.

Callers remove the gradient once at ingestion.  Everything downstream
(``project_harmonic``, ``loss``, ``loss_delta``) assumes gradient-free
input and performs a single projection against the cell space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsmr

from .cells import CellComplex, build_b2, cell_column


class SolverError(RuntimeError):
    """Least-squares solver failed to converge."""


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances handed to the sparse least-squares solver.

    ``atol``/``btol`` follow lsmr's stopping rules; the iteration cap is
    ``maxiter_factor * (rows + cols)`` plus a small floor.  Defaults are
    fine for well-conditioned complexes; drop the tolerances to 1e-12
    when results must match a dense pseudoinverse to high accuracy.
    """

    atol: float = 1e-8
    btol: float = 1e-8
    maxiter_factor: int = 10

    def __post_init__(self):
        if self.atol <= 0 or self.btol <= 0 or self.maxiter_factor < 1:
            raise ValueError("tolerances must be positive and maxiter_factor >= 1")

    def maxiter(self, shape: tuple[int, int]) -> int:
        return self.maxiter_factor * (shape[0] + shape[1]) + 100


def validate_flows(flows: np.ndarray, edge_count: int) -> np.ndarray:
    """Check a flow matrix and return it as a float64 ``(E, s)`` array.

    Accepts ``(E,)`` or ``(E, s)``; a single vector comes back as one
    column.  Rejects a wrong leading dimension and non-finite entries.
    """
    arr = np.asarray(flows, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != edge_count:
        raise ValueError(
            f"flow matrix shape {np.shape(flows)} does not match {edge_count} edges"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("flow matrix contains non-finite values")
    return arr


def _project_columns(op: sp.spmatrix, flows: np.ndarray, config: SolverConfig) -> np.ndarray:
    """Projection of each flow column onto ``Im(op)`` via least squares."""
    out = np.zeros_like(flows)
    if op.shape[1] == 0:
        return out
    maxiter = config.maxiter(op.shape)
    for j in range(flows.shape[1]):
        b = flows[:, j]
        if not b.any():
            continue
        sol = lsmr(op, b, atol=config.atol, btol=config.btol, conlim=1e16, maxiter=maxiter)
        if sol[1] == 7:
            raise SolverError(
                f"least-squares projection did not converge in {maxiter} iterations"
            )
        out[:, j] = op @ sol[0]
    return out


def project_gradient_out(
    b1: sp.spmatrix, flows: np.ndarray, config: SolverConfig | None = None
) -> np.ndarray:
    """Remove the gradient component: flows minus their part in ``Im(b1.T)``."""
    config = config or SolverConfig()
    f = validate_flows(flows, b1.shape[1])
    op = b1.T.tocsc().astype(np.float64)
    return f - _project_columns(op, f, config)


def project_harmonic(
    b2: sp.spmatrix, flows: np.ndarray, config: SolverConfig | None = None
) -> np.ndarray:
    """Residual of gradient-free flows after projecting out ``Im(b2)``.

    The input must already be gradient-free; for such flows the single
    projection equals the full harmonic projection, because ``Im(b2)``
    sits inside ``ker(b1)``.
    """
    config = config or SolverConfig()
    f = validate_flows(flows, b2.shape[0])
    if b2.shape[1] == 0:
        return f
    op = b2.tocsc().astype(np.float64)
    return f - _project_columns(op, f, config)


def loss(
    complex: CellComplex, flows: np.ndarray, config: SolverConfig | None = None
) -> float:
    """Frobenius norm of the harmonic residual of gradient-free flows."""
    f = validate_flows(flows, complex.skeleton.edge_count)
    return float(np.linalg.norm(project_harmonic(build_b2(complex), f, config)))


def loss_delta(
    b2: sp.spmatrix,
    residual: np.ndarray,
    candidate,
    config: SolverConfig | None = None,
) -> float:
    """Loss the complex would reach with ``candidate`` appended to ``b2``.

    ``residual`` must be the harmonic residual under the current ``b2``.
    A cell column lies in ``ker(b1)`` and the current curl component is
    already absorbed, so projecting the residual out of the augmented
    ``[b2, column]`` gives the same value as a full recomputation from
    the raw flows, at a fraction of the cost.
    """
    config = config or SolverConfig()
    col = cell_column(candidate, b2.shape[0]).astype(np.float64)
    op = sp.hstack([b2.astype(np.float64), col], format="csc")
    rem = residual - _project_columns(op, residual, config)
    return float(np.linalg.norm(rem))
