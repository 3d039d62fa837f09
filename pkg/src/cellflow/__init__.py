"""Edge-flow driven inference of polygonal 2-cells on graphs.

Given a graph and a matrix of observed edge flows, this package lifts the
graph to a cell complex by greedily selecting 2-cells (simple cycles) so
that the flows are well approximated by gradient and curl components, with
only a small harmonic remainder.
"""

from .cells import (
    CellComplex,
    CellError,
    Skeleton,
    TwoCell,
    build_b1,
    build_b2,
    canonicalize,
)
from .hodge import (
    SolverConfig,
    SolverError,
    loss,
    loss_delta,
    project_gradient_out,
    project_harmonic,
    validate_flows,
)
from .heuristics import (
    CellCandidate,
    SpanningTreeData,
    build_tree,
    cs_max,
    cs_similarity,
    cs_triangles,
    cs_true_cells,
    evaluate_tree,
    extract_cycle,
    find_spanning_tree,
)
from .inference import (
    InferenceConfig,
    InferenceResult,
    IterationRecord,
    infer,
    recovery_accuracy,
    sparsity_curve,
)
from .synth import (
    GenerationError,
    SynthConfig,
    generate_smallworld,
    generate_smallworld_complex,
    generate_triangulation_complex,
    plant_cells,
    sample_flows,
)

__version__ = "0.1.0"

__all__ = [
    "CellCandidate",
    "CellComplex",
    "CellError",
    "GenerationError",
    "InferenceConfig",
    "InferenceResult",
    "IterationRecord",
    "Skeleton",
    "SolverConfig",
    "SolverError",
    "SpanningTreeData",
    "SynthConfig",
    "TwoCell",
    "build_b1",
    "build_b2",
    "build_tree",
    "canonicalize",
    "cs_max",
    "cs_similarity",
    "cs_triangles",
    "cs_true_cells",
    "evaluate_tree",
    "extract_cycle",
    "find_spanning_tree",
    "generate_smallworld",
    "generate_smallworld_complex",
    "generate_triangulation_complex",
    "infer",
    "loss",
    "loss_delta",
    "plant_cells",
    "project_gradient_out",
    "project_harmonic",
    "recovery_accuracy",
    "sample_flows",
    "sparsity_curve",
    "validate_flows",
]
