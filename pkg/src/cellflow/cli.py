"""Command-line front end.

``generate`` writes a synthetic instance to a directory, ``infer`` fits
cells to observed flows, ``decompose`` splits flows into gradient, curl,
and harmonic parts, and ``benchmark`` times inference across instance
sizes.  Every command drops a ``manifest.json`` recording its scientific
parameters; ``rerun`` replays a manifest into a fresh directory and is
expected to reproduce the original outputs byte for byte, apart from
measured wall times.

Exit codes: 0 success, 2 unusable input, 3 solver failure, 4 generation
failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .cells import CellComplex, CellError, build_b1, build_b2
from .fileio import (
    ParseError,
    read_cells,
    read_edge_list,
    read_flows,
    read_manifest,
    read_positions,
    write_cells,
    write_edge_list,
    write_flows,
    write_json,
    write_manifest,
    write_metrics,
    write_positions,
)
from .hodge import (
    SolverError,
    project_gradient_out,
    project_harmonic,
    validate_flows,
)
from .inference import (
    InferenceConfig,
    infer,
    recovery_accuracy,
)
from .synth import (
    GenerationError,
    SynthConfig,
    generate_smallworld_complex,
    generate_triangulation_complex,
    sample_flows,
)

GRAPH_KINDS = ("triangulation", "smallworld")
HEURISTIC_CHOICES = ("max", "similarity", "triangles", "true-cells", "true_cells")


def _circle_positions(n: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(n) / max(n, 1)
    return np.column_stack([np.cos(angles), np.sin(angles)])


def _render_svg(path, skeleton, positions, cells) -> None:
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    from matplotlib.collections import LineCollection

    plt.rcParams["svg.hashsalt"] = "cellflow"
    pos = np.asarray(positions, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    segments = [(pos[u], pos[v]) for u, v in skeleton.edges]
    ax.add_collection(LineCollection(segments, colors="0.8", linewidths=0.8, zorder=1))
    palette = plt.get_cmap("tab10").colors
    for i, cell in enumerate(cells):
        ring = pos[list(cell.nodes) + [cell.nodes[0]]]
        ax.plot(ring[:, 0], ring[:, 1], color=palette[i % len(palette)], linewidth=2.0, zorder=2)
    ax.scatter(pos[:, 0], pos[:, 1], s=6, c="black", zorder=3)
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _length_range(values) -> tuple[int, int]:
    vals = [int(v) for v in values]
    if len(vals) == 1:
        return vals[0], vals[0]
    if len(vals) == 2:
        return vals[0], vals[1]
    raise ParseError("--cell-length takes one value or a min and a max")


def _synth_config(params: dict) -> SynthConfig:
    return SynthConfig(
        node_count=int(params["nodes"]),
        cell_count=int(params["cells"]),
        cell_length_range=_length_range(params["cell_length"]),
        sample_count=int(params["samples"]),
        sigma_c=float(params["sigma_c"]),
        sigma_n=float(params["sigma_n"]),
        prune_prob=float(params["prune"]),
        chord_prob=float(params["chord_prob"]),
        seed=int(params["seed"]),
    )


def _generate_instance(params: dict):
    cfg = _synth_config(params)
    if params["graph"] == "smallworld":
        complex, positions = generate_smallworld_complex(cfg)
    else:
        complex, positions = generate_triangulation_complex(cfg)
    return cfg, complex, positions


def _run_generate(params: dict, out_dir: Path) -> None:
    cfg, complex, positions = _generate_instance(params)
    flows = sample_flows(complex, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_edge_list(out_dir / "edges.csv", complex.skeleton)
    write_flows(out_dir / "flows.csv", flows)
    write_cells(out_dir / "truth_cells.csv", complex.cells)
    write_positions(out_dir / "positions.csv", positions)
    write_manifest(out_dir / "manifest.json", "generate", params)
    if params.get("svg"):
        _render_svg(out_dir / "complex.svg", complex.skeleton, positions, complex.cells)
    print(
        f"generated {params['graph']} instance: {complex.skeleton.node_count} nodes, "
        f"{complex.skeleton.edge_count} edges, {complex.cell_count} cells -> {out_dir}"
    )


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def _load_instance(params: dict, base: Path):
    skeleton = read_edge_list(_resolve(base, params["edges"]))
    flows = read_flows(_resolve(base, params["flows"]))
    if flows.shape[0] != skeleton.edge_count:
        raise ParseError(
            f"flow file has {flows.shape[0]} rows but the edge list has "
            f"{skeleton.edge_count} edges"
        )
    return skeleton, flows


def _inference_config(params: dict) -> InferenceConfig:
    heuristic = str(params["heuristic"]).replace("-", "_")
    max_cells = params.get("max_cells")
    epsilon = params.get("epsilon")
    nnz = params.get("b2_nnz_budget")
    if max_cells is None and epsilon is None and nnz is None:
        raise ParseError("set --max-cells, --epsilon, or --b2-nnz-budget")
    return InferenceConfig(
        heuristic=heuristic,
        m=int(params["candidates"]),
        k=int(params["clusters"]),
        max_cells=None if max_cells is None else int(max_cells),
        epsilon=None if epsilon is None else float(epsilon),
        b2_nnz_budget=None if nnz is None else int(nnz),
        seed=int(params["seed"]),
    )


def _run_infer(params: dict, out_dir: Path, base: Path) -> None:
    skeleton, flows = _load_instance(params, base)
    truth = None
    if params.get("truth"):
        truth = read_cells(_resolve(base, params["truth"]), skeleton)
    initial = ()
    if params.get("cells"):
        initial = read_cells(_resolve(base, params["cells"]), skeleton)
    config = _inference_config(params)
    if config.heuristic == "true_cells" and truth is None:
        raise ParseError("--heuristic true-cells needs --truth")
    complex = CellComplex(skeleton, initial)
    t0 = time.perf_counter()
    result = infer(complex, flows, config, truth)
    wall_ms = (time.perf_counter() - t0) * 1e3

    recovery = None
    if truth is not None:
        start = len(initial)
        recovery = [
            recovery_accuracy(CellComplex(skeleton, result.complex.cells[: start + i]), truth)
            for i in range(len(result.history) + 1)
        ]

    out_dir.mkdir(parents=True, exist_ok=True)
    write_cells(out_dir / "cells.csv", result.complex.cells)
    write_metrics(
        out_dir / "metrics.csv",
        result.initial_loss,
        result.history,
        recovery,
        initial_cells=len(initial),
        initial_b2_nnz=sum(len(c) for c in initial),
    )
    summary = {
        "stop_reason": result.stop_reason,
        "initial_loss": result.initial_loss,
        "final_loss": result.final_loss,
        "cells_added": len(result.history),
        "cells_count": result.complex.cell_count,
        "b2_nnz": sum(len(c) for c in result.complex.cells),
        "wall_ms": wall_ms,
    }
    if recovery is not None:
        summary["recovery"] = recovery[-1]
    write_json(out_dir / "infer_summary.json", summary)
    write_manifest(out_dir / "manifest.json", "infer", params)
    if params.get("svg"):
        if params.get("positions"):
            positions = read_positions(_resolve(base, params["positions"]))
        else:
            positions = _circle_positions(skeleton.node_count)
        _render_svg(out_dir / "complex.svg", skeleton, positions, result.complex.cells)
    print(
        f"inferred {result.complex.cell_count} cells "
        f"(stop: {result.stop_reason}, loss {result.final_loss:.6g}) -> {out_dir}"
    )


def _run_decompose(params: dict, out_dir: Path, base: Path) -> None:
    skeleton, flows = _load_instance(params, base)
    cells = ()
    if params.get("cells"):
        cells = read_cells(_resolve(base, params["cells"]), skeleton)
    complex = CellComplex(skeleton, cells)
    f = validate_flows(flows, skeleton.edge_count)
    no_gradient = project_gradient_out(build_b1(skeleton), f)
    harmonic = project_harmonic(build_b2(complex), no_gradient)
    gradient = f - no_gradient
    curl = no_gradient - harmonic

    per_sample = []
    for i in range(f.shape[1]):
        g = float(np.linalg.norm(gradient[:, i]))
        c = float(np.linalg.norm(curl[:, i]))
        h = float(np.linalg.norm(harmonic[:, i]))
        total = float(np.linalg.norm(f[:, i]))
        per_sample.append((i, g, c, h, total, float(np.sqrt(g * g + c * c + h * h))))

    out_dir.mkdir(parents=True, exist_ok=True)
    write_flows(out_dir / "gradient.csv", gradient)
    write_flows(out_dir / "curl.csv", curl)
    write_flows(out_dir / "harmonic.csv", harmonic)
    lines = ["sample,gradient_norm,curl_norm,harmonic_norm,flow_norm,pythagoras"]
    for row in per_sample:
        lines.append(
            ",".join([str(row[0])] + [repr(float(x)) for x in row[1:]])
        )
    with open(out_dir / "decompose.csv", "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    write_json(
        out_dir / "decompose_summary.json",
        {
            "gradient_norm": float(np.linalg.norm(gradient)),
            "curl_norm": float(np.linalg.norm(curl)),
            "harmonic_norm": float(np.linalg.norm(harmonic)),
            "flow_norm": float(np.linalg.norm(f)),
        },
    )
    write_manifest(out_dir / "manifest.json", "decompose", params)
    print(f"decomposed {flows.shape[1]} flow samples over {len(cells)} cells -> {out_dir}")


def _run_benchmark(params: dict, out_dir: Path) -> None:
    rows = []
    for n in params["nodes"]:
        inst = dict(params, nodes=int(n))
        try:
            cfg, complex, _ = _generate_instance(inst)
            truth = complex.cells
            flows = sample_flows(complex, cfg)
            config = _inference_config(
                dict(
                    inst,
                    max_cells=(
                        len(truth)
                        if inst.get("max_cells") is None
                        else int(inst["max_cells"])
                    ),
                    epsilon=inst.get("epsilon"),
                    b2_nnz_budget=inst.get("b2_nnz_budget"),
                )
            )
            bare = CellComplex(complex.skeleton)
            t0 = time.perf_counter()
            result = infer(bare, flows, config, truth)
            wall_ms = (time.perf_counter() - t0) * 1e3
        except (GenerationError, SolverError, CellError, ParseError) as exc:
            if isinstance(exc, GenerationError):
                kind = "generation"
            elif isinstance(exc, SolverError):
                kind = "solver"
            else:
                kind = "input"
            rows.append((params["graph"], int(n), "", "", "", "", "", "", kind + "_failed"))
            print(f"benchmark {params['graph']} n={n}: {kind} failure: {exc}")
            continue
        rows.append(
            (
                params["graph"],
                complex.skeleton.node_count,
                complex.skeleton.edge_count,
                flows.shape[1],
                len(result.history),
                repr(result.final_loss),
                repr(recovery_accuracy(result.complex, truth)),
                repr(wall_ms),
                "ok",
            )
        )
        print(
            f"benchmark {params['graph']} n={complex.skeleton.node_count}: "
            f"{complex.skeleton.edge_count} edges, {wall_ms:.1f} ms"
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["graph,nodes,edges,samples,cells_added,final_loss,recovery,wall_ms,status"]
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    with open(out_dir / "benchmark.csv", "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    write_manifest(out_dir / "manifest.json", "benchmark", params)


PATH_KEYS = ("edges", "flows", "cells", "truth", "positions")


def _params_from_args(args: argparse.Namespace, keys) -> dict:
    # Input paths go into the manifest absolute, so a rerun resolves them
    # no matter where it happens.  "cells" doubles as a count elsewhere,
    # hence the isinstance check.
    params = {k: getattr(args, k) for k in keys}
    for k in PATH_KEYS:
        if isinstance(params.get(k), str) and params[k]:
            params[k] = str(Path(params[k]).resolve())
    return params

GENERATE_KEYS = (
    "graph",
    "nodes",
    "cells",
    "cell_length",
    "samples",
    "sigma_c",
    "sigma_n",
    "prune",
    "chord_prob",
    "seed",
    "svg",
)
INFER_KEYS = (
    "edges",
    "flows",
    "cells",
    "truth",
    "heuristic",
    "candidates",
    "clusters",
    "max_cells",
    "epsilon",
    "b2_nnz_budget",
    "seed",
    "svg",
    "positions",
)
DECOMPOSE_KEYS = ("edges", "flows", "cells")
BENCHMARK_KEYS = (
    "graph",
    "nodes",
    "cells",
    "cell_length",
    "samples",
    "sigma_c",
    "sigma_n",
    "prune",
    "chord_prob",
    "heuristic",
    "candidates",
    "clusters",
    "max_cells",
    "seed",
)


def _add_generate_args(p: argparse.ArgumentParser, many_nodes: bool) -> None:
    p.add_argument("--graph", choices=GRAPH_KINDS, default="triangulation")
    if many_nodes:
        p.add_argument("--nodes", type=int, nargs="+", required=True, help="instance sizes")
    else:
        p.add_argument("--nodes", type=int, default=60, help="node count before pruning")
    p.add_argument("--cells", type=int, default=5, help="planted cell count")
    p.add_argument(
        "--cell-length",
        "--len",
        dest="cell_length",
        type=int,
        nargs="+",
        default=[6],
        help="planted cycle length, or a min and max",
    )
    p.add_argument("--samples", type=int, default=20, help="flow sample count")
    p.add_argument("--sigma-c", type=float, default=1.0, help="cell strength std")
    p.add_argument("--sigma-n", type=float, default=0.0, help="edge noise std")
    p.add_argument("--prune", type=float, default=0.3, help="drop prob for off-cell structure")
    p.add_argument("--chord-prob", type=float, default=0.01, help="smallworld chord prob")
    p.add_argument("--seed", type=int, default=0)


def _add_infer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--heuristic", choices=HEURISTIC_CHOICES, default="similarity")
    p.add_argument("--candidates", type=int, default=5, help="cycles per search round")
    p.add_argument("--clusters", type=int, default=4, help="k-means clusters (similarity)")
    p.add_argument("--max-cells", type=int, default=None, help="stop after this many cells")
    p.add_argument("--epsilon", type=float, default=None, help="stop once loss drops below")
    p.add_argument("--b2-nnz-budget", type=int, default=None, help="boundary nnz cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellflow",
        description="Infer polygonal 2-cells on a graph from observed edge flows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance")
    _add_generate_args(g, many_nodes=False)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--svg", action="store_true", help="draw the complex")
    g.set_defaults(func=lambda a: _run_generate(_params_from_args(a, GENERATE_KEYS), Path(a.out_dir)))

    i = sub.add_parser("infer", help="fit cells to observed flows")
    i.add_argument("--edges", required=True, help="edge list csv")
    i.add_argument("--flows", required=True, help="flow matrix csv")
    i.add_argument("--cells", default=None, help="starting cells csv")
    i.add_argument("--truth", default=None, help="ground-truth cells csv for recovery")
    _add_infer_args(i)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out-dir", required=True)
    i.add_argument("--svg", action="store_true", help="draw the inferred complex")
    i.add_argument("--positions", default=None, help="node coordinates csv for --svg")
    i.set_defaults(func=lambda a: _run_infer(_params_from_args(a, INFER_KEYS), Path(a.out_dir), Path.cwd()))

    d = sub.add_parser("decompose", help="split flows into gradient, curl, harmonic")
    d.add_argument("--edges", required=True)
    d.add_argument("--flows", required=True)
    d.add_argument("--cells", default=None, help="cells defining the curl space")
    d.add_argument("--out-dir", required=True)
    d.set_defaults(func=lambda a: _run_decompose(_params_from_args(a, DECOMPOSE_KEYS), Path(a.out_dir), Path.cwd()))

    b = sub.add_parser("benchmark", help="time inference across instance sizes")
    _add_generate_args(b, many_nodes=True)
    _add_infer_args(b)
    b.add_argument("--out-dir", required=True)
    b.set_defaults(cells=4, samples=5, cell_length=[3, 8])
    b.set_defaults(func=lambda a: _run_benchmark(_params_from_args(a, BENCHMARK_KEYS), Path(a.out_dir)))

    r = sub.add_parser("rerun", help="replay a manifest into a new directory")
    r.add_argument("--manifest", required=True)
    r.add_argument("--out-dir", required=True)
    r.set_defaults(func=_dispatch_rerun)
    return parser


def _dispatch_rerun(args: argparse.Namespace) -> None:
    command, params = read_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    base = Path(args.manifest).resolve().parent
    if command == "generate":
        _run_generate(params, out_dir)
    elif command == "infer":
        _run_infer(params, out_dir, base)
    elif command == "decompose":
        _run_decompose(params, out_dir, base)
    elif command == "benchmark":
        _run_benchmark(params, out_dir)
    else:
        raise ParseError(f"manifest names unknown command {command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ParseError, CellError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except GenerationError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
