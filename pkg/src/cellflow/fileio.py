"""CSV and JSON formats shared by the command-line tools.

All writers emit LF newlines and shortest round-trip float formatting, so
identical inputs produce byte-identical files on every platform.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .cells import CellError, Skeleton, TwoCell, canonicalize


class ParseError(ValueError):
    """Malformed input file."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_text(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_edge_list(path, skeleton: Skeleton) -> None:
    lines = ["u,v"]
    lines.extend(f"{u},{v}" for u, v in skeleton.edges)
    _write_text(path, "\n".join(lines) + "\n")


def read_edge_list(path) -> Skeleton:
    """Edge list with a ``u,v`` header; node count is the largest id + 1."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "u,v":
        raise ParseError(f"{path}: expected header 'u,v'")
    edges = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"{path}:{ln}: expected two columns")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"{path}:{ln}: {exc}") from None
        if not u < v:
            raise ParseError(f"{path}:{ln}: edge ({u}, {v}) must have tail < head")
        edges.append((u, v))
    if not edges:
        raise ParseError(f"{path}: no edges")
    node_count = 1 + max(max(u, v) for u, v in edges)
    try:
        return Skeleton(node_count, edges)
    except CellError as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_flows(path, flows: np.ndarray) -> None:
    flows = np.asarray(flows, dtype=np.float64)
    if flows.ndim == 1:
        flows = flows[:, None]
    header = "e," + ",".join(f"f{j + 1}" for j in range(flows.shape[1]))
    lines = [header]
    for e in range(flows.shape[0]):
        lines.append(f"{e}," + ",".join(_fmt(x) for x in flows[e]))
    _write_text(path, "\n".join(lines) + "\n")


def read_flows(path) -> np.ndarray:
    """Flow matrix with header ``e,f1,...``; rows must be 0..E-1 in order."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("e,"):
        raise ParseError(f"{path}: expected header 'e,f1,...'")
    width = len(lines[0].split(",")) - 1
    if width < 1:
        raise ParseError(f"{path}: no flow columns")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != width + 1:
            raise ParseError(f"{path}:{ln}: expected {width + 1} columns")
        try:
            e = int(parts[0])
            vals = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}:{ln}: {exc}") from None
        if e != len(rows):
            raise ParseError(f"{path}:{ln}: edge ids must run 0..E-1 in order")
        rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no flow rows")
    arr = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{path}: flow values must be finite")
    return arr


def write_cells(path, cells: Sequence[TwoCell]) -> None:
    lines = [",".join(str(n) for n in cell.nodes) for cell in cells]
    _write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_cells(path, skeleton: Skeleton) -> tuple[TwoCell, ...]:
    """One cell per line as a comma-separated node cycle; no header."""
    cells = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            nodes = tuple(int(p) for p in line.split(","))
        except ValueError as exc:
            raise ParseError(f"{path}:{ln}: {exc}") from None
        try:
            cells.append(canonicalize(skeleton, nodes))
        except CellError as exc:
            raise ParseError(f"{path}:{ln}: {exc}") from None
    return tuple(cells)


def write_positions(path, positions: np.ndarray) -> None:
    lines = ["node,x,y"]
    for i, (x, y) in enumerate(np.asarray(positions, dtype=np.float64)):
        lines.append(f"{i},{_fmt(x)},{_fmt(y)}")
    _write_text(path, "\n".join(lines) + "\n")


def read_positions(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "node,x,y":
        raise ParseError(f"{path}: expected header 'node,x,y'")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}:{ln}: expected three columns")
        try:
            node = int(parts[0])
            xy = (float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ParseError(f"{path}:{ln}: {exc}") from None
        if node != len(rows):
            raise ParseError(f"{path}:{ln}: node ids must run 0..N-1 in order")
        rows.append(xy)
    return np.asarray(rows, dtype=np.float64)


def write_metrics(
    path,
    initial_loss: float,
    records,
    recovery=None,
    initial_cells: int = 0,
    initial_b2_nnz: int = 0,
) -> None:
    """Per-round metrics table; row ``iteration=0`` is the starting state.

    Records follow as iterations 1..n, so ``iteration`` counts cells
    accepted so far.  ``recovery`` is an optional sequence aligned with
    ``records`` (plus one leading value for the start) appended as a
    last column.
    """
    with_rec = recovery is not None
    header = "iteration,cell,loss,cells_count,b2_nnz,wall_time_ms"
    if with_rec:
        header += ",recovery"
    lines = [header]
    first = f"0,,{_fmt(initial_loss)},{initial_cells},{initial_b2_nnz},{_fmt(0.0)}"
    if with_rec:
        first += f",{_fmt(recovery[0])}"
    lines.append(first)
    for i, rec in enumerate(records):
        cell = "-".join(str(n) for n in rec.cell.nodes)
        row = (
            f"{rec.iteration + 1},{cell},{_fmt(rec.loss)},{rec.cells_count},"
            f"{rec.b2_nnz},{_fmt(rec.wall_time_ms)}"
        )
        if with_rec:
            row += f",{_fmt(recovery[i + 1])}"
        lines.append(row)
    _write_text(path, "\n".join(lines) + "\n")


def write_manifest(path, command: str, params: dict) -> None:
    """Record what produced a directory, for exact re-runs later.

    Only scientific parameters go in; output locations stay out so a
    manifest can be replayed anywhere.
    """
    doc = {"command": command, "params": params}
    _write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> tuple[str, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or "command" not in doc or "params" not in doc:
        raise ParseError(f"{path}: manifest needs 'command' and 'params'")
    return str(doc["command"]), dict(doc["params"])


def write_json(path, payload: dict) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
