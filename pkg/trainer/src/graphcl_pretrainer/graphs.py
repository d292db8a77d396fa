"""Reader for circuit graph export files.

The model checker exports each preprocessed circuit as a plain-text graph
file.  The layout is line-oriented:

    graph v1 nodes=<N> edges=<E>
    property <node>
    node <i> <kind> <var>          (one per node, i = 0..N-1)
    feat <i> <f0> ... <f8>         (one per node, 9 floats)
    edge <src> <dst> <inv>         (one per edge, inv in {0, 1})
    latch <node> <row>             (one per latch, in row order)

This module parses that format into numpy arrays; it is the only place the
trainer touches the interchange layout, and it deliberately has no other
dependencies on the checker's code.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

FEATURE_WIDTH = 9


class GraphFormatError(ValueError):
    """Raised when a graph file does not match the interchange layout."""


@dataclass(frozen=True)
class CircuitGraph:
    """One parsed circuit graph.

    ``feats`` is float32 of shape (n_nodes, 9).  ``edge_src``/``edge_dst``/
    ``edge_inv`` are int64/int64/bool of shape (n_edges,).  ``latch_nodes``
    lists the node index of each latch, ordered by its row in the embedding
    table the checker builds, so row ``r`` of any embedding of this graph
    describes node ``latch_nodes[r]``.
    """

    name: str
    feats: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_inv: np.ndarray
    latch_nodes: np.ndarray
    kinds: tuple[str, ...]
    property_node: int | None

    @property
    def n_nodes(self) -> int:
        return self.feats.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_src.shape[0]

    @property
    def n_latches(self) -> int:
        return self.latch_nodes.shape[0]


def _fail(path: str, lineno: int, msg: str) -> GraphFormatError:
    return GraphFormatError(f"{path}:{lineno}: {msg}")


def parse_graph(text: str, name: str = "<string>") -> CircuitGraph:
    """Parse one graph file's content."""
    lines = text.splitlines()
    if not lines:
        raise _fail(name, 1, "empty file")
    head = lines[0].split()
    if (
        len(head) != 4
        or head[0] != "graph"
        or head[1] != "v1"
        or not head[2].startswith("nodes=")
        or not head[3].startswith("edges=")
    ):
        raise _fail(name, 1, f"bad header {lines[0]!r}")
    try:
        n_nodes = int(head[2][len("nodes="):])
        n_edges = int(head[3][len("edges="):])
    except ValueError:
        raise _fail(name, 1, f"bad header counts {lines[0]!r}") from None
    if n_nodes < 0 or n_edges < 0:
        raise _fail(name, 1, "negative counts")

    kinds: list[str | None] = [None] * n_nodes
    feats = np.full((n_nodes, FEATURE_WIDTH), np.nan, dtype=np.float32)
    edge_src = np.empty(n_edges, dtype=np.int64)
    edge_dst = np.empty(n_edges, dtype=np.int64)
    edge_inv = np.empty(n_edges, dtype=bool)
    latch_rows: list[tuple[int, int]] = []
    property_node: int | None = None
    seen_edges = 0

    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "property":
            if len(parts) != 2:
                raise _fail(name, lineno, f"bad property line {raw!r}")
            property_node = int(parts[1])
        elif tag == "node":
            if len(parts) != 4:
                raise _fail(name, lineno, f"bad node line {raw!r}")
            i = int(parts[1])
            if not 0 <= i < n_nodes:
                raise _fail(name, lineno, f"node index {i} out of range")
            if kinds[i] is not None:
                raise _fail(name, lineno, f"duplicate node {i}")
            kinds[i] = parts[2]
        elif tag == "feat":
            if len(parts) != 2 + FEATURE_WIDTH:
                raise _fail(
                    name, lineno,
                    f"feat line has {len(parts) - 2} values, want {FEATURE_WIDTH}")
            i = int(parts[1])
            if not 0 <= i < n_nodes:
                raise _fail(name, lineno, f"feat index {i} out of range")
            try:
                feats[i] = [float(x) for x in parts[2:]]
            except ValueError:
                raise _fail(name, lineno, f"bad feat value in {raw!r}") from None
        elif tag == "edge":
            if len(parts) != 4:
                raise _fail(name, lineno, f"bad edge line {raw!r}")
            if seen_edges >= n_edges:
                raise _fail(name, lineno, f"more than {n_edges} edges")
            s, d, inv = int(parts[1]), int(parts[2]), int(parts[3])
            if not (0 <= s < n_nodes and 0 <= d < n_nodes):
                raise _fail(name, lineno, f"edge endpoint out of range in {raw!r}")
            if inv not in (0, 1):
                raise _fail(name, lineno, f"edge inversion flag must be 0/1 in {raw!r}")
            edge_src[seen_edges] = s
            edge_dst[seen_edges] = d
            edge_inv[seen_edges] = bool(inv)
            seen_edges += 1
        elif tag == "latch":
            if len(parts) != 3:
                raise _fail(name, lineno, f"bad latch line {raw!r}")
            node, row = int(parts[1]), int(parts[2])
            if not 0 <= node < n_nodes:
                raise _fail(name, lineno, f"latch node {node} out of range")
            latch_rows.append((row, node))
        else:
            raise _fail(name, lineno, f"unknown line tag {tag!r}")

    if seen_edges != n_edges:
        raise _fail(name, len(lines), f"saw {seen_edges} edges, header says {n_edges}")
    missing = [i for i, k in enumerate(kinds) if k is None]
    if missing:
        raise _fail(name, len(lines), f"missing node lines for {missing[:5]}")
    if np.isnan(feats).any():
        bad = sorted(set(np.argwhere(np.isnan(feats))[:, 0].tolist()))
        raise _fail(name, len(lines), f"missing feat lines for nodes {bad[:5]}")

    latch_rows.sort()
    rows = [r for r, _ in latch_rows]
    if rows != list(range(len(rows))):
        raise _fail(name, len(lines), f"latch rows are not 0..{len(rows) - 1}: {rows[:8]}")
    latch_nodes = np.array([n for _, n in latch_rows], dtype=np.int64)

    return CircuitGraph(
        name=name,
        feats=feats,
        edge_src=edge_src,
        edge_dst=edge_dst,
        edge_inv=edge_inv,
        latch_nodes=latch_nodes,
        kinds=tuple(k for k in kinds if k is not None),
        property_node=property_node,
    )


def load_graph(path: str | Path) -> CircuitGraph:
    p = Path(path)
    return parse_graph(p.read_text(), name=str(p))


def load_corpus(paths: Sequence[str | Path]) -> list[CircuitGraph]:
    """Load several graph files.

    A directory contributes every ``graph.txt`` beneath it (the layout the
    checker's preprocessing step writes, one artifact directory per circuit);
    a directory with no ``graph.txt`` contributes its top-level ``*.txt``
    files instead.
    """
    graphs: list[CircuitGraph] = []
    for entry in paths:
        p = Path(entry)
        if p.is_dir():
            files = sorted(p.rglob("graph.txt")) or sorted(p.glob("*.txt"))
            if not files:
                raise GraphFormatError(f"{p}: no graph files found")
            graphs.extend(load_graph(f) for f in files)
        else:
            graphs.append(load_graph(p))
    return graphs
