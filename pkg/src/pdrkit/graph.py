"""Global circuit graph: one monolithic directed graph per AIG.

Nodes are the constant, inputs, latches, and AND gates (in that order, so the
node count is 1 + I + L + A).  Edges run fanin -> fanout and carry the AIG
literal's negation as a boolean ``inverted`` flag; negation is an edge
attribute, not an extra node.  Each latch has exactly one in-edge, from the
root of its next-state cone, so the combinational subgraph (AND in-edges only)
stays acyclic while sequential feedback flows through latch edges.

Initial node features (width 9, fixed):
    one-hot kind (constant, input, latch, and_gate)  -- 4
    in-degree                                        -- 1
    out-degree                                       -- 1
    logic level (longest combinational path; inputs, latches, constant = 0)
    undirected BFS distance to the property node, normalized by the largest
    finite distance (unreachable nodes and graphs without a property get 1.0)
    inverted-fanin count                             -- 1
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .aiger import Aig

KIND_CONST = "constant"
KIND_INPUT = "input"
KIND_LATCH = "latch"
KIND_AND = "and_gate"
KINDS = (KIND_CONST, KIND_INPUT, KIND_LATCH, KIND_AND)

FEATURE_WIDTH = 9


@dataclass(frozen=True, eq=False)
class CircuitGraph:
    kinds: tuple[str, ...]
    node_vars: tuple[int, ...]
    edges: tuple[tuple[int, int, bool], ...]  # (src, dst, inverted)
    latch_index: dict[int, int]               # latch node -> embedding row
    property_node: int | None
    var_to_node: dict[int, int]

    @property
    def n_nodes(self) -> int:
        return len(self.kinds)


def build_graph(aig: Aig) -> CircuitGraph:
    kinds: list[str] = [KIND_CONST]
    node_vars: list[int] = [0]
    var_to_node: dict[int, int] = {0: 0}

    def add(kind: str, var: int) -> int:
        idx = len(kinds)
        kinds.append(kind)
        node_vars.append(var)
        var_to_node[var] = idx
        return idx

    for lit in aig.inputs:
        add(KIND_INPUT, lit >> 1)
    for latch in aig.latches:
        add(KIND_LATCH, latch.lit >> 1)
    ands = sorted(aig.ands)
    for lhs, _, _ in ands:
        add(KIND_AND, lhs >> 1)

    edges: list[tuple[int, int, bool]] = []
    for lhs, rhs0, rhs1 in ands:
        dst = var_to_node[lhs >> 1]
        edges.append((var_to_node[rhs0 >> 1], dst, bool(rhs0 & 1)))
        edges.append((var_to_node[rhs1 >> 1], dst, bool(rhs1 & 1)))
    for latch in aig.latches:
        edges.append(
            (var_to_node[latch.next >> 1], var_to_node[latch.lit >> 1], bool(latch.next & 1))
        )

    latch_index = {var_to_node[l.lit >> 1]: i for i, l in enumerate(aig.latches)}
    bads = aig.outputs_or_bads
    property_node = var_to_node[bads[0] >> 1] if bads else None
    return CircuitGraph(
        kinds=tuple(kinds),
        node_vars=tuple(node_vars),
        edges=tuple(edges),
        latch_index=latch_index,
        property_node=property_node,
        var_to_node=var_to_node,
    )


def initial_node_features(g: CircuitGraph) -> np.ndarray:
    n = g.n_nodes
    feats = np.zeros((n, FEATURE_WIDTH), dtype=np.float32)
    kind_col = {k: i for i, k in enumerate(KINDS)}
    for i, kind in enumerate(g.kinds):
        feats[i, kind_col[kind]] = 1.0

    indeg = np.zeros(n, dtype=np.int64)
    outdeg = np.zeros(n, dtype=np.int64)
    inv_fanin = np.zeros(n, dtype=np.int64)
    for src, dst, inverted in g.edges:
        indeg[dst] += 1
        outdeg[src] += 1
        if inverted:
            inv_fanin[dst] += 1
    feats[:, 4] = indeg
    feats[:, 5] = outdeg

    level = np.zeros(n, dtype=np.int64)
    for src, dst, _ in g.edges:
        if g.kinds[dst] == KIND_AND:
            # AND nodes appear in ascending variable order, which is
            # topological, and edges are listed in the same order
            level[dst] = max(level[dst], level[src] + 1)
    feats[:, 6] = level

    dist = np.full(n, -1, dtype=np.int64)
    if g.property_node is not None:
        adj: list[list[int]] = [[] for _ in range(n)]
        for src, dst, _ in g.edges:
            adj[src].append(dst)
            adj[dst].append(src)
        dist[g.property_node] = 0
        q = deque([g.property_node])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    q.append(v)
    finite = dist[dist >= 0]
    dmax = int(finite.max()) if finite.size else 0
    norm = np.where(dist >= 0, dist / max(1, dmax), 1.0)
    feats[:, 7] = norm

    feats[:, 8] = inv_fanin
    return feats
