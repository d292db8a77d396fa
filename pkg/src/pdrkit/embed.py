"""Per-latch embeddings: one graph pass per circuit, reused for every clause.

The encoder is a GIN-style message passer over the circuit graph.  Per layer:

    agg[v] = (1 + eps) * h[v]
           + sum over forward edges (u -> v):  sign(e) * h[u]
           + sum over reversed edges (v -> u): sign(e) * h[u]

where sign(e) is -1 when the edge is inverted and +1 otherwise (the inversion
flag acts as a parameter-free edge feature), followed by a two-layer MLP with
a rectifier between the dense pair:

    h' = relu(agg @ W1.T + b1) @ W2.T + b2

All arithmetic is 32-bit float.  Edge contributions are accumulated with
``np.add.at`` over the edge list sorted by (dst, src, inverted), making the
summation order — and therefore the result — bitwise reproducible.

The structural fallback needs no trained weights: each latch gets its own
feature row concatenated with the mean feature row of its depth-<=3 fanin
cone (the latch itself included), projected to width d by a seeded random
matrix.

Augmentation appends the latch's flip rate as one extra column: row widths go
d -> d+1.

``graph_passes`` counts whole-graph traversals; exactly the two embedding
entry points bump it.  Scoring clauses afterwards reads table rows only, so
the counter lets tests pin the one-pass contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import formats
from .flipsim import FlipRateVector
from .graph import FEATURE_WIDTH, CircuitGraph, initial_node_features
from .rng import XorShift64

DEFAULT_DIM = 32
DEFAULT_LAYERS = 3

PROVENANCE_PRETRAINED = "pretrained"
PROVENANCE_FALLBACK = "fallback"


class _PassCounter:
    def __init__(self) -> None:
        self.count = 0

    def bump(self) -> None:
        self.count += 1

    def reset(self) -> None:
        self.count = 0


graph_passes = _PassCounter()


@dataclass(frozen=True)
class EncoderWeights:
    eps: tuple[float, ...]
    layers: tuple[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray], ...]

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def input_width(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def dim(self) -> int:
        return self.layers[-1][2].shape[0]

    def validate(self) -> None:
        if len(self.eps) != len(self.layers) or not self.layers:
            raise ValueError("encoder needs one eps per layer and at least one layer")
        width = self.input_width
        for i, (w1, b1, w2, b2) in enumerate(self.layers):
            hidden = w1.shape[0]
            if w1.shape != (hidden, width):
                raise ValueError(f"layer {i}: dense1 weight shape {w1.shape}")
            if b1.shape != (hidden,):
                raise ValueError(f"layer {i}: dense1 bias shape {b1.shape}")
            if w2.shape[1] != hidden or b2.shape != (w2.shape[0],):
                raise ValueError(f"layer {i}: dense2 shapes {w2.shape} {b2.shape}")
            width = w2.shape[0]
            for t in (w1, b1, w2, b2):
                if not np.isfinite(t).all():
                    raise ValueError(f"layer {i}: non-finite weights")


@dataclass(frozen=True)
class EmbeddingTable:
    latch_vars: tuple[int, ...]
    raw: np.ndarray                 # (L, d) float32
    augmented: np.ndarray | None    # (L, d+1) float32 once augmented
    provenance: str

    @property
    def dim(self) -> int:
        return self.raw.shape[1]

    def row_index(self, latch_var: int) -> int:
        return self.latch_vars.index(latch_var)


def _uniform_matrix(rng: XorShift64, rows: int, cols: int) -> np.ndarray:
    scale = 1.0 / math.sqrt(cols)
    out = np.empty((rows, cols), dtype=np.float32)
    for r in range(rows):
        for c in range(cols):
            out[r, c] = (2.0 * rng.next_float() - 1.0) * scale
    return out


def init_encoder_weights(
    input_width: int = FEATURE_WIDTH,
    dim: int = DEFAULT_DIM,
    n_layers: int = DEFAULT_LAYERS,
    seed: int = 0,
) -> EncoderWeights:
    """Seeded random encoder (uniform +-1/sqrt(fan_in), eps = 0 per layer)."""
    rng = XorShift64(seed)
    layers = []
    width = input_width
    for _ in range(n_layers):
        w1 = _uniform_matrix(rng, dim, width)
        b1 = np.zeros(dim, dtype=np.float32)
        w2 = _uniform_matrix(rng, dim, dim)
        b2 = np.zeros(dim, dtype=np.float32)
        layers.append((w1, b1, w2, b2))
        width = dim
    w = EncoderWeights(eps=tuple(0.0 for _ in range(n_layers)), layers=tuple(layers))
    w.validate()
    return w


def _sorted_edge_arrays(g: CircuitGraph):
    edges = sorted(g.edges, key=lambda e: (e[1], e[0], e[2]))
    srcs = np.array([e[0] for e in edges], dtype=np.int64)
    dsts = np.array([e[1] for e in edges], dtype=np.int64)
    signs = np.array([-1.0 if e[2] else 1.0 for e in edges], dtype=np.float32)
    return srcs, dsts, signs


def _latch_rows(g: CircuitGraph) -> tuple[tuple[int, ...], list[int]]:
    nodes_by_row = [0] * len(g.latch_index)
    for node, row in g.latch_index.items():
        nodes_by_row[row] = node
    latch_vars = tuple(g.node_vars[n] for n in nodes_by_row)
    return latch_vars, nodes_by_row


def gin_forward(
    g: CircuitGraph, feats: np.ndarray, w: EncoderWeights
) -> EmbeddingTable:
    w.validate()
    if feats.shape != (g.n_nodes, w.input_width):
        raise ValueError(
            f"feature matrix {feats.shape} does not match "
            f"(nodes={g.n_nodes}, input_width={w.input_width})"
        )
    srcs, dsts, signs = _sorted_edge_arrays(g)
    h = feats.astype(np.float32, copy=True)
    for eps, (w1, b1, w2, b2) in zip(w.eps, w.layers):
        agg = (np.float32(1.0 + eps)) * h
        if len(srcs):
            np.add.at(agg, dsts, signs[:, None] * h[srcs])
            np.add.at(agg, srcs, signs[:, None] * h[dsts])
        z = np.maximum(agg @ w1.T + b1, np.float32(0.0))
        h = z @ w2.T + b2
    latch_vars, nodes_by_row = _latch_rows(g)
    graph_passes.bump()
    return EmbeddingTable(
        latch_vars=latch_vars,
        raw=h[nodes_by_row].astype(np.float32),
        augmented=None,
        provenance=PROVENANCE_PRETRAINED,
    )


def structural_fallback_embed(
    g: CircuitGraph, seed: int = 0, dim: int = DEFAULT_DIM
) -> EmbeddingTable:
    """Trained-model-free embedding: local structural summary + random projection."""
    feats = initial_node_features(g)
    fanin: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for src, dst, _ in g.edges:
        fanin[dst].append(src)
    latch_vars, nodes_by_row = _latch_rows(g)
    summaries = np.zeros((len(nodes_by_row), 2 * FEATURE_WIDTH), dtype=np.float32)
    for row, node in enumerate(nodes_by_row):
        cone = {node}
        frontier = [node]
        for _ in range(3):
            frontier = [u for v in frontier for u in fanin[v] if u not in cone]
            cone.update(frontier)
        cone_rows = feats[sorted(cone)]
        summaries[row, :FEATURE_WIDTH] = feats[node]
        summaries[row, FEATURE_WIDTH:] = cone_rows.mean(axis=0)
    proj = _uniform_matrix(XorShift64(seed), dim, 2 * FEATURE_WIDTH)
    graph_passes.bump()
    return EmbeddingTable(
        latch_vars=latch_vars,
        raw=(summaries @ proj.T).astype(np.float32),
        augmented=None,
        provenance=PROVENANCE_FALLBACK,
    )


def augment_with_flip_rate(table: EmbeddingTable, rates: FlipRateVector) -> EmbeddingTable:
    if rates.latch_vars != table.latch_vars:
        raise ValueError(
            "flip-rate vector and embedding table cover different latches"
        )
    col = np.array(rates.rates, dtype=np.float32)[:, None]
    return replace(table, augmented=np.hstack([table.raw, col]).astype(np.float32))


# ------------------------------------------------------------- serialization


def _encoder_tensor_list(w: EncoderWeights) -> list[tuple[str, np.ndarray]]:
    tensors = [("eps", np.array(w.eps, dtype=np.float32))]
    for i, (w1, b1, w2, b2) in enumerate(w.layers):
        tensors.append((f"layer{i}.dense1.w", w1))
        tensors.append((f"layer{i}.dense1.b", b1))
        tensors.append((f"layer{i}.dense2.w", w2))
        tensors.append((f"layer{i}.dense2.b", b2))
    return tensors


def export_encoder_weights(w: EncoderWeights, binary: bool = True) -> bytes:
    w.validate()
    return formats.write_weights("gin", _encoder_tensor_list(w), binary=binary)


def load_encoder_weights(data: bytes) -> EncoderWeights:
    kind, tensors, _meta = formats.read_weights(data)
    if kind != "gin":
        raise formats.FormatError(f"expected encoder weights, found kind {kind!r}")
    if not tensors or tensors[0][0] != "eps":
        raise formats.FormatError("encoder weights must start with the 'eps' tensor")
    eps = tuple(float(x) for x in tensors[0][1])
    n_layers = len(eps)
    expected = ["eps"]
    for i in range(n_layers):
        expected += [
            f"layer{i}.dense1.w",
            f"layer{i}.dense1.b",
            f"layer{i}.dense2.w",
            f"layer{i}.dense2.b",
        ]
    names = [n for n, _ in tensors]
    if names != expected:
        missing = [n for n in expected if n not in names]
        if missing:
            raise formats.FormatError(f"missing tensor {missing[0]!r}")
        raise formats.FormatError(f"unexpected tensor order {names}")
    by_name = dict(tensors)
    layers = tuple(
        (
            by_name[f"layer{i}.dense1.w"],
            by_name[f"layer{i}.dense1.b"],
            by_name[f"layer{i}.dense2.w"],
            by_name[f"layer{i}.dense2.b"],
        )
        for i in range(n_layers)
    )
    w = EncoderWeights(eps=eps, layers=layers)
    w.validate()
    return w


def export_embedding_table(t: EmbeddingTable, binary: bool = True) -> bytes:
    if any(v >= (1 << 24) for v in t.latch_vars):
        raise formats.FormatError("latch variable id too large for table format")
    tensors = [
        ("latch_vars", np.array(t.latch_vars, dtype=np.float32)),
        ("raw", t.raw),
    ]
    if t.augmented is not None:
        tensors.append(("augmented", t.augmented))
    return formats.write_weights(
        "table", tensors, meta={"provenance": t.provenance}, binary=binary
    )


def load_embedding_table(data: bytes) -> EmbeddingTable:
    kind, tensors, meta = formats.read_weights(data)
    if kind != "table":
        raise formats.FormatError(f"expected an embedding table, found kind {kind!r}")
    by_name = dict(tensors)
    for required in ("latch_vars", "raw"):
        if required not in by_name:
            raise formats.FormatError(f"missing tensor {required!r}")
    latch_vars = tuple(int(round(float(x))) for x in by_name["latch_vars"])
    raw = by_name["raw"]
    if raw.ndim != 2 or raw.shape[0] != len(latch_vars):
        raise formats.FormatError("raw table shape does not match latch count")
    augmented = by_name.get("augmented")
    if augmented is not None:
        if augmented.shape != (raw.shape[0], raw.shape[1] + 1):
            raise formats.FormatError("augmented table must be raw width + 1")
    provenance = meta.get("provenance", PROVENANCE_PRETRAINED)
    if provenance not in (PROVENANCE_PRETRAINED, PROVENANCE_FALLBACK):
        raise formats.FormatError(f"unknown provenance {provenance!r}")
    return EmbeddingTable(
        latch_vars=latch_vars, raw=raw, augmented=augmented, provenance=provenance
    )
