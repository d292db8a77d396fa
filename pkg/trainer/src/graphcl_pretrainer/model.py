"""Torch implementation of the circuit-graph encoder.

The architecture mirrors the checker's numpy embedder exactly so that weights
trained here drop straight into it: per layer, every node aggregates
``(1 + eps) * h[self]`` plus a signed sum over incident edges — each edge
contributes in both directions, with sign -1 when the edge is inverted — and
the aggregate goes through a two-layer MLP (ReLU after the first dense, none
after the second).  Latch embeddings are the final hidden rows of the latch
nodes.
"""

from __future__ import annotations

import torch
from torch import nn

from .graphs import CircuitGraph, FEATURE_WIDTH

DEFAULT_DIM = 32
DEFAULT_LAYERS = 3


class GinEncoder(nn.Module):
    """Signed-sum GIN over inverter-graph circuits."""

    def __init__(
        self,
        input_width: int = FEATURE_WIDTH,
        dim: int = DEFAULT_DIM,
        n_layers: int = DEFAULT_LAYERS,
    ) -> None:
        super().__init__()
        if n_layers < 1:
            raise ValueError(f"need at least one layer, got {n_layers}")
        if dim < 1 or input_width < 1:
            raise ValueError(f"bad sizes dim={dim} input_width={input_width}")
        self.input_width = input_width
        self.dim = dim
        self.n_layers = n_layers
        self.eps = nn.Parameter(torch.zeros(n_layers))
        self.dense1 = nn.ModuleList()
        self.dense2 = nn.ModuleList()
        width = input_width
        for _ in range(n_layers):
            self.dense1.append(nn.Linear(width, dim))
            self.dense2.append(nn.Linear(dim, dim))
            width = dim

    def forward(
        self,
        feats: torch.Tensor,
        edge_src: torch.Tensor,
        edge_dst: torch.Tensor,
        edge_sign: torch.Tensor,
    ) -> torch.Tensor:
        """Return final node embeddings of shape (n_nodes, dim).

        ``feats`` is (n_nodes, input_width) float32; the edge tensors are
        1-d with ``edge_sign`` holding +1.0 / -1.0 per edge.
        """
        h = feats
        sign = edge_sign.unsqueeze(1)
        for i in range(self.n_layers):
            agg = (1.0 + self.eps[i]) * h
            if edge_src.numel():
                agg = agg.index_add(0, edge_dst, sign * h[edge_src])
                agg = agg.index_add(0, edge_src, sign * h[edge_dst])
            z = torch.relu(self.dense1[i](agg))
            h = self.dense2[i](z)
        return h

    def embed_graph(self, g: CircuitGraph) -> torch.Tensor:
        """Embed one parsed graph; returns latch rows of shape (n_latches, dim)."""
        feats, src, dst, sign = graph_tensors(g)
        out = self.forward(feats, src, dst, sign)
        return out[torch.from_numpy(g.latch_nodes)]


def graph_tensors(
    g: CircuitGraph,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Convert a parsed graph into the tensors ``GinEncoder.forward`` takes."""
    feats = torch.from_numpy(g.feats.copy())
    src = torch.from_numpy(g.edge_src.copy())
    dst = torch.from_numpy(g.edge_dst.copy())
    sign = torch.where(
        torch.from_numpy(g.edge_inv.copy()),
        torch.tensor(-1.0),
        torch.tensor(1.0),
    )
    return feats, src, dst, sign
