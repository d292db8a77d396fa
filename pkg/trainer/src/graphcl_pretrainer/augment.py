"""Stochastic graph augmentation for contrastive training.

Each call produces two independently perturbed views of one circuit graph:
every edge is dropped with probability ``p_e`` and every feature dimension
(a whole column of the node-feature matrix) is zeroed with probability
``p_f``.  Node identity is never touched, so latch rows line up across the
two views and a latch paired with itself in the other view is a positive
pair.  Sampling is a pure function of ``(seed, view index)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import CircuitGraph


@dataclass(frozen=True)
class GraphView:
    """One perturbed copy of a circuit graph (same node set as the source)."""

    feats: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_inv: np.ndarray


@dataclass(frozen=True)
class ViewPair:
    source: CircuitGraph
    first: GraphView
    second: GraphView

    @property
    def latch_nodes(self) -> np.ndarray:
        return self.source.latch_nodes


def _check_prob(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be within [0, 1], got {p}")


def _one_view(g: CircuitGraph, p_e: float, p_f: float, seed: int, index: int) -> GraphView:
    rng = np.random.default_rng([seed & 0xFFFFFFFF, index])
    keep = rng.random(g.n_edges) >= p_e
    drop_dim = rng.random(g.feats.shape[1]) < p_f
    feats = g.feats.copy()
    feats[:, drop_dim] = 0.0
    return GraphView(
        feats=feats,
        edge_src=g.edge_src[keep],
        edge_dst=g.edge_dst[keep],
        edge_inv=g.edge_inv[keep],
    )


def make_views(g: CircuitGraph, cfg, seed: int) -> ViewPair:
    """Build the two training views of ``g`` for one epoch step.

    ``cfg`` only needs ``p_e`` and ``p_f`` attributes (a ``ContrastConfig``
    in practice).  Probabilities may span the full [0, 1] here — a config
    used for actual training is validated more tightly by the trainer.
    """
    p_e, p_f = float(cfg.p_e), float(cfg.p_f)
    _check_prob("p_e", p_e)
    _check_prob("p_f", p_f)
    return ViewPair(
        source=g,
        first=_one_view(g, p_e, p_f, seed, 0),
        second=_one_view(g, p_e, p_f, seed, 1),
    )
