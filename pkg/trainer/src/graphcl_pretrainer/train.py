"""Contrastive pre-training loop for the circuit-graph encoder.

Each epoch builds two stochastic views of every corpus circuit, embeds both
views, and pulls each latch's two view embeddings together while pushing all
other latches in the batch apart (NT-Xent).  Circuits are grouped greedily
into optimization steps of roughly ``batch`` latch anchors; negatives
therefore span circuits whenever a step holds more than one.  Everything is
seeded, so a repeated run with the same corpus and config produces
bit-identical exported weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .augment import ViewPair, make_views
from .graphs import CircuitGraph
from .loss import nt_xent
from .model import DEFAULT_DIM, DEFAULT_LAYERS, GinEncoder, graph_tensors


@dataclass(frozen=True)
class ContrastConfig:
    tau: float = 0.5
    p_e: float = 0.1
    p_f: float = 0.1
    batch: int = 256
    epochs: int = 100
    seed: int = 0
    lr: float = 1e-2
    dim: int = DEFAULT_DIM
    n_layers: int = DEFAULT_LAYERS

    def validate(self) -> None:
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0.0 <= self.p_e < 1.0:
            raise ValueError(f"p_e must lie in [0, 1) for training, got {self.p_e}")
        if not 0.0 <= self.p_f < 1.0:
            raise ValueError(f"p_f must lie in [0, 1) for training, got {self.p_f}")
        if self.batch < 2:
            raise ValueError(f"batch must hold at least 2 anchors, got {self.batch}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.lr <= 0.0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.dim < 1 or self.n_layers < 1:
            raise ValueError(f"bad model sizes dim={self.dim} n_layers={self.n_layers}")


@dataclass
class TrainResult:
    model: GinEncoder
    curve: list[float] = field(default_factory=list)
    """Mean per-step training loss of each epoch, preceded by the same
    quantity measured before any optimization (``epochs + 1`` points)."""


def _view_seed(base: int, epoch: int, circuit: int) -> int:
    # Stable integer mix; epoch 0 is reserved for the fixed evaluation views.
    return (base * 1_000_003 + epoch * 7_919 + circuit) & 0x7FFFFFFF


def _embed_views(model: GinEncoder, pair: ViewPair) -> tuple[torch.Tensor, torch.Tensor]:
    latches = torch.from_numpy(pair.latch_nodes)
    outs = []
    for view in (pair.first, pair.second):
        feats = torch.from_numpy(view.feats)
        src = torch.from_numpy(view.edge_src)
        dst = torch.from_numpy(view.edge_dst)
        sign = torch.where(
            torch.from_numpy(view.edge_inv.copy()), torch.tensor(-1.0), torch.tensor(1.0))
        outs.append(model.forward(feats, src, dst, sign)[latches])
    return outs[0], outs[1]


def _epoch_chunks(
    order: np.ndarray, corpus: list[CircuitGraph], batch: int
) -> list[list[int]]:
    """Greedily pack shuffled circuits into steps of >= ``batch`` anchors."""
    chunks: list[list[int]] = []
    current: list[int] = []
    count = 0
    for c in order.tolist():
        current.append(c)
        count += corpus[c].n_latches
        if count >= batch:
            chunks.append(current)
            current, count = [], 0
    if current:
        if count < 2 and chunks:
            chunks[-1].extend(current)
        else:
            chunks.append(current)
    return chunks


def _batch_loss(
    model: GinEncoder, corpus: list[CircuitGraph], cfg: ContrastConfig,
    circuits: list[int], epoch: int,
) -> torch.Tensor:
    z1_parts, z2_parts = [], []
    for c in circuits:
        pair = make_views(corpus[c], cfg, _view_seed(cfg.seed, epoch, c))
        z1, z2 = _embed_views(model, pair)
        z1_parts.append(z1)
        z2_parts.append(z2)
    return nt_xent(torch.cat(z1_parts), torch.cat(z2_parts), cfg.tau)


def eval_loss(model: GinEncoder, corpus: list[CircuitGraph], cfg: ContrastConfig) -> float:
    """NT-Xent over the whole corpus as one batch, using the fixed eval views."""
    with torch.no_grad():
        return float(_batch_loss(model, corpus, cfg, list(range(len(corpus))), epoch=0))


def _run_epoch(
    model: GinEncoder,
    corpus: list[CircuitGraph],
    cfg: ContrastConfig,
    epoch: int,
    opt: torch.optim.Optimizer | None,
) -> float:
    """One pass over the corpus; returns the mean per-step loss.

    With an optimizer the pass trains (loss measured before each step, the
    usual training-loss convention); without one it only measures, which is
    how the pre-training point of the curve is produced (epoch 0, whose view
    seeds are reserved for evaluation).
    """
    order = np.random.default_rng([cfg.seed & 0xFFFFFFFF, epoch]).permutation(len(corpus))
    total = 0.0
    chunks = _epoch_chunks(order, corpus, cfg.batch)
    for chunk in chunks:
        if opt is None:
            with torch.no_grad():
                loss = _batch_loss(model, corpus, cfg, chunk, epoch)
        else:
            opt.zero_grad()
            loss = _batch_loss(model, corpus, cfg, chunk, epoch)
            loss.backward()
            opt.step()
        total += float(loss.detach())
    return total / len(chunks)


def train_encoder(corpus: list[CircuitGraph], cfg: ContrastConfig) -> TrainResult:
    cfg.validate()
    if not corpus:
        raise ValueError("empty corpus")
    total_anchors = sum(g.n_latches for g in corpus)
    if total_anchors < 2:
        raise ValueError(f"corpus holds {total_anchors} latch anchors; need at least 2")

    torch.manual_seed(cfg.seed)
    model = GinEncoder(dim=cfg.dim, n_layers=cfg.n_layers)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    # Cosine-annealed step size: lets the late epochs settle into the minimum
    # instead of oscillating around it.
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(1, cfg.epochs))

    curve = [_run_epoch(model, corpus, cfg, epoch=0, opt=None)]
    for epoch in range(1, cfg.epochs + 1):
        curve.append(_run_epoch(model, corpus, cfg, epoch, opt))
        sched.step()
    return TrainResult(model=model, curve=curve)


def pair_similarity_stats(
    model: GinEncoder, corpus: list[CircuitGraph], cfg: ContrastConfig
) -> tuple[float, float]:
    """Mean cosine similarity of positive pairs vs all negative pairs.

    Uses the fixed evaluation views; positives are a latch paired with itself
    across the two views, negatives are every other cross pair in the
    corpus-wide batch.
    """
    z1_parts, z2_parts = [], []
    with torch.no_grad():
        for c, g in enumerate(corpus):
            pair = make_views(g, cfg, _view_seed(cfg.seed, 0, c))
            z1, z2 = _embed_views(model, pair)
            z1_parts.append(z1)
            z2_parts.append(z2)
        z = torch.cat(z1_parts + z2_parts)
        m = z.shape[0] // 2
        norms = torch.linalg.vector_norm(z, dim=1)
        if bool((norms == 0).any()):
            raise ValueError("zero-norm embedding; cosine similarity is undefined")
        zn = z / norms.unsqueeze(1)
        sim = zn @ zn.T
        n = 2 * m
        idx = torch.arange(n)
        pos_index = torch.where(idx < m, idx + m, idx - m)
        pos_mask = torch.zeros((n, n), dtype=torch.bool)
        pos_mask[idx, pos_index] = True
        off_diag = ~torch.eye(n, dtype=torch.bool)
        neg_mask = off_diag & ~pos_mask
        return float(sim[pos_mask].mean()), float(sim[neg_mask].mean())
