"""Clause-conditioned literal scoring over minimized CTI cubes.

A cube is scored as a *set* of literals.  Each literal i contributes a row
x_i = [v_i, polarity_i] — the latch's augmented embedding (width d+1) plus a
polarity bit (1 for the positive literal, 0 for the negated one), so the
network input width is d+2.  Three two-layer MLPs (rectifier between each
dense pair) build the scores:

    clause context   g   = rho( sum_i phi(x_i) )          (width h)
    literal score    s_i = sigmoid( psi([x_i, g]) )       (scalar)

Summation runs over the cube's canonical literal order, so any permutation of
the same cube produces bitwise-identical scores.  Scoring touches embedding
table rows only — never the circuit graph.

Training minimizes mean binary cross-entropy over literals with mini-batch
gradient descent; gradients are computed analytically in reverse mode through
psi, rho, phi and the set summation, in 64-bit floats.  Labels come from an
oracle run's inductive invariant: a CTI cube is labeled by its covering
clause (cube form a subset of the CTI) discovered at the latest frame, ties
broken by shortest clause then lexicographic order; a literal is "keep" iff
it appears in that clause's cube.  Assembly keeps literals scoring >= theta,
decaying theta (theta *= decay) while nothing survives until theta drops
below the floor, at which point the cube is discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import formats
from .cubes import Clause, Cube
from .embed import EmbeddingTable
from .rng import XorShift64

DEFAULT_HIDDEN = 64


@dataclass
class Mlp:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def validate(self, name: str, in_width: int, out_width: int) -> None:
        hidden = self.w1.shape[0]
        if self.w1.shape != (hidden, in_width):
            raise ValueError(f"{name}: dense1 weight shape {self.w1.shape}")
        if self.b1.shape != (hidden,):
            raise ValueError(f"{name}: dense1 bias shape {self.b1.shape}")
        if self.w2.shape != (out_width, hidden):
            raise ValueError(f"{name}: dense2 weight shape {self.w2.shape}")
        if self.b2.shape != (out_width,):
            raise ValueError(f"{name}: dense2 bias shape {self.b2.shape}")
        for t in (self.w1, self.b1, self.w2, self.b2):
            if not np.isfinite(t).all():
                raise ValueError(f"{name}: non-finite parameters")

    def tensors(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


@dataclass
class ScorerWeights:
    phi: Mlp  # (d+2) -> h -> h
    rho: Mlp  # h -> h -> h
    psi: Mlp  # (d+2+h) -> h -> 1

    @property
    def input_width(self) -> int:
        return self.phi.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.phi.w2.shape[0]

    def validate(self) -> None:
        d2 = self.input_width
        h = self.hidden
        self.phi.validate("phi", d2, h)
        self.rho.validate("rho", h, h)
        self.psi.validate("psi", d2 + h, 1)

    def tensors(self) -> list[np.ndarray]:
        return self.phi.tensors() + self.rho.tensors() + self.psi.tensors()


@dataclass(frozen=True)
class TrainConfig:
    theta: float = 0.5
    decay: float = 0.9
    floor: float = 0.05
    lr: float = 1e-3
    batch: int = 256
    epochs: int = 50
    seed: int = 0
    hidden: int = DEFAULT_HIDDEN


@dataclass(frozen=True)
class LabeledCti:
    cube: Cube
    keep_mask: tuple[bool, ...]  # aligned with cube.lits
    clause_id: int
    frame: int


@dataclass(frozen=True)
class TrainSample:
    """Network-ready sample: one row per literal plus keep/drop targets."""

    x: np.ndarray  # (m, d+2) float64
    y: np.ndarray  # (m,) float64 in {0,1}


def _uniform(rng: XorShift64, rows: int, cols: int) -> np.ndarray:
    scale = 1.0 / math.sqrt(cols)
    out = np.empty((rows, cols), dtype=np.float64)
    for r in range(rows):
        for c in range(cols):
            out[r, c] = (2.0 * rng.next_float() - 1.0) * scale
    return out


def init_scorer_weights(
    embedding_width: int, hidden: int = DEFAULT_HIDDEN, seed: int = 0
) -> ScorerWeights:
    """Seeded init; ``embedding_width`` is the augmented row width (d+1)."""
    d2 = embedding_width + 1  # polarity bit
    rng = XorShift64(seed)

    def mlp(in_w: int, out_w: int) -> Mlp:
        return Mlp(
            w1=_uniform(rng, hidden, in_w),
            b1=np.zeros(hidden, dtype=np.float64),
            w2=_uniform(rng, out_w, hidden),
            b2=np.zeros(out_w, dtype=np.float64),
        )

    w = ScorerWeights(phi=mlp(d2, hidden), rho=mlp(hidden, hidden), psi=mlp(d2 + hidden, 1))
    w.validate()
    return w


# ------------------------------------------------------------------- forward


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def cube_rows(cube: Cube, table: EmbeddingTable) -> np.ndarray:
    """(m, d+2) float64 input rows in the cube's canonical literal order."""
    if table.augmented is None:
        raise ValueError("embedding table must be augmented with flip rates")
    if len(cube) == 0:
        raise ValueError("cannot build scorer rows for an empty cube")
    rows = []
    for lit in cube:
        r = table.augmented[table.row_index(abs(lit))].astype(np.float64)
        rows.append(np.concatenate([r, [1.0 if lit > 0 else 0.0]]))
    return np.stack(rows)


def _forward(w: ScorerWeights, x: np.ndarray) -> dict:
    p1 = x @ w.phi.w1.T + w.phi.b1
    a1 = np.maximum(p1, 0.0)
    f = a1 @ w.phi.w2.T + w.phi.b2
    s_vec = f.sum(axis=0)
    r1 = s_vec @ w.rho.w1.T + w.rho.b1
    ra = np.maximum(r1, 0.0)
    g = ra @ w.rho.w2.T + w.rho.b2
    z = np.concatenate([x, np.broadcast_to(g, (x.shape[0], g.shape[0]))], axis=1)
    q1 = z @ w.psi.w1.T + w.psi.b1
    qa = np.maximum(q1, 0.0)
    logit = (qa @ w.psi.w2.T + w.psi.b2).ravel()
    return {
        "x": x, "p1": p1, "a1": a1, "f": f, "s_vec": s_vec, "r1": r1, "ra": ra,
        "g": g, "z": z, "q1": q1, "qa": qa, "logit": logit,
    }


def score_rows(w: ScorerWeights, x: np.ndarray) -> np.ndarray:
    """Scores for pre-built input rows (one cube = one set)."""
    if x.shape[1] != w.input_width:
        raise ValueError(f"row width {x.shape[1]} != scorer input {w.input_width}")
    return _sigmoid(_forward(w, x.astype(np.float64))["logit"])


def score_clause_literals(
    w: ScorerWeights, cube: Cube, table: EmbeddingTable
) -> np.ndarray:
    """Per-literal scores aligned with ``cube.lits`` (canonical order)."""
    return score_rows(w, cube_rows(cube, table))


def clause_context(w: ScorerWeights, x: np.ndarray) -> np.ndarray:
    """The aggregated clause vector g = rho(sum_i phi(x_i))."""
    return _forward(w, x.astype(np.float64))["g"]


# ------------------------------------------------------------------ assembly


def assemble_clause(cube: Cube, scores: Sequence[float], cfg: TrainConfig) -> Clause | None:
    if len(scores) != len(cube):
        raise ValueError("scores are not aligned with the cube")
    theta = cfg.theta
    while theta >= cfg.floor:
        kept = [lit for lit, s in zip(cube.lits, scores) if s >= theta]
        if kept:
            return Cube.of(kept).negate()
        theta *= cfg.decay
    return None


# -------------------------------------------------------------------- labels


def generate_labels(
    ctis: Sequence, invariant: Sequence[tuple[Clause, int]]
) -> tuple[list[LabeledCti], int]:
    """Label each CTI cube from its covering invariant clause.

    A clause covers a CTI when its cube form is a subset of the CTI's cube.
    The covering clause discovered at the latest frame wins; within a frame,
    the shortest clause, then the lexicographically least literal tuple.
    Uncovered CTIs are skipped; the second result counts them.
    """
    candidates = [(cl, fr, cl.negate()) for cl, fr in invariant]
    labeled: list[LabeledCti] = []
    skipped = 0
    for cti in ctis:
        cube: Cube = cti.cube if hasattr(cti, "cube") else cti
        cube_set = set(cube.lits)
        best = None
        best_key = None
        for idx, (cl, fr, ccube) in enumerate(candidates):
            if not set(ccube.lits) <= cube_set:
                continue
            key = (-fr, len(cl.lits), cl.lits)
            if best_key is None or key < best_key:
                best_key = key
                best = (idx, cl, fr, ccube)
        if best is None:
            skipped += 1
            continue
        idx, cl, fr, ccube = best
        keep = set(ccube.lits)
        labeled.append(
            LabeledCti(
                cube=cube,
                keep_mask=tuple(lit in keep for lit in cube.lits),
                clause_id=idx,
                frame=fr,
            )
        )
    return labeled, skipped


def make_training_samples(
    labeled: Sequence[LabeledCti], table: EmbeddingTable
) -> list[TrainSample]:
    out = []
    for item in labeled:
        x = cube_rows(item.cube, table)
        y = np.array([1.0 if k else 0.0 for k in item.keep_mask], dtype=np.float64)
        out.append(TrainSample(x=x, y=y))
    return out


# ------------------------------------------------------------------ training


def _zeros_like_weights(w: ScorerWeights) -> list[np.ndarray]:
    return [np.zeros_like(t) for t in w.tensors()]


def _loss_and_grads(
    w: ScorerWeights, batch: Sequence[TrainSample], want_grads: bool = True
) -> tuple[float, list[np.ndarray] | None]:
    """Mean BCE over all literals in the batch, with reverse-mode gradients."""
    n_lits = sum(len(s.y) for s in batch)
    if n_lits == 0:
        raise ValueError("batch contains no literals")
    grads = _zeros_like_weights(w) if want_grads else None
    (gpw1, gpb1, gpw2, gpb2, grw1, grb1, grw2, grb2, gqw1, gqb1, gqw2, gqb2) = (
        grads if want_grads else [None] * 12
    )
    total = 0.0
    for sample in batch:
        cache = _forward(w, sample.x)
        logit, y = cache["logit"], sample.y
        # stable BCE: max(l,0) - l*y + log(1+exp(-|l|))
        total += float(
            np.sum(np.maximum(logit, 0.0) - logit * y + np.log1p(np.exp(-np.abs(logit))))
        )
        if not want_grads:
            continue
        dlogit = (_sigmoid(logit) - y) / n_lits  # (m,)
        qa, q1, z = cache["qa"], cache["q1"], cache["z"]
        gqw2 += dlogit[None, :] @ qa
        gqb2 += dlogit.sum(keepdims=True)
        dqa = dlogit[:, None] * w.psi.w2  # (m, h)
        dq1 = dqa * (q1 > 0.0)
        gqw1 += dq1.T @ z
        gqb1 += dq1.sum(axis=0)
        dz = dq1 @ w.psi.w1  # (m, d2 + h)
        d2 = sample.x.shape[1]
        dg = dz[:, d2:].sum(axis=0)  # (h,)
        ra, r1, s_vec = cache["ra"], cache["r1"], cache["s_vec"]
        grw2 += np.outer(dg, ra)
        grb2 += dg
        dra = dg @ w.rho.w2
        dr1 = dra * (r1 > 0.0)
        grw1 += np.outer(dr1, s_vec)
        grb1 += dr1
        ds = dr1 @ w.rho.w1  # (h,)
        f_rows = np.broadcast_to(ds, cache["f"].shape)  # dF: same for every row
        a1, p1, x = cache["a1"], cache["p1"], cache["x"]
        gpw2 += f_rows.T @ a1
        gpb2 += f_rows.sum(axis=0)
        da1 = f_rows @ w.phi.w2
        dp1 = da1 * (p1 > 0.0)
        gpw1 += dp1.T @ x
        gpb1 += dp1.sum(axis=0)
    return total / n_lits, grads


def dataset_loss(w: ScorerWeights, data: Sequence[TrainSample]) -> float:
    loss, _ = _loss_and_grads(w, data, want_grads=False)
    return loss


def train_on_samples(
    data: Sequence[TrainSample],
    cfg: TrainConfig,
    init: ScorerWeights | None = None,
) -> tuple[ScorerWeights, list[float]]:
    if not data:
        raise ValueError("training data is empty")
    width = data[0].x.shape[1]
    if init is None:
        w = init_scorer_weights(width - 1, hidden=cfg.hidden, seed=cfg.seed)
    else:
        w = ScorerWeights(
            phi=Mlp(*(t.copy() for t in init.phi.tensors())),
            rho=Mlp(*(t.copy() for t in init.rho.tensors())),
            psi=Mlp(*(t.copy() for t in init.psi.tensors())),
        )
    if w.input_width != width:
        raise ValueError(f"scorer input {w.input_width} != sample width {width}")
    rng = XorShift64(cfg.seed ^ 0xD1B54A32D192ED03)
    curve = []
    for _ in range(cfg.epochs):
        curve.append(dataset_loss(w, data))
        order = list(range(len(data)))
        rng.shuffle(order)
        for start in range(0, len(order), cfg.batch):
            batch = [data[i] for i in order[start : start + cfg.batch]]
            _, grads = _loss_and_grads(w, batch)
            for t, g in zip(w.tensors(), grads):
                t -= cfg.lr * g
    curve.append(dataset_loss(w, data))
    return w, curve


def train_scorer(
    groups: Sequence[tuple[EmbeddingTable, Sequence[LabeledCti]]],
    cfg: TrainConfig,
    init: ScorerWeights | None = None,
) -> tuple[ScorerWeights, list[float]]:
    """Train from labeled CTIs grouped with their circuit's embedding table."""
    data: list[TrainSample] = []
    for table, labeled in groups:
        data.extend(make_training_samples(labeled, table))
    return train_on_samples(data, cfg, init=init)


# ------------------------------------------------------------- serialization

_TENSOR_NAMES = [
    f"{mlp}.{layer}.{kind}"
    for mlp in ("phi", "rho", "psi")
    for layer in ("dense1", "dense2")
    for kind in ("w", "b")
]


def export_scorer_weights(w: ScorerWeights, binary: bool = True) -> bytes:
    w.validate()
    arrays = [
        w.phi.w1, w.phi.b1, w.phi.w2, w.phi.b2,
        w.rho.w1, w.rho.b1, w.rho.w2, w.rho.b2,
        w.psi.w1, w.psi.b1, w.psi.w2, w.psi.b2,
    ]
    return formats.write_weights("scorer", list(zip(_TENSOR_NAMES, arrays)), binary=binary)


def load_scorer_weights(data: bytes) -> ScorerWeights:
    kind, tensors, _meta = formats.read_weights(data)
    if kind != "scorer":
        raise formats.FormatError(f"expected scorer weights, found kind {kind!r}")
    names = [n for n, _ in tensors]
    if names != _TENSOR_NAMES:
        missing = [n for n in _TENSOR_NAMES if n not in names]
        if missing:
            raise formats.FormatError(f"missing tensor {missing[0]!r}")
        raise formats.FormatError(f"unexpected tensor order {names}")
    a = [t.astype(np.float64) for _, t in tensors]
    w = ScorerWeights(
        phi=Mlp(a[0], a[1], a[2], a[3]),
        rho=Mlp(a[4], a[5], a[6], a[7]),
        psi=Mlp(a[8], a[9], a[10], a[11]),
    )
    w.validate()
    return w
