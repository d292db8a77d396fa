"""End-to-end orchestration: preprocessing artifacts, guided checks, benchmarks.

The flow has three stages.  Preprocessing turns each circuit into reusable
artifacts (graph export, latch embeddings, flip rates, a minimized CTI pool),
cached on disk under a content-derived key so re-runs are no-ops.  Labeling and
training turn pools from provably safe circuits into scorer weights.  Checking
runs the solver per circuit in one of three modes:

* ``vanilla``         — plain engine, no automatic clause injection;
* ``legend``          — score pooled CTI literals, assemble candidate clauses,
                        sanity-filter, inject into frame 1, then check;
* ``random-ablation`` — same path but literals are kept/dropped by a seeded
                        coin flip instead of the scorer.

Explicitly supplied side-load clause files are injected in every mode; the mode
only selects how automatic candidates are produced.  Reported wall time always
includes clause production, sanity checking, and injection, not just the solve.

The benchmark harness runs (instance, mode) tasks in isolated worker processes
and scores them with PAR2: wall time when solved within the timeout, twice the
timeout otherwise.
"""

from __future__ import annotations

import hashlib
import multiprocessing
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from . import formats
from .aiger import Aig, AigerError, TransitionSystem, parse, to_transition_system
from .cti import sample_ctis
from .cubes import Clause, Cube
from .embed import (
    EmbeddingTable,
    augment_with_flip_rate,
    export_embedding_table,
    gin_forward,
    initial_node_features,
    load_embedding_table,
    load_encoder_weights,
    structural_fallback_embed,
)
from .flipsim import compute_flip_rates, flip_rates_csv
from .graph import CircuitGraph, build_graph
from .pdr import Budget, PdrEngine, Safe, Stats, Unknown, Unsafe, VerificationResult
from .rng import MASK64, XorShift64, splitmix64
from .scorer import (
    LabeledCti,
    TrainConfig,
    assemble_clause,
    generate_labels,
    load_scorer_weights,
    score_clause_literals,
    train_scorer,
)

MODES = ("vanilla", "legend", "random-ablation")

GRAPH_FILE = "graph.txt"
EMBED_FILE = "embed.wts"
FLIPS_FILE = "flips.csv"
POOL_FILE = "ctis.pool"
LABELED_FILE = "labeled.pool"
INVARIANT_FILE = "invariant.clauses"
SOURCE_FILE = "source.txt"
CACHE_FILE = "cache.key"

_ABLATION_SALT = 0xC0FFEE5EED5A17


class PipelineError(RuntimeError):
    """A pipeline step cannot proceed (missing inputs, bad configuration)."""


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared across subcommands; validated once at construction."""

    mode: str = "vanilla"
    seed: int = 0
    timeout_s: float = 60.0
    theta: float = 0.5
    decay: float = 0.9
    floor: float = 0.05
    n_ctis: int = 256
    sim_cycles: int = 10000
    embed_dim: int = 32
    encoder_weights_path: str | None = None
    scorer_weights_path: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise PipelineError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if not self.timeout_s > 0:
            raise PipelineError("timeout must be positive")
        if not (0.0 < self.decay < 1.0):
            raise PipelineError("decay must lie strictly between 0 and 1")
        if self.floor <= 0.0 or self.theta <= 0.0:
            raise PipelineError("theta and floor must be positive")
        if self.n_ctis < 0 or self.sim_cycles <= 0 or self.embed_dim <= 0:
            raise PipelineError("counts and dimensions must be positive")


# ----------------------------------------------------------------- cache keys


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _preprocess_token(cfg: RunConfig) -> str:
    """Stable string of every knob that affects preprocessing artifacts."""
    if cfg.encoder_weights_path is None:
        enc = "fallback"
    else:
        enc = content_hash(Path(cfg.encoder_weights_path).read_bytes())
    return (
        f"pre-v1 seed={cfg.seed} ctis={cfg.n_ctis} cycles={cfg.sim_cycles} "
        f"dim={cfg.embed_dim} encoder={enc}"
    )


def cache_key(aig_bytes: bytes, cfg: RunConfig) -> str:
    h = hashlib.sha256()
    h.update(content_hash(aig_bytes).encode("ascii"))
    h.update(b"\x00")
    h.update(_preprocess_token(cfg).encode("ascii"))
    return h.hexdigest()


# --------------------------------------------------------------- graph export


def graph_to_text(g: CircuitGraph) -> str:
    """Flat graph interchange: nodes, features, edges, latch rows.

    This is the file an external graph-encoder trainer consumes, so it
    carries the computed node features and the latch row mapping rather
    than leaving consumers to re-derive them.
    """
    feats = initial_node_features(g)
    lines = [f"graph v1 nodes={g.n_nodes} edges={len(g.edges)}"]
    if g.property_node is not None:
        lines.append(f"property {g.property_node}")
    for i, (kind, var) in enumerate(zip(g.kinds, g.node_vars)):
        lines.append(f"node {i} {kind} {var}")
    for i, row in enumerate(feats):
        lines.append("feat " + str(i) + " " + " ".join(f"{x:.9g}" for x in row))
    for src, dst, inv in g.edges:
        lines.append(f"edge {src} {dst} {1 if inv else 0}")
    for node, row in sorted(g.latch_index.items(), key=lambda kv: kv[1]):
        lines.append(f"latch {node} {row}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- embeddings


def embed_circuit(aig: Aig, cfg: RunConfig) -> EmbeddingTable:
    """Flip-rate-augmented latch embedding table for one circuit."""
    g = build_graph(aig)
    if cfg.encoder_weights_path is not None:
        w = load_encoder_weights(Path(cfg.encoder_weights_path).read_bytes())
        raw = gin_forward(g, initial_node_features(g), w)
    else:
        raw = structural_fallback_embed(g, seed=cfg.seed, dim=cfg.embed_dim)
    rates = compute_flip_rates(aig, cycles=cfg.sim_cycles, seed=cfg.seed)
    return augment_with_flip_rate(raw, rates)


# -------------------------------------------------------------- preprocessing


@dataclass
class PreprocessResult:
    path: Path
    status: str  # "built" | "cached" | "failed"
    artifact_dir: Path | None = None
    message: str = ""


def artifact_dir_map(paths: Sequence[Path], out_root: Path) -> dict[Path, Path]:
    """Deterministic per-circuit artifact directory names (stem, disambiguated)."""
    used: set[str] = set()
    mapping: dict[Path, Path] = {}
    for p in sorted(paths):
        name = p.stem
        if name in used:
            name = f"{name}-{content_hash(str(p).encode())[:8]}"
        used.add(name)
        mapping[p] = out_root / name
    return mapping


def preprocess_file(path: Path, art_dir: Path, cfg: RunConfig) -> PreprocessResult:
    try:
        data = path.read_bytes()
        key = cache_key(data, cfg)
        key_file = art_dir / CACHE_FILE
        if key_file.exists() and key_file.read_text().strip() == key:
            return PreprocessResult(path=path, status="cached", artifact_dir=art_dir)
        aig = parse(data)
        ts = to_transition_system(aig)
        table = embed_circuit(aig, cfg)
        rates = compute_flip_rates(aig, cycles=cfg.sim_cycles, seed=cfg.seed)
        ctis = sample_ctis(ts, n=cfg.n_ctis, seed=cfg.seed)
        art_dir.mkdir(parents=True, exist_ok=True)
        (art_dir / GRAPH_FILE).write_text(graph_to_text(build_graph(aig)))
        (art_dir / EMBED_FILE).write_bytes(export_embedding_table(table))
        (art_dir / FLIPS_FILE).write_text(flip_rates_csv(rates))
        (art_dir / POOL_FILE).write_text(formats.write_cti_pool(ts, ctis))
        (art_dir / SOURCE_FILE).write_text(f"{path.resolve()}\n{content_hash(data)}\n")
        key_file.write_text(key + "\n")  # written last: partial builds never hit
        return PreprocessResult(path=path, status="built", artifact_dir=art_dir)
    except (AigerError, formats.FormatError, OSError, ValueError) as exc:
        return PreprocessResult(path=path, status="failed", message=str(exc))


def run_preprocess(
    paths: Sequence[Path], out_root: Path, cfg: RunConfig
) -> tuple[list[PreprocessResult], int]:
    """Preprocess many circuits; returns (per-file results, cache hits)."""
    mapping = artifact_dir_map(paths, out_root)
    results = [preprocess_file(p, mapping[p], cfg) for p in sorted(paths)]
    hits = sum(1 for r in results if r.status == "cached")
    return results, hits


def load_pool(ts: TransitionSystem, art_dir: Path) -> list[formats.PoolEntry]:
    return formats.read_cti_pool(ts, (art_dir / POOL_FILE).read_text())


def load_table(art_dir: Path) -> EmbeddingTable:
    return load_embedding_table((art_dir / EMBED_FILE).read_bytes())


# ------------------------------------------------------- candidate production


def scored_candidates(
    cubes: Sequence[Cube],
    table: EmbeddingTable,
    scorer_w,
    cfg: RunConfig,
) -> list[Clause]:
    """Assemble candidate clauses from scored CTI literals (deduplicated)."""
    tc = TrainConfig(theta=cfg.theta, decay=cfg.decay, floor=cfg.floor)
    out: dict[Clause, None] = {}
    for cube in cubes:
        if len(cube) == 0:
            continue  # fully lifted cube: no literals to score, no lemma to form
        scores = score_clause_literals(scorer_w, cube, table)
        cl = assemble_clause(cube, scores, tc)
        if cl is not None:
            out.setdefault(cl, None)
    return list(out)


def ablation_candidates(cubes: Sequence[Cube], seed: int) -> list[Clause]:
    """Seeded coin flip keeps or drops each literal; empty picks are discarded."""
    rng = XorShift64(splitmix64((seed ^ _ABLATION_SALT) & MASK64))
    out: dict[Clause, None] = {}
    for cube in cubes:
        kept = [lit for lit in cube if rng.next_bit()]
        if kept:
            out.setdefault(Cube.of(kept).negate(), None)
    return list(out)


# -------------------------------------------------------------------- checking


@dataclass
class CheckOutcome:
    result: VerificationResult
    stats: Stats
    wall_s: float  # includes candidate production, sanity checks, injection
    candidates: tuple[Clause, ...] = ()


def verdict_str(result: VerificationResult) -> str:
    if isinstance(result, Safe):
        return "SAFE"
    if isinstance(result, Unsafe):
        return "UNSAFE"
    return "UNKNOWN"


def _guidance_pool(
    ts: TransitionSystem, cfg: RunConfig, artifact_dir: Path | None
) -> list[Cube]:
    if artifact_dir is not None and (artifact_dir / POOL_FILE).exists():
        return [e.cube for e in load_pool(ts, artifact_dir)]
    return [s.cube for s in sample_ctis(ts, n=cfg.n_ctis, seed=cfg.seed)]


def _guidance_table(
    aig: Aig, cfg: RunConfig, artifact_dir: Path | None
) -> EmbeddingTable:
    if artifact_dir is not None and (artifact_dir / EMBED_FILE).exists():
        table = load_table(artifact_dir)
        if table.augmented is not None:
            return table
    return embed_circuit(aig, cfg)


def run_check(
    aig: Aig,
    cfg: RunConfig,
    artifact_dir: Path | None = None,
    sideload: Sequence[Clause] = (),
) -> CheckOutcome:
    """Check one circuit in the configured mode.

    ``sideload`` clauses come from an explicit clause file and are injected in
    every mode; ``legend`` and ``random-ablation`` additionally produce their
    own candidates from the CTI pool.  All injected clauses pass through the
    engine's sanity filter.
    """
    t0 = time.monotonic()
    ts = to_transition_system(aig)
    candidates: list[Clause] = list(sideload)
    if cfg.mode == "legend":
        if cfg.scorer_weights_path is None:
            raise PipelineError("legend mode requires scorer weights (--weights)")
        scorer_w = load_scorer_weights(Path(cfg.scorer_weights_path).read_bytes())
        table = _guidance_table(aig, cfg, artifact_dir)
        expected = table.augmented.shape[1] + 1  # one extra polarity column
        if scorer_w.input_width != expected:
            raise PipelineError(
                f"scorer weights take rows of width {scorer_w.input_width} but the "
                f"embedding table produces width {expected}; pass --artifacts from "
                f"the preprocess run the scorer was trained on, or --dim "
                f"{scorer_w.input_width - 2}"
            )
        cubes = _guidance_pool(ts, cfg, artifact_dir)
        candidates.extend(scored_candidates(cubes, table, scorer_w, cfg))
    elif cfg.mode == "random-ablation":
        cubes = _guidance_pool(ts, cfg, artifact_dir)
        candidates.extend(ablation_candidates(cubes, cfg.seed))

    engine = PdrEngine(ts, Budget(timeout_s=cfg.timeout_s))
    unique: dict[Clause, None] = {}
    for cl in candidates:
        unique.setdefault(cl, None)
    if unique:
        engine.inject_sideload(list(unique))
    result, stats = engine.check()
    return CheckOutcome(
        result=result,
        stats=stats,
        wall_s=time.monotonic() - t0,
        candidates=tuple(unique),
    )


def write_check_artifacts(
    ts: TransitionSystem,
    outcome: CheckOutcome,
    cfg: RunConfig,
    out_dir: Path,
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    lines = [
        f"verdict: {verdict_str(outcome.result)}",
        f"mode: {cfg.mode}",
        f"seed: {cfg.seed}",
        f"wall_s: {outcome.wall_s:.3f}",
    ]
    s = outcome.stats
    lines += [
        f"sat_queries: {s.sat_queries}",
        f"obligations: {s.obligations}",
        f"clauses_learned: {s.clauses_learned}",
        f"frames: {s.frames}",
        f"propagations: {s.propagations}",
        f"sideload_offered: {s.sideload_offered}",
        f"sideload_accepted: {s.sideload_accepted}",
    ]
    if isinstance(outcome.result, Unknown):
        lines.append(f"reason: {outcome.result.reason}")
    p = out_dir / "result.txt"
    p.write_text("\n".join(lines) + "\n")
    written.append(p)
    if isinstance(outcome.result, Safe):
        frames = outcome.result.discovery_frames
        comments = [
            f"inductive invariant; discovery frames: "
            f"{' '.join(str(frames.get(c, 1)) for c in outcome.result.invariant)}"
        ]
        p = out_dir / INVARIANT_FILE
        p.write_text(formats.write_clauses(ts, outcome.result.invariant, comments))
        written.append(p)
    if isinstance(outcome.result, Unsafe):
        p = out_dir / "witness.aiw"
        p.write_text(formats.write_witness(ts, outcome.result.trace))
        written.append(p)
    if outcome.candidates:
        p = out_dir / "sideload.clauses"
        p.write_text(
            formats.write_clauses(ts, outcome.candidates, ["offered side-load candidates"])
        )
        written.append(p)
    return written


# ------------------------------------------------------------- oracle labeling


@dataclass
class LabelResult:
    path: Path
    status: str  # "labeled" | "excluded-trivial" | "excluded-unsafe"
    #             | "excluded-unknown" | "excluded-uncovered" | "failed"
    n_samples: int = 0
    message: str = ""


def label_circuit(
    path: Path, art_dir: Path, cfg: RunConfig
) -> LabelResult:
    """Run the engine as labeling oracle over one preprocessed circuit.

    Only circuits our engine proves safe within the timeout contribute samples;
    unsafe and undecided circuits are excluded, as are trivially safe circuits
    with an empty CTI pool and pools no invariant clause covers.
    """
    try:
        aig = parse(path.read_bytes())
        ts = to_transition_system(aig)
        if (art_dir / POOL_FILE).exists():
            pool = load_pool(ts, art_dir)
        else:
            pool = [
                formats.PoolEntry(cube=s.cube, inputs=s.inputs, next_inputs=s.next_inputs)
                for s in sample_ctis(ts, n=cfg.n_ctis, seed=cfg.seed)
            ]
        if not pool:
            return LabelResult(path=path, status="excluded-trivial")
        engine = PdrEngine(ts, Budget(timeout_s=cfg.timeout_s))
        result, _stats = engine.check()
        if isinstance(result, Unsafe):
            return LabelResult(path=path, status="excluded-unsafe")
        if isinstance(result, Unknown):
            return LabelResult(path=path, status="excluded-unknown")
        assert isinstance(result, Safe)
        invariant = [
            (cl, result.discovery_frames.get(cl, 1)) for cl in result.invariant
        ]
        labeled, _skipped = generate_labels([e.cube for e in pool], invariant)
        if not labeled:
            return LabelResult(path=path, status="excluded-uncovered")
        by_cube = {e.cube: e for e in pool}
        entries = [
            formats.PoolEntry(
                cube=item.cube,
                inputs=by_cube[item.cube].inputs,
                next_inputs=by_cube[item.cube].next_inputs,
                keep_mask=item.keep_mask,
            )
            for item in labeled
        ]
        art_dir.mkdir(parents=True, exist_ok=True)
        (art_dir / LABELED_FILE).write_text(
            formats.write_cti_pool(ts, entries, labeled=True)
        )
        frames = [fr for _, fr in invariant]
        (art_dir / INVARIANT_FILE).write_text(
            formats.write_clauses(
                ts,
                [cl for cl, _ in invariant],
                [f"discovery frames: {' '.join(str(f) for f in frames)}"],
            )
        )
        return LabelResult(path=path, status="labeled", n_samples=len(entries))
    except (AigerError, formats.FormatError, OSError, ValueError) as exc:
        return LabelResult(path=path, status="failed", message=str(exc))


def run_oracle_labels(
    paths: Sequence[Path], artifacts_root: Path, cfg: RunConfig
) -> list[LabelResult]:
    mapping = artifact_dir_map(paths, artifacts_root)
    return [label_circuit(p, mapping[p], cfg) for p in sorted(paths)]


# ------------------------------------------------------------------- training


def load_labeled_group(
    art_dir: Path,
) -> tuple[EmbeddingTable, list[LabeledCti]]:
    """Read one artifact directory's (embedding table, labeled CTIs) pair."""
    source = art_dir / SOURCE_FILE
    if not source.exists():
        raise PipelineError(f"{art_dir}: missing {SOURCE_FILE}; run preprocess first")
    circuit_path = Path(source.read_text().splitlines()[0])
    if not circuit_path.exists():
        raise PipelineError(f"{art_dir}: source circuit {circuit_path} has moved")
    ts = to_transition_system(parse(circuit_path.read_bytes()))
    table = load_table(art_dir)
    if table.augmented is None:
        raise PipelineError(f"{art_dir}: embedding table lacks the flip-rate column")
    labeled_path = art_dir / LABELED_FILE
    if not labeled_path.exists():
        raise PipelineError(f"{art_dir}: missing {LABELED_FILE}; run oracle-labels first")
    entries = formats.read_cti_pool(ts, labeled_path.read_text())
    labeled = []
    for e in entries:
        if e.keep_mask is None:
            raise PipelineError(f"{art_dir}: pool entry lacks a keep mask")
        labeled.append(
            LabeledCti(cube=e.cube, keep_mask=e.keep_mask, clause_id=0, frame=0)
        )
    return table, labeled


def run_train_scorer(
    artifact_dirs: Sequence[Path], tc: TrainConfig
) -> tuple:
    """Train the literal scorer from labeled artifact directories."""
    groups = []
    for d in sorted(artifact_dirs):
        groups.append(load_labeled_group(Path(d)))
    if not groups:
        raise PipelineError("no labeled artifact directories supplied")
    weights, curve = train_scorer(groups, tc)
    n = sum(len(lab) for _, lab in groups)
    return weights, curve, n


# ------------------------------------------------------------------ benchmark

CSV_COLUMNS = (
    "instance",
    "mode",
    "verdict",
    "wall_s",
    "par2_s",
    "sat_queries",
    "sideload_offered",
    "sideload_accepted",
)


@dataclass(frozen=True)
class BenchRow:
    instance: str
    mode: str
    verdict: str
    wall_s: float
    par2_s: float
    sat_queries: int
    sideload_offered: int
    sideload_accepted: int

    def csv(self) -> str:
        return ",".join(
            [
                self.instance,
                self.mode,
                self.verdict,
                f"{self.wall_s:.3f}",
                f"{self.par2_s:.3f}",
                str(self.sat_queries),
                str(self.sideload_offered),
                str(self.sideload_accepted),
            ]
        )


def par2_time(verdict: str, wall_s: float, timeout_s: float) -> float:
    if verdict in ("SAFE", "UNSAFE") and wall_s <= timeout_s:
        return wall_s
    return 2.0 * timeout_s


def _bench_task(args: tuple) -> dict:
    """Worker body: one (instance, mode) check in a fresh process."""
    path_str, mode, cfg_kwargs, artifact_dir = args
    try:
        cfg = replace(RunConfig(**cfg_kwargs), mode=mode)
        aig = parse(Path(path_str).read_bytes())
        art = Path(artifact_dir) if artifact_dir is not None else None
        outcome = run_check(aig, cfg, artifact_dir=art)
        s = outcome.stats
        return {
            "verdict": verdict_str(outcome.result),
            "wall_s": outcome.wall_s,
            "sat_queries": s.sat_queries,
            "sideload_offered": s.sideload_offered,
            "sideload_accepted": s.sideload_accepted,
        }
    except Exception as exc:  # worker boundary: report, never hang the harness
        return {"error": f"{type(exc).__name__}: {exc}"}


def _run_isolated(task: tuple, timeout_s: float) -> dict:
    """Run one task in its own process with a hard wall-clock cap."""
    ctx = multiprocessing.get_context("fork")
    recv, send = ctx.Pipe(duplex=False)

    def body(conn, t):
        conn.send(_bench_task(t))
        conn.close()

    proc = ctx.Process(target=body, args=(send, task))
    proc.start()
    send.close()
    # the engine enforces its own deadline; the cap only guards against hangs
    proc.join(timeout=timeout_s * 2.0 + 15.0)
    if proc.is_alive():
        proc.terminate()
        proc.join()
        return {"verdict": "UNKNOWN", "wall_s": timeout_s, "killed": True}
    if recv.poll():
        return recv.recv()
    return {"error": f"worker exited with code {proc.exitcode}"}


def run_bench(
    paths: Sequence[Path],
    modes: Sequence[str],
    cfg: RunConfig,
    artifacts_root: Path | None = None,
    jobs: int | None = None,
) -> tuple[list[BenchRow], list[str]]:
    """Benchmark every (mode, instance) pair; returns (rows, error messages).

    Instances run in isolated single-threaded worker processes, up to ``jobs``
    at a time.  Row order is deterministic: modes in the order given, instances
    sorted by path.
    """
    for m in modes:
        if m not in MODES:
            raise PipelineError(f"unknown mode {m!r}")
    if "legend" in modes and cfg.scorer_weights_path is None:
        raise PipelineError("legend mode requires scorer weights (--weights)")
    paths = sorted(paths)
    mapping = (
        artifact_dir_map(paths, artifacts_root) if artifacts_root is not None else {}
    )
    cfg_kwargs = {
        "seed": cfg.seed,
        "timeout_s": cfg.timeout_s,
        "theta": cfg.theta,
        "decay": cfg.decay,
        "floor": cfg.floor,
        "n_ctis": cfg.n_ctis,
        "sim_cycles": cfg.sim_cycles,
        "embed_dim": cfg.embed_dim,
        "encoder_weights_path": cfg.encoder_weights_path,
        "scorer_weights_path": cfg.scorer_weights_path,
    }
    tasks = []
    for mode in modes:
        for p in paths:
            art = mapping.get(p)
            tasks.append(
                (str(p), mode, cfg_kwargs, str(art) if art is not None else None)
            )
    jobs = jobs if jobs is not None else min(len(tasks), os.cpu_count() or 1)
    jobs = max(1, jobs)

    results: list[dict | None] = [None] * len(tasks)
    if jobs == 1:
        for i, t in enumerate(tasks):
            results[i] = _run_isolated(t, cfg.timeout_s)
    else:
        with multiprocessing.get_context("fork").Pool(processes=jobs) as pool:
            async_results = [
                pool.apply_async(_bench_task, (t,)) for t in tasks
            ]
            for i, ar in enumerate(async_results):
                try:
                    results[i] = ar.get(timeout=cfg.timeout_s * 2.0 + 30.0)
                except multiprocessing.TimeoutError:
                    results[i] = {
                        "verdict": "UNKNOWN",
                        "wall_s": cfg.timeout_s,
                        "killed": True,
                    }

    rows: list[BenchRow] = []
    errors: list[str] = []
    for (path_str, mode, _k, _a), res in zip(tasks, results):
        name = Path(path_str).name
        if res is None or "error" in res:
            msg = res["error"] if res else "no result"
            errors.append(f"{name} [{mode}]: {msg}")
            continue
        verdict = res["verdict"]
        wall = float(res["wall_s"])
        rows.append(
            BenchRow(
                instance=name,
                mode=mode,
                verdict=verdict,
                wall_s=wall,
                par2_s=par2_time(verdict, wall, cfg.timeout_s),
                sat_queries=int(res.get("sat_queries", 0)),
                sideload_offered=int(res.get("sideload_offered", 0)),
                sideload_accepted=int(res.get("sideload_accepted", 0)),
            )
        )
    return rows, errors


def bench_csv(rows: Sequence[BenchRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(r.csv() for r in rows)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ModeAggregate:
    mode: str
    solved_safe: int
    solved_unsafe: int
    unsolved: int
    total_par2: float
    avg_par2: float
    speedup: float  # baseline total PAR2 / this mode's total PAR2


def aggregate_bench(rows: Sequence[BenchRow], modes: Sequence[str]) -> list[ModeAggregate]:
    by_mode = {m: [r for r in rows if r.mode == m] for m in modes}
    baseline_total = None
    out = []
    for m in modes:
        rs = by_mode[m]
        total = sum(r.par2_s for r in rs)
        if baseline_total is None:
            baseline_total = total
        out.append(
            ModeAggregate(
                mode=m,
                solved_safe=sum(1 for r in rs if r.verdict == "SAFE"),
                solved_unsafe=sum(1 for r in rs if r.verdict == "UNSAFE"),
                unsolved=sum(1 for r in rs if r.verdict not in ("SAFE", "UNSAFE")),
                total_par2=total,
                avg_par2=total / len(rs) if rs else 0.0,
                speedup=(baseline_total / total) if total > 0 else float("inf"),
            )
        )
    return out


def bench_table(aggregates: Sequence[ModeAggregate]) -> str:
    header = (
        f"{'mode':<16} {'safe':>5} {'unsafe':>7} {'unsolved':>9} "
        f"{'total PAR2':>11} {'avg PAR2':>9} {'speedup':>8}"
    )
    lines = [header, "-" * len(header)]
    for a in aggregates:
        lines.append(
            f"{a.mode:<16} {a.solved_safe:>5} {a.solved_unsafe:>7} {a.unsolved:>9} "
            f"{a.total_par2:>11.3f} {a.avg_par2:>9.3f} {a.speedup:>8.2f}"
        )
    return "\n".join(lines) + "\n"
