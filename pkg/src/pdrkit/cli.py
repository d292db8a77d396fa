"""Command-line front end.

Subcommands: preprocess, sample-ctis, embed, score, sanity, oracle-labels,
train-scorer, check, bench.  Exit codes: 0 = success, 1 = partial success
(some items failed, rejected, or undecided), 2 = failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import formats, pipeline
from .aiger import AigerError, parse, to_transition_system
from .cti import sample_ctis
from .embed import export_embedding_table, load_embedding_table
from .pipeline import MODES, PipelineError, RunConfig
from .sanity import SanityChecker, filter_candidates
from .scorer import TrainConfig, export_scorer_weights, load_scorer_weights

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FAILURE = 2


def _aig_files(target: Path) -> list[Path]:
    if target.is_dir():
        return sorted(
            p for p in target.iterdir() if p.suffix in (".aag", ".aig") and p.is_file()
        )
    return [target]


def _common_flags(p: argparse.ArgumentParser, *names: str) -> None:
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0, help="deterministic seed")
    if "timeout" in names:
        p.add_argument("--timeout", type=float, default=60.0, help="seconds per check")
    if "mode" in names:
        p.add_argument("--mode", choices=MODES, default="vanilla")
    if "theta" in names:
        p.add_argument("--theta", type=float, default=0.5, help="keep threshold")
        p.add_argument("--decay", type=float, default=0.9, help="threshold decay")
        p.add_argument("--floor", type=float, default=0.05, help="threshold floor")
    if "weights" in names:
        p.add_argument("--weights", type=Path, default=None, help="scorer weights file")
        p.add_argument(
            "--encoder-weights", type=Path, default=None, help="graph encoder weights"
        )
    if "out" in names:
        p.add_argument("--out", type=Path, required=True, help="output file/directory")
    if "ctis" in names:
        p.add_argument("--ctis", type=int, default=256, help="CTI samples per circuit")
    if "cycles" in names:
        p.add_argument("--cycles", type=int, default=10000, help="simulation cycles")
    if "dim" in names:
        p.add_argument("--dim", type=int, default=32, help="embedding width")


def _build_parser() -> argparse.ArgumentParser:
    # Abbreviation is off everywhere: "--mode" must not silently match
    # bench's "--modes" (a store action would keep only the last value).
    top = argparse.ArgumentParser(
        prog="pdrkit",
        description="Model-check AIGER circuits with optional learned clause guidance.",
        allow_abbrev=False,
    )
    subparsers = top.add_subparsers(dest="subcommand", required=True)

    class _Sub:
        def add_parser(self, name: str, **kw):
            return subparsers.add_parser(name, allow_abbrev=False, **kw)

    sub = _Sub()

    p = sub.add_parser("preprocess", help="build per-circuit artifacts (cached)")
    p.add_argument("circuits", type=Path, help="AIGER file or directory")
    _common_flags(p, "seed", "out", "ctis", "cycles", "dim", "weights")

    p = sub.add_parser("sample-ctis", help="sample and minimize CTI cubes")
    p.add_argument("circuit", type=Path)
    _common_flags(p, "seed", "out", "ctis")

    p = sub.add_parser("embed", help="embed latches (encoder weights or fallback)")
    p.add_argument("circuit", type=Path)
    _common_flags(p, "seed", "out", "cycles", "dim", "weights")
    p.add_argument("--text", action="store_true", help="write text tensors")

    p = sub.add_parser("score", help="score pooled CTIs and assemble candidates")
    p.add_argument("circuit", type=Path)
    p.add_argument("--pool", type=Path, required=True, help="CTI pool file")
    p.add_argument("--table", type=Path, required=True, help="embedding table file")
    _common_flags(p, "weights", "theta", "out")

    p = sub.add_parser("sanity", help="filter a clause file through both checks")
    p.add_argument("circuit", type=Path)
    p.add_argument("--clauses", type=Path, required=True)
    _common_flags(p, "out")

    p = sub.add_parser("oracle-labels", help="label pools from proven-safe circuits")
    p.add_argument("circuits", type=Path, help="AIGER file or directory")
    p.add_argument("--artifacts", type=Path, required=True, help="preprocess output dir")
    _common_flags(p, "seed", "timeout", "ctis")

    p = sub.add_parser("train-scorer", help="train the literal scorer on labeled pools")
    p.add_argument("artifacts", type=Path, nargs="+", help="labeled artifact dirs")
    _common_flags(p, "seed", "theta", "out")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--text", action="store_true", help="write text tensors")

    p = sub.add_parser("check", help="model-check one circuit")
    p.add_argument("circuit", type=Path)
    _common_flags(p, "seed", "timeout", "mode", "theta", "weights")
    p.add_argument("--sideload", type=Path, default=None, help="clause file to inject")
    p.add_argument("--artifacts", type=Path, default=None, help="artifact dir to reuse")
    p.add_argument("--out", type=Path, default=None, help="artifact output directory")
    p.add_argument("--ctis", type=int, default=256)
    p.add_argument("--cycles", type=int, default=10000)
    p.add_argument("--dim", type=int, default=32)

    p = sub.add_parser("bench", help="PAR2 benchmark over a suite")
    p.add_argument("circuits", type=Path, help="directory of AIGER files")
    _common_flags(p, "seed", "timeout", "theta", "weights")
    p.add_argument(
        "--out",
        type=Path,
        required=True,
        help="output directory for bench.csv and bench.txt",
    )
    p.add_argument(
        "--modes",
        default="vanilla",
        help="comma-separated subset of: " + ", ".join(MODES),
    )
    p.add_argument("--artifacts", type=Path, default=None)
    p.add_argument("--jobs", type=int, default=None, help="parallel workers")
    p.add_argument("--ctis", type=int, default=256)
    p.add_argument("--cycles", type=int, default=10000)
    p.add_argument("--dim", type=int, default=32)
    return top


def _config_from(args: argparse.Namespace, mode: str = "vanilla") -> RunConfig:
    return RunConfig(
        mode=mode,
        seed=getattr(args, "seed", 0),
        timeout_s=getattr(args, "timeout", 60.0),
        theta=getattr(args, "theta", 0.5),
        decay=getattr(args, "decay", 0.9),
        floor=getattr(args, "floor", 0.05),
        n_ctis=getattr(args, "ctis", 256),
        sim_cycles=getattr(args, "cycles", 10000),
        embed_dim=getattr(args, "dim", 32),
        encoder_weights_path=(
            str(args.encoder_weights)
            if getattr(args, "encoder_weights", None) is not None
            else None
        ),
        scorer_weights_path=(
            str(args.weights) if getattr(args, "weights", None) is not None else None
        ),
    )


# ------------------------------------------------------------------ commands


def _cmd_preprocess(args: argparse.Namespace) -> int:
    files = _aig_files(args.circuits)
    if not files:
        print("no AIGER files found", file=sys.stderr)
        return EXIT_FAILURE
    cfg = _config_from(args)
    results, hits = pipeline.run_preprocess(files, args.out, cfg)
    failed = 0
    for r in results:
        if r.status == "failed":
            failed += 1
            print(f"skip {r.path.name}: {r.message}", file=sys.stderr)
        else:
            print(f"{r.status} {r.path.name} -> {r.artifact_dir}")
    print(f"processed {len(results)} file(s), cache hits: {hits}, failed: {failed}")
    if failed == len(results):
        return EXIT_FAILURE
    return EXIT_PARTIAL if failed else EXIT_OK


def _cmd_sample_ctis(args: argparse.Namespace) -> int:
    ts = to_transition_system(parse(args.circuit.read_bytes()))
    samples = sample_ctis(ts, n=args.ctis, seed=args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(formats.write_cti_pool(ts, samples))
    print(f"sampled {len(samples)} minimized CTI cube(s) -> {args.out}")
    return EXIT_OK


def _cmd_embed(args: argparse.Namespace) -> int:
    cfg = _config_from(args)
    aig = parse(args.circuit.read_bytes())
    table = pipeline.embed_circuit(aig, cfg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(export_embedding_table(table, binary=not args.text))
    print(
        f"embedded {len(table.latch_vars)} latch(es) "
        f"({table.provenance}, dim={table.dim}) -> {args.out}"
    )
    return EXIT_OK


def _cmd_score(args: argparse.Namespace) -> int:
    if args.weights is None:
        print("score requires --weights (scorer weights file)", file=sys.stderr)
        return EXIT_FAILURE
    cfg = _config_from(args)
    ts = to_transition_system(parse(args.circuit.read_bytes()))
    pool = formats.read_cti_pool(ts, args.pool.read_text())
    table = load_embedding_table(args.table.read_bytes())
    if table.augmented is None:
        print("embedding table lacks the flip-rate column", file=sys.stderr)
        return EXIT_FAILURE
    scorer_w = load_scorer_weights(args.weights.read_bytes())
    clauses = pipeline.scored_candidates([e.cube for e in pool], table, scorer_w, cfg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(
        formats.write_clauses(ts, clauses, ["assembled candidates, pre-sanity"])
    )
    print(f"assembled {len(clauses)} candidate clause(s) from {len(pool)} CTI(s)")
    return EXIT_OK


def _cmd_sanity(args: argparse.Namespace) -> int:
    ts = to_transition_system(parse(args.circuit.read_bytes()))
    clauses = formats.read_clauses(ts, args.clauses.read_text())
    checker = SanityChecker(ts)
    accepted, verdicts = filter_candidates(ts, clauses, checker)
    for v in verdicts:
        if v.accepted:
            status = "accepted"
        elif not v.initiation:
            status = "rejected (fails in an initial state)"
        else:
            status = "rejected (fails after one step)"
        print(f"{formats.clause_ordinals(ts, v.clause)}: {status}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(
        formats.write_clauses(ts, accepted, ["sanity-checked accepted clauses"])
    )
    rejected = sum(1 for v in verdicts if not v.accepted)
    print(
        f"accepted {len(accepted)} of {len(verdicts)} distinct clause(s) "
        f"({rejected} rejected) -> {args.out}"
    )
    return EXIT_PARTIAL if rejected else EXIT_OK


def _cmd_oracle_labels(args: argparse.Namespace) -> int:
    files = _aig_files(args.circuits)
    if not files:
        print("no AIGER files found", file=sys.stderr)
        return EXIT_FAILURE
    cfg = _config_from(args)
    results = pipeline.run_oracle_labels(files, args.artifacts, cfg)
    labeled = 0
    for r in results:
        if r.status == "labeled":
            labeled += 1
            print(f"labeled {r.path.name}: {r.n_samples} sample(s)")
        elif r.status == "failed":
            print(f"failed {r.path.name}: {r.message}", file=sys.stderr)
        else:
            print(f"{r.status} {r.path.name}")
    print(f"labeled {labeled} of {len(results)} circuit(s)")
    if labeled:
        return EXIT_OK
    return EXIT_PARTIAL if results else EXIT_FAILURE


def _cmd_train_scorer(args: argparse.Namespace) -> int:
    tc = TrainConfig(
        theta=args.theta,
        decay=args.decay,
        floor=args.floor,
        lr=args.lr,
        batch=args.batch,
        epochs=args.epochs,
        seed=args.seed,
        hidden=args.hidden,
    )
    weights, curve, n = pipeline.run_train_scorer(args.artifacts, tc)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(export_scorer_weights(weights, binary=not args.text))
    print(
        f"trained on {n} labeled CTI(s); loss {curve[0]:.4f} -> {curve[-1]:.4f} "
        f"over {len(curve) - 1} epoch(s) -> {args.out}"
    )
    return EXIT_OK


def _cmd_check(args: argparse.Namespace) -> int:
    cfg = _config_from(args, mode=args.mode)
    aig = parse(args.circuit.read_bytes())
    ts = to_transition_system(aig)
    sideload = []
    if args.sideload is not None:
        sideload = formats.read_clauses(ts, args.sideload.read_text())
    outcome = pipeline.run_check(
        aig, cfg, artifact_dir=args.artifacts, sideload=sideload
    )
    verdict = pipeline.verdict_str(outcome.result)
    print(verdict)
    s = outcome.stats
    print(
        f"mode={cfg.mode} seed={cfg.seed} wall_s={outcome.wall_s:.3f} "
        f"sat_queries={s.sat_queries} frames={s.frames} "
        f"clauses_learned={s.clauses_learned} obligations={s.obligations} "
        f"propagations={s.propagations} "
        f"sideload_offered={s.sideload_offered} sideload_accepted={s.sideload_accepted}"
    )
    if args.out is not None:
        written = pipeline.write_check_artifacts(ts, outcome, cfg, args.out)
        for p in written:
            print(f"wrote {p}")
    return EXIT_OK if verdict in ("SAFE", "UNSAFE") else EXIT_PARTIAL


def _cmd_bench(args: argparse.Namespace) -> int:
    files = _aig_files(args.circuits)
    if not files:
        print("no AIGER files found", file=sys.stderr)
        return EXIT_FAILURE
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    cfg = _config_from(args)
    rows, errors = pipeline.run_bench(
        files, modes, cfg, artifacts_root=args.artifacts, jobs=args.jobs
    )
    csv_text = pipeline.bench_csv(rows)
    table_text = pipeline.bench_table(pipeline.aggregate_bench(rows, modes))
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "bench.csv").write_text(csv_text)
    (args.out / "bench.txt").write_text(table_text)
    print(table_text, end="")
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    print(f"wrote {args.out / 'bench.csv'} and {args.out / 'bench.txt'}")
    if not rows:
        return EXIT_FAILURE
    return EXIT_PARTIAL if errors else EXIT_OK


_HANDLERS = {
    "preprocess": _cmd_preprocess,
    "sample-ctis": _cmd_sample_ctis,
    "embed": _cmd_embed,
    "score": _cmd_score,
    "sanity": _cmd_sanity,
    "oracle-labels": _cmd_oracle_labels,
    "train-scorer": _cmd_train_scorer,
    "check": _cmd_check,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.subcommand](args)
    except (AigerError, formats.FormatError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
