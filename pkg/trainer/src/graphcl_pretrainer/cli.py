"""Command-line entry point: train an encoder on exported circuit graphs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import export_weights
from .graphs import GraphFormatError, load_corpus
from .train import ContrastConfig, pair_similarity_stats, train_encoder

EXIT_OK = 0
EXIT_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="graphcl-pretrain",
        description="Contrastively pre-train the circuit-graph encoder and "
        "export weights the model checker's embedder can load.",
        allow_abbrev=False,
    )
    p.add_argument("graphs", nargs="+",
                   help="graph export files, or directories of *.txt graph files")
    p.add_argument("--out", required=True, help="path for the exported weights bundle")
    p.add_argument("--curve", help="optional path to write the per-epoch loss curve")
    p.add_argument("--tau", type=float, default=0.5, help="softmax temperature")
    p.add_argument("--p-edge", type=float, default=0.1, help="per-edge drop probability")
    p.add_argument("--p-feat", type=float, default=0.1,
                   help="per-feature-dimension zeroing probability")
    p.add_argument("--batch", type=int, default=256, help="latch anchors per step")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--dim", type=int, default=32, help="embedding width")
    p.add_argument("--layers", type=int, default=3, help="message-passing layers")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = ContrastConfig(
        tau=args.tau, p_e=args.p_edge, p_f=args.p_feat, batch=args.batch,
        epochs=args.epochs, seed=args.seed, lr=args.lr, dim=args.dim,
        n_layers=args.layers,
    )
    try:
        cfg.validate()
        corpus = load_corpus(args.graphs)
        print(f"loaded {len(corpus)} graphs, "
              f"{sum(g.n_latches for g in corpus)} latch anchors")
        result = train_encoder(corpus, cfg)
        pos, neg = pair_similarity_stats(result.model, corpus, cfg)
        Path(args.out).write_bytes(export_weights(result.model))
        if args.curve:
            Path(args.curve).write_text(
                "".join(f"{i} {v:.6f}\n" for i, v in enumerate(result.curve)))
        print(f"loss {result.curve[0]:.4f} -> {result.curve[-1]:.4f} "
              f"over {cfg.epochs} epochs")
        print(f"mean cosine: positives {pos:.4f}, negatives {neg:.4f}")
        print(f"wrote {args.out}")
        return EXIT_OK
    except (GraphFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
