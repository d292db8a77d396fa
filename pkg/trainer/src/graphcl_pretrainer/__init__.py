"""Contrastive pre-training for the model checker's circuit-graph encoder.

The trainer consumes the checker's plain-text graph exports, learns encoder
weights with a two-view NT-Xent objective, and writes them in the checker's
weights container so ``pdrkit embed --encoder-weights`` can load them
directly.  It shares file formats with the checker but no code.
"""

from .augment import GraphView, ViewPair, make_views
from .export import export_weights, load_weights, read_container, write_container
from .graphs import CircuitGraph, GraphFormatError, load_corpus, load_graph, parse_graph
from .loss import nt_xent, nt_xent_terms
from .model import GinEncoder, graph_tensors
from .train import (
    ContrastConfig,
    TrainResult,
    eval_loss,
    pair_similarity_stats,
    train_encoder,
)

__all__ = [
    "CircuitGraph",
    "ContrastConfig",
    "GinEncoder",
    "GraphFormatError",
    "GraphView",
    "TrainResult",
    "ViewPair",
    "eval_loss",
    "export_weights",
    "graph_tensors",
    "load_corpus",
    "load_graph",
    "load_weights",
    "make_views",
    "nt_xent",
    "nt_xent_terms",
    "pair_similarity_stats",
    "parse_graph",
    "read_container",
    "train_encoder",
    "write_container",
]
