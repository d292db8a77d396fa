"""Training loop: the contrastive-learning acceptance check plus mechanics."""

import numpy as np
import pytest
import torch

from graphcl_pretrainer import (
    ContrastConfig,
    export_weights,
    pair_similarity_stats,
    train_encoder,
)
from graphcl_pretrainer.train import _epoch_chunks

B1_CFG = ContrastConfig(tau=0.2, p_e=0.1, p_f=0.1, batch=8, epochs=100, seed=2, lr=3e-3)


def test_B1_contrastive_pretraining(corpus):
    """Loss halves within 100 epochs; positives beat negatives by >= 0.2."""
    result = train_encoder(corpus.graphs, B1_CFG)
    curve = result.curve
    assert len(curve) == B1_CFG.epochs + 1
    assert all(np.isfinite(curve))
    initial = curve[0]
    best = min(curve)
    assert best <= 0.5 * initial, (
        f"loss only reached {best:.4f} from {initial:.4f} "
        f"({(initial - best) / initial:.1%} drop, need >= 50%)")

    pos, neg = pair_similarity_stats(result.model, corpus.graphs, B1_CFG)
    assert pos - neg >= 0.2, f"positive/negative cosine gap {pos - neg:.4f} < 0.2"
    print(
        f"\nB1 PASS: loss {initial:.4f} -> {best:.4f} "
        f"({(initial - best) / initial:.1%} drop) within {B1_CFG.epochs} epochs on "
        f"{len(corpus.graphs)} circuits; mean cosine positives {pos:.4f} vs "
        f"negatives {neg:.4f} (gap {pos - neg:.4f} >= 0.2)")


def test_training_is_deterministic(corpus):
    cfg = ContrastConfig(epochs=4, seed=11, batch=8)
    a = export_weights(train_encoder(corpus.graphs, cfg).model)
    b = export_weights(train_encoder(corpus.graphs, cfg).model)
    assert a == b
    c = export_weights(train_encoder(corpus.graphs, ContrastConfig(epochs=4, seed=12, batch=8)).model)
    assert a != c


def test_curve_has_pretraining_point(corpus):
    cfg = ContrastConfig(epochs=0, seed=0)
    result = train_encoder(corpus.graphs, cfg)
    assert len(result.curve) == 1 and np.isfinite(result.curve[0])


def test_epoch_chunks_partition_the_corpus(corpus):
    order = np.arange(len(corpus.graphs))
    chunks = _epoch_chunks(order, corpus.graphs, batch=8)
    flat = [c for chunk in chunks for c in chunk]
    assert sorted(flat) == list(range(len(corpus.graphs)))
    # a batch bigger than the corpus still packs at least 2 anchors per step
    assert all(sum(corpus.graphs[c].n_latches for c in chunk) >= 2 for chunk in chunks)
    # negatives span circuits: with batch=8 some step holds several circuits
    assert any(len(chunk) > 1 for chunk in chunks)


def test_config_validation(corpus):
    with pytest.raises(ValueError, match="tau"):
        train_encoder(corpus.graphs, ContrastConfig(tau=0.0))
    with pytest.raises(ValueError, match="p_e"):
        train_encoder(corpus.graphs, ContrastConfig(p_e=1.0))
    with pytest.raises(ValueError, match="p_f"):
        train_encoder(corpus.graphs, ContrastConfig(p_f=1.0))
    with pytest.raises(ValueError, match="batch"):
        train_encoder(corpus.graphs, ContrastConfig(batch=1))
    with pytest.raises(ValueError, match="epochs"):
        train_encoder(corpus.graphs, ContrastConfig(epochs=-1))
    with pytest.raises(ValueError, match="empty"):
        train_encoder([], ContrastConfig())


def test_trained_model_embeds_every_corpus_graph(corpus):
    result = train_encoder(corpus.graphs, ContrastConfig(epochs=2, seed=0, batch=8))
    for g in corpus.graphs:
        with torch.no_grad():
            z = result.model.embed_graph(g)
        assert z.shape == (g.n_latches, 32)
        assert torch.isfinite(z).all()
