"""View augmentation: identity/extreme cases, statistics, determinism."""

import numpy as np
import pytest

from graphcl_pretrainer import ContrastConfig, make_views
from graphcl_pretrainer.graphs import CircuitGraph


def _synthetic(n_nodes: int, n_edges: int, seed: int = 0) -> CircuitGraph:
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n_nodes, n_edges)
    dst = rng.integers(0, n_nodes, n_edges)
    return CircuitGraph(
        name="synthetic",
        feats=rng.random((n_nodes, 9)).astype(np.float32),
        edge_src=src.astype(np.int64),
        edge_dst=dst.astype(np.int64),
        edge_inv=rng.random(n_edges) < 0.3,
        latch_nodes=np.arange(min(4, n_nodes), dtype=np.int64),
        kinds=tuple("latch" if i < 4 else "and" for i in range(n_nodes)),
        property_node=None,
    )


def test_zero_probabilities_give_identity():
    g = _synthetic(30, 80)
    pair = make_views(g, ContrastConfig(p_e=0.0, p_f=0.0), seed=5)
    for view in (pair.first, pair.second):
        assert np.array_equal(view.feats, g.feats)
        assert np.array_equal(view.edge_src, g.edge_src)
        assert np.array_equal(view.edge_dst, g.edge_dst)
        assert np.array_equal(view.edge_inv, g.edge_inv)


def test_full_feature_drop_zeroes_everything():
    g = _synthetic(30, 80)
    pair = make_views(g, ContrastConfig(p_e=0.0, p_f=1.0), seed=5)
    assert not pair.first.feats.any()
    assert not pair.second.feats.any()


def test_latch_nodes_preserved_across_views():
    g = _synthetic(30, 80)
    pair = make_views(g, ContrastConfig(), seed=9)
    assert np.array_equal(pair.latch_nodes, g.latch_nodes)
    assert pair.source is g


def test_deterministic_given_seed():
    g = _synthetic(40, 200)
    cfg = ContrastConfig()
    a = make_views(g, cfg, seed=123)
    b = make_views(g, cfg, seed=123)
    assert np.array_equal(a.first.edge_src, b.first.edge_src)
    assert np.array_equal(a.first.feats, b.first.feats)
    assert np.array_equal(a.second.edge_src, b.second.edge_src)
    # the two views of one pair are sampled independently
    assert len(a.first.edge_src) != len(a.second.edge_src) or not np.array_equal(
        a.first.edge_src, a.second.edge_src)


def test_different_seeds_differ():
    g = _synthetic(40, 200)
    cfg = ContrastConfig()
    a = make_views(g, cfg, seed=1)
    b = make_views(g, cfg, seed=2)
    assert len(a.first.edge_src) != len(b.first.edge_src) or not np.array_equal(
        a.first.edge_src, b.first.edge_src)


def test_edge_drop_rate_is_binomial():
    g = _synthetic(50, 1000)
    cfg = ContrastConfig(p_e=0.1, p_f=0.0)
    dropped = []
    for seed in range(100):
        pair = make_views(g, cfg, seed=seed)
        dropped.append(1000 - len(pair.first.edge_src))
        dropped.append(1000 - len(pair.second.edge_src))
    # each draw is Binomial(1000, 0.1): mean 100, sd ~9.5
    assert all(60 <= d <= 140 for d in dropped)
    assert 95.0 <= float(np.mean(dropped)) <= 105.0


def test_probability_range_validated():
    g = _synthetic(10, 20)
    with pytest.raises(ValueError, match="p_e"):
        make_views(g, ContrastConfig(p_e=1.5), seed=0)
    with pytest.raises(ValueError, match="p_f"):
        make_views(g, ContrastConfig(p_f=-0.1), seed=0)
