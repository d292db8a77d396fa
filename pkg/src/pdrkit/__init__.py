"""Hardware model-checking toolkit: IC3/PDR with clause side-loading plus a
learned lemma-prediction pipeline (circuit embeddings, flip-rate features,
permutation-invariant literal scoring, SAT-based clause sanity checking)."""

__version__ = "0.1.0"
