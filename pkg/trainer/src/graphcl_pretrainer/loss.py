"""Normalized-temperature cross-entropy (NT-Xent) over paired embeddings.

The batch is the concatenation of the two view embeddings, ``2m`` rows for
``m`` aligned pairs.  Every row is an anchor; its positive is the same
latch's row from the other view.  For anchor ``i`` the loss term is

    -log( exp(cos(z_i, z_pos) / tau) / sum_{j != i} exp(cos(z_i, z_j) / tau) )

where the denominator runs over every other element of the batch, the
positive included.  The reported loss is the mean over all ``2m`` anchors.
Because the numerator is one of the denominator's terms, each term — and so
the mean — is always >= 0.
"""

from __future__ import annotations

import torch


def nt_xent_terms(z1: torch.Tensor, z2: torch.Tensor, tau: float = 0.5) -> torch.Tensor:
    """Per-anchor NT-Xent terms, shape (2m,); anchors are [z1 rows, z2 rows]."""
    if tau <= 0.0:
        raise ValueError(f"temperature must be positive, got {tau}")
    if z1.ndim != 2 or z1.shape != z2.shape:
        raise ValueError(f"need matching (m, d) embeddings, got {tuple(z1.shape)} and {tuple(z2.shape)}")
    m = z1.shape[0]
    if m < 1:
        raise ValueError("empty batch")

    z = torch.cat([z1, z2], dim=0)
    norms = torch.linalg.vector_norm(z, dim=1)
    if bool((norms == 0).any()):
        bad = int(torch.nonzero(norms == 0)[0])
        raise ValueError(f"zero-norm embedding at batch row {bad}; cosine similarity is undefined")
    zn = z / norms.unsqueeze(1)

    logits = (zn @ zn.T) / tau
    n = 2 * m
    eye = torch.eye(n, dtype=torch.bool, device=z.device)
    logits = logits.masked_fill(eye, float("-inf"))

    pos_index = torch.arange(n, device=z.device)
    pos_index = torch.where(pos_index < m, pos_index + m, pos_index - m)
    pos_logit = logits[torch.arange(n, device=z.device), pos_index]
    denom = torch.logsumexp(logits, dim=1)
    return denom - pos_logit


def nt_xent(z1: torch.Tensor, z2: torch.Tensor, tau: float = 0.5) -> torch.Tensor:
    """Mean NT-Xent loss over all anchors of the paired batch."""
    return nt_xent_terms(z1, z2, tau).mean()
