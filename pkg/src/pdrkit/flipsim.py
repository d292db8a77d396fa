"""Bit-parallel random simulation measuring per-latch signal flip rates.

The circuit is simulated for T cycles in 64 parallel lanes: every signal is a
64-bit word whose bit j is that signal's boolean value in lane j.  A latch's
flip rate is the fraction of (lane, cycle) pairs at which its value differs
from the previous cycle:

    rate(l) = flips(l) / (64 * T)

so rates are exact multiples of 1/(64*T) in [0, 1].  Randomness comes from one
master 64-bit generator: first one word per uninitialized latch (declaration
order) for the lane-wise initial values, then, for every cycle, one word per
input (declaration order).  Initialized latches start at their reset value in
all lanes.  A scalar simulator that extracts bit j of the same word stream
reproduces lane j exactly; fixing (circuit, T, seed) fixes the result.
"""

from __future__ import annotations

from dataclasses import dataclass

from .aiger import Aig
from .rng import MASK64, XorShift64


@dataclass(frozen=True)
class FlipRateVector:
    latch_vars: tuple[int, ...]
    rates: tuple[float, ...]
    cycles: int
    seed: int

    def rate_of(self, latch_var: int) -> float:
        return self.rates[self.latch_vars.index(latch_var)]


def compute_flip_rates(aig: Aig, cycles: int = 10000, seed: int = 0) -> FlipRateVector:
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    rng = XorShift64(seed)
    latch_vars = tuple(l.lit >> 1 for l in aig.latches)
    input_vars = [lit >> 1 for lit in aig.inputs]
    ands = sorted(aig.ands)
    next_fns = [l.next for l in aig.latches]

    words: dict[int, int] = {0: 0}
    state = []
    for latch in aig.latches:
        if latch.init is None:
            state.append(rng.next_u64())
        elif latch.init:
            state.append(MASK64)
        else:
            state.append(0)

    def lit_word(lit: int) -> int:
        w = words[lit >> 1]
        return w ^ MASK64 if lit & 1 else w

    flips = [0] * len(state)
    for _ in range(cycles):
        for v in input_vars:
            words[v] = rng.next_u64()
        for v, w in zip(latch_vars, state):
            words[v] = w
        for lhs, rhs0, rhs1 in ands:
            words[lhs >> 1] = lit_word(rhs0) & lit_word(rhs1)
        for i, nf in enumerate(next_fns):
            nxt = lit_word(nf)
            flips[i] += (nxt ^ state[i]).bit_count()
            state[i] = nxt
    denom = 64 * cycles
    return FlipRateVector(
        latch_vars=latch_vars,
        rates=tuple(f / denom for f in flips),
        cycles=cycles,
        seed=seed,
    )


def flip_rates_csv(v: FlipRateVector) -> str:
    """CSV dump: 1-based latch ordinal and rate, one line per latch."""
    lines = ["latch,rate"]
    for i, r in enumerate(v.rates, start=1):
        lines.append(f"{i},{r:.6f}")
    return "\n".join(lines) + "\n"
