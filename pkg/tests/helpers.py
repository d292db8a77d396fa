"""Shared test infrastructure: AIG construction and an explicit-state oracle.

The BFS oracle enumerates every reachable (state, input) pair of a small
circuit, so it decides safety by brute force, independently of any solver or
frame reasoning.  It is deliberately simple and slow; keep circuits handed to
it at or below ~10 latches and ~4 inputs.
"""

from __future__ import annotations

import itertools
from collections import deque

from pdrkit import aiger
from pdrkit.aiger import Aig, Latch, TransitionSystem
from pdrkit.pdr import Trace
from pdrkit.rng import XorShift64


class AigBuilder:
    """Two-phase AIG builder: declare inputs/latches, wire logic, then build."""

    def __init__(self) -> None:
        self._next_var = 1
        self._inputs: list[int] = []
        self._latch_lits: list[int] = []
        self._latch_next: dict[int, int] = {}
        self._latch_init: dict[int, int | None] = {}
        self._ands: list[tuple[int, int, int]] = []
        self._outputs: list[int] = []
        self._bads: list[int] = []

    def _fresh(self) -> int:
        lit = 2 * self._next_var
        self._next_var += 1
        return lit

    def input(self) -> int:
        lit = self._fresh()
        self._inputs.append(lit)
        return lit

    def latch(self, init: int | None = 0) -> int:
        lit = self._fresh()
        self._latch_lits.append(lit)
        self._latch_init[lit] = init
        return lit

    def set_next(self, latch_lit: int, next_lit: int) -> None:
        self._latch_next[latch_lit] = next_lit

    def AND(self, a: int, b: int) -> int:
        lit = self._fresh()
        self._ands.append((lit, a, b))
        return lit

    @staticmethod
    def NOT(a: int) -> int:
        return a ^ 1

    def OR(self, a: int, b: int) -> int:
        return self.NOT(self.AND(self.NOT(a), self.NOT(b)))

    def XOR(self, a: int, b: int) -> int:
        return self.OR(self.AND(a, self.NOT(b)), self.AND(self.NOT(a), b))

    def bad(self, lit: int) -> None:
        self._bads.append(lit)

    def output(self, lit: int) -> None:
        self._outputs.append(lit)

    def build(self) -> Aig:
        latches = []
        for lit in self._latch_lits:
            if lit not in self._latch_next:
                raise ValueError(f"latch {lit} has no next function")
            latches.append(
                Latch(lit=lit, next=self._latch_next[lit], init=self._latch_init[lit])
            )
        return Aig(
            max_var=self._next_var - 1,
            inputs=tuple(self._inputs),
            latches=tuple(latches),
            outputs=tuple(self._outputs),
            bads=tuple(self._bads),
            ands=tuple(self._ands),
        )


def random_aig(
    seed: int,
    n_inputs: int = 2,
    n_latches: int = 4,
    n_ands: int = 10,
    init_modes: tuple = (0, 0, 0, 1, None),
) -> Aig:
    """Random well-formed AIG with a bad literal drawn from the built logic."""
    rng = XorShift64(seed)
    b = AigBuilder()
    pool = [0, 1]  # constant false/true always available
    for _ in range(n_inputs):
        pool.append(b.input())
    latch_lits = []
    for _ in range(n_latches):
        lit = b.latch(init=init_modes[rng.next_below(len(init_modes))])
        latch_lits.append(lit)
        pool.append(lit)

    def pick() -> int:
        lit = pool[rng.next_below(len(pool))]
        return lit ^ 1 if rng.next_bit() else lit

    for _ in range(n_ands):
        pool.append(b.AND(pick(), pick()))
    for lit in latch_lits:
        b.set_next(lit, pick())
    b.bad(pick())
    return b.build()


def frozen_chain_aig(n: int) -> Aig:
    """Chain of n latches: the first feeds back to itself, each later latch
    copies its predecessor; all start at 0 and the bad literal is the last
    latch.  Safe, with {each latch is 0} as a one-clause-per-latch invariant."""
    b = AigBuilder()
    lits = [b.latch(init=0) for _ in range(n)]
    b.set_next(lits[0], lits[0])
    for i in range(1, n):
        b.set_next(lits[i], lits[i - 1])
    b.bad(lits[-1])
    return b.build()


def ts_of(aig: Aig, bad_index: int = 0) -> TransitionSystem:
    return aiger.to_transition_system(aig, bad_index=bad_index)


def enumerate_init_states(ts: TransitionSystem) -> list[tuple[bool, ...]]:
    """All initial latch valuations (uninitialized latches range over both)."""
    fixed = {abs(l): (l > 0) for l in ts.init_cube.lits}
    free = [v for v in ts.latch_vars if v not in fixed]
    states = []
    for combo in itertools.product([False, True], repeat=len(free)):
        vals = dict(fixed)
        vals.update(zip(free, combo))
        states.append(tuple(vals[v] for v in ts.latch_vars))
    return states


def bfs_check(ts: TransitionSystem, max_states: int = 1 << 20):
    """Explicit-state reachability: (True, None) if safe, else (False, trace).

    The returned trace is shortest (in transitions) and replayable.
    """
    input_vars = ts.aig.input_vars()
    input_vecs = list(itertools.product([False, True], repeat=len(input_vars)))
    start = enumerate_init_states(ts)
    parent: dict[tuple, tuple | None] = {}
    queue: deque = deque()
    for s in start:
        if s not in parent:
            parent[s] = None
            queue.append(s)
    while queue:
        s = queue.popleft()
        state = dict(zip(ts.latch_vars, s))
        for vec in input_vecs:
            nxt, bad = aiger.step(ts, state, dict(zip(input_vars, vec)))
            if bad:
                chain = [vec]
                cur = s
                while parent[cur] is not None:
                    prev, prev_vec = parent[cur]
                    chain.append(prev_vec)
                    cur = prev
                chain.reverse()
                return False, Trace(initial=cur, inputs=tuple(chain))
            t = tuple(nxt[v] for v in ts.latch_vars)
            if t not in parent:
                if len(parent) >= max_states:
                    raise RuntimeError("state space too large for BFS oracle")
                parent[t] = (s, vec)
                queue.append(t)
    return True, None
