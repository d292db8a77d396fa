"""Counterexample-to-induction (CTI) sampling with UNSAT-core minimization.

A CTI is a state that satisfies the property but can violate it after one
step: a model of P and T and not-P'.  The sampler enumerates distinct models,
blocking each full state so later models differ, and minimizes every witness
to a sub-cube by input-fixed core extraction: with the witness's inputs frozen
(both the current step's and the next step's, since the property cone may read
inputs), the query

    full_state and inputs and T and P'

is unsatisfiable, and the core projected onto state literals is a cube all of
whose states still force a property violation under those inputs.

Samples are deduplicated on minimized cubes.  Every 64 accepted samples the
solver is rebuilt with a reshuffled variable order derived from the seed, so
long runs keep producing structurally diverse models.  Fixing the seed fixes
the whole sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .aiger import TransitionSystem
from .cubes import Cube
from .rng import MASK64, splitmix64
from .sat import CURRENT, NEXT, SolverContext

_GOLDEN = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class CtiSample:
    """One minimized CTI.

    ``cube`` is a sub-cube of ``full_state``; under ``inputs`` (current step)
    and ``next_inputs`` (next step), every state in ``cube`` has all its
    successors violate the property.
    """

    cube: Cube
    inputs: tuple[bool, ...]
    next_inputs: tuple[bool, ...]
    full_state: Cube


class _Minimizer:
    """Dedicated context for the core query (kept free of sampling units)."""

    def __init__(self, ts: TransitionSystem):
        self.ts = ts
        self.ctx = SolverContext(ts)
        self.bad_next = self.ctx.encode_cone(ts.bad, NEXT)
        self.latch_cur = {v: self.ctx.latch_lit(v, CURRENT) for v in ts.latch_vars}
        self._input_vars = ts.aig.input_vars()

    def minimize(
        self,
        full_state: Cube,
        inputs: Sequence[bool],
        next_inputs: Sequence[bool] = (),
    ) -> Cube:
        assume = [-self.bad_next]  # the property holds after the step
        for lit in full_state:
            cnf = self.latch_cur[abs(lit)]
            assume.append(cnf if lit > 0 else -cnf)
        for frame, bits in ((CURRENT, inputs), (NEXT, next_inputs)):
            table = self.ctx.maps[frame]
            for v, bit in zip(self._input_vars, bits):
                if v in table:
                    assume.append(table[v] if bit else -table[v])
        res = self.ctx.solve(assume)
        if res.sat:
            raise RuntimeError(
                "CTI minimization query unexpectedly SAT: the witness is "
                "inconsistent with the transition relation"
            )
        # Project the core onto state variables, taking polarities from the
        # witnessed state: the property cone may alias a latch's CNF variable
        # (e.g. when the bad literal reduces to a latch's next function), so a
        # core literal's own sign can reflect the property assumption instead
        # of the state assumption on the same variable.
        cnf_to_var = {cnf: v for v, cnf in self.latch_cur.items()}
        polarity = {abs(l): l > 0 for l in full_state.lits}
        lits = []
        for c in res.core:
            v = cnf_to_var.get(abs(c))
            if v is not None:
                lits.append(v if polarity[v] else -v)
        return Cube.of(lits)


class CtiSampler:
    """Incremental sampler; consecutive ``sample`` calls extend the same pool."""

    def __init__(self, ts: TransitionSystem, seed: int = 0, restart_every: int = 64):
        self.ts = ts
        self.seed = seed & MASK64
        self.restart_every = restart_every
        self._round = 0
        self._blocked: list[Cube] = []  # full states excluded so far
        self._seen: set[Cube] = set()
        self._input_vars = ts.aig.input_vars()
        self._minimizer = _Minimizer(ts)
        self._build_sampler()

    def _build_sampler(self) -> None:
        order = None
        if self._round > 0:
            order = splitmix64((self.seed + _GOLDEN * self._round) & MASK64)
        ctx = SolverContext(self.ts, order_seed=order)
        bad_cur = ctx.encode_cone(self.ts.bad, CURRENT)
        bad_next = ctx.encode_cone(self.ts.bad, NEXT)
        ctx.add_clause([-bad_cur])  # P holds in the current state
        ctx.add_clause([bad_next])  # and is violated after one step
        self._latch_cur = {v: ctx.latch_lit(v, CURRENT) for v in self.ts.latch_vars}
        for state in self._blocked:
            ctx.add_clause(self._negation_clause(state))
        self._sctx = ctx

    def _negation_clause(self, state: Cube) -> list[int]:
        out = []
        for lit in state:
            cnf = self._latch_cur[abs(lit)]
            out.append(-cnf if lit > 0 else cnf)
        return out

    def minimize(
        self, full_state: Cube, inputs: Sequence[bool], next_inputs: Sequence[bool] = ()
    ) -> Cube:
        return self._minimizer.minimize(full_state, inputs, next_inputs)

    @property
    def queries(self) -> int:
        return self._sctx.queries + self._minimizer.ctx.queries

    def sample(self, n: int) -> list[CtiSample]:
        if n < 1:
            raise ValueError("n must be >= 1")
        pool: list[CtiSample] = []
        while len(pool) < n:
            res = self._sctx.solve([])
            if not res.sat:
                break
            state = Cube.of(
                v if res.lit_true(cnf) else -v for v, cnf in self._latch_cur.items()
            )
            cur_vals = self._sctx.input_values(res, CURRENT)
            next_vals = self._sctx.input_values(res, NEXT)
            cur_bits = tuple(cur_vals.get(v, False) for v in self._input_vars)
            next_bits = tuple(next_vals.get(v, False) for v in self._input_vars)
            cube = self.minimize(state, cur_bits, next_bits)
            self._sctx.add_clause(self._negation_clause(state))
            self._blocked.append(state)
            if cube in self._seen:
                continue
            self._seen.add(cube)
            pool.append(
                CtiSample(
                    cube=cube,
                    inputs=cur_bits,
                    next_inputs=next_bits,
                    full_state=state,
                )
            )
            if self.restart_every and len(self._seen) % self.restart_every == 0:
                self._round += 1
                self._build_sampler()
        return pool


def sample_ctis(
    ts: TransitionSystem, n: int = 1024, seed: int = 0, restart_every: int = 64
) -> list[CtiSample]:
    """Up to ``n`` CTIs with pairwise-distinct minimized cubes."""
    return CtiSampler(ts, seed=seed, restart_every=restart_every).sample(n)


def minimize_cti(
    ts: TransitionSystem,
    full_state: Cube,
    inputs: Sequence[bool],
    next_inputs: Sequence[bool] = (),
) -> Cube:
    """One-shot input-fixed core minimization of a witnessed CTI state."""
    return _Minimizer(ts).minimize(full_state, inputs, next_inputs)
