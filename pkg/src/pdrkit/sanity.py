"""SAT-based sanity checking for candidate clauses before side-loading.

A candidate clause C (over latch variables) is accepted when two queries are
both UNSAT:

  * initiation: I and not-C has no model (C holds in every initial state;
    uninitialized latches are unconstrained),
  * one-step:   I and T and not-C' has no model (C holds after any single
    transition out of the initial states).

Accepted candidates are deduplicated and subsumption-reduced: a clause whose
literal set is a superset of another accepted clause's literal set is dropped.
Both queries share one incremental solver context; each query enables only the
candidate's negated literals through assumptions, so nothing needs retracting
between candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .aiger import TransitionSystem
from .cubes import Clause
from .sat import CURRENT, NEXT, SolverContext


@dataclass(frozen=True)
class SanityVerdict:
    clause: Clause
    initiation: bool
    one_step: bool

    @property
    def accepted(self) -> bool:
        return self.initiation and self.one_step


class SanityChecker:
    """Shared-context checker; one instance per transition system."""

    def __init__(self, ts: TransitionSystem, ctx: SolverContext | None = None):
        self.ts = ts
        self.ctx = ctx if ctx is not None else SolverContext(ts)
        self._latch_set = set(ts.latch_vars)
        # initial states asserted once: unit per initialized latch
        for lit in ts.init_cube:
            cnf = self.ctx.latch_lit(abs(lit), CURRENT)
            self.ctx.add_clause([cnf if lit > 0 else -cnf])

    def _check_vars(self, clause: Clause) -> None:
        for v in clause.variables():
            if v not in self._latch_set:
                raise ValueError(f"clause mentions non-latch variable {v}")
        if len(clause) == 0:
            raise ValueError("empty clause cannot be sanity checked")

    def check_initiation(self, clause: Clause) -> bool:
        """True iff the clause holds in every initial state."""
        self._check_vars(clause)
        assume = []
        for lit in clause.negate():
            cnf = self.ctx.latch_lit(abs(lit), CURRENT)
            assume.append(cnf if lit > 0 else -cnf)
        return not self.ctx.solve(assume).sat

    def check_one_step(self, clause: Clause) -> bool:
        """True iff the clause holds after every one-step successor of I."""
        self._check_vars(clause)
        assume = []
        for lit in clause.negate():
            cnf = self.ctx.latch_lit(abs(lit), NEXT)
            assume.append(cnf if lit > 0 else -cnf)
        return not self.ctx.solve(assume).sat

    def verdict(self, clause: Clause) -> SanityVerdict:
        return SanityVerdict(
            clause=clause,
            initiation=self.check_initiation(clause),
            one_step=self.check_one_step(clause),
        )


def check_initiation(ts: TransitionSystem, clause: Clause) -> bool:
    return SanityChecker(ts).check_initiation(clause)


def check_one_step(ts: TransitionSystem, clause: Clause) -> bool:
    return SanityChecker(ts).check_one_step(clause)


def filter_candidates(
    ts: TransitionSystem,
    candidates: Iterable[Clause],
    checker: SanityChecker | None = None,
) -> tuple[list[Clause], list[SanityVerdict]]:
    """Run both checks over candidates; return (accepted set C*, verdicts).

    Verdicts are reported per distinct candidate in first-seen order.  The
    accepted set is deduplicated, subsumption-reduced, and deterministically
    ordered by (length, literals).
    """
    checker = checker if checker is not None else SanityChecker(ts)
    distinct: list[Clause] = []
    seen: set[Clause] = set()
    for c in candidates:
        if c not in seen:
            seen.add(c)
            distinct.append(c)
    verdicts = [checker.verdict(c) for c in distinct]
    accepted = sorted(
        (v.clause for v in verdicts if v.accepted), key=lambda c: (len(c), c.lits)
    )
    kept: list[Clause] = []
    for c in accepted:
        if not any(c.subsumed_by(k) for k in kept):
            kept.append(c)
    return kept, verdicts


def filter_for_sideload(
    ts: TransitionSystem, candidates: Sequence[Clause]
) -> tuple[list[Clause], int, SolverContext]:
    """Convenience wrapper: returns (accepted, rejected count, shared context)."""
    checker = SanityChecker(ts)
    kept, verdicts = filter_candidates(ts, candidates, checker)
    rejected = sum(1 for v in verdicts if not v.accepted)
    return kept, rejected, checker.ctx
