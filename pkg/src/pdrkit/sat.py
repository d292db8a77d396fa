"""Incremental CDCL SAT backend and CNF encodings of AIG cones.

The solver is built in: two-watched-literal propagation, first-UIP conflict
learning, phase saving, Luby restarts, and minisat-style assumption handling
(assumptions occupy the first decision levels; on UNSAT the reported core is
the subset of assumptions reachable in the final conflict analysis).  Branching
follows VSIDS activity with multiplicative decay 0.95, ties broken by lowest
variable rank (rank defaults to allocation order; a seeded permutation can be
installed for diversification).  Everything is deterministic for a fixed
clause/assumption sequence.

``SolverContext`` layers AIG awareness on top: Tseitin encoding of AND cones
for the current and next frame, where the next frame substitutes each latch
variable with the cone of its next-state function over current-frame
variables.  An optional external solver can be swapped in behind the same
interface via DIMACS over process pipes.
"""

from __future__ import annotations

import subprocess
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .aiger import Aig, TransitionSystem
from .rng import XorShift64

_RESTART_BASE = 100
_VAR_DECAY = 0.95
_RESCALE = 1e100


def luby(i: int) -> int:
    """i-th element (1-based) of the Luby restart sequence 1,1,2,1,1,2,4,..."""
    while True:
        k = (i + 1).bit_length() - 1
        if (1 << k) == i + 1:
            return 1 << (k - 1) if k > 0 else 1
        i = i - (1 << k) + 1


class Sat:
    """CDCL solver over signed integer literals (+v / -v, v >= 1)."""

    def __init__(self) -> None:
        self.nvars = 0
        self.values: list[int] = [0]      # per var: 0 unassigned, +1 true, -1 false
        self.level: list[int] = [0]
        self.reason: list[list[int] | None] = [None]
        self.activity: list[float] = [0.0]
        self.phase: list[bool] = [False]
        self.rank: list[int] = [0]        # decision tie-break (lower wins)
        self.watches: dict[int, list[list[int]]] = defaultdict(list)
        self.added: list[list[int]] = []  # original clauses, for DIMACS dumps
        self.trail: list[int] = []
        self.lim: list[int] = []
        self.qhead = 0
        self.unsat_flag = False
        self.var_inc = 1.0
        self.conflicts = 0
        self.model: list[int] = []
        self.core: tuple[int, ...] = ()
        self.assumptions: list[int] = []

    # ---- variables / values

    def new_var(self, rank: int | None = None) -> int:
        self.nvars += 1
        self.values.append(0)
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.phase.append(False)
        self.rank.append(self.nvars if rank is None else rank)
        return self.nvars

    def value(self, lit: int) -> int:
        v = self.values[abs(lit)]
        return v if lit > 0 else -v

    def decision_level(self) -> int:
        return len(self.lim)

    # ---- clauses

    def add_clause(self, lits: Iterable[int]) -> None:
        """Add a clause; must be called between solves (decision level 0)."""
        assert self.decision_level() == 0
        clause = list(dict.fromkeys(int(l) for l in lits))
        for l in clause:
            if l == 0 or abs(l) > self.nvars:
                raise ValueError(f"literal {l} out of range")
        if self.unsat_flag:
            return
        if any(-l in clause for l in clause):
            return  # tautology: satisfiability unchanged
        self.added.append(clause)
        out = []
        for l in clause:
            v = self.value(l)
            if v == 1:
                return  # satisfied at root
            if v == 0:
                out.append(l)
        if not out:
            self.unsat_flag = True
            return
        if len(out) == 1:
            self._enqueue(out[0], None)
            if self._propagate() is not None:
                self.unsat_flag = True
            return
        self.watches[out[0]].append(out)
        self.watches[out[1]].append(out)

    def _enqueue(self, lit: int, reason: list[int] | None) -> None:
        v = abs(lit)
        self.values[v] = 1 if lit > 0 else -1
        self.level[v] = self.decision_level()
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self) -> list[int] | None:
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            watchlist = self.watches[-p]
            keep: list[list[int]] = []
            i = 0
            while i < len(watchlist):
                c = watchlist[i]
                i += 1
                if c[0] == -p:
                    c[0], c[1] = c[1], c[0]
                first = self.value(c[0])
                if first == 1:
                    keep.append(c)
                    continue
                for k in range(2, len(c)):
                    if self.value(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        self.watches[c[1]].append(c)
                        break
                else:
                    keep.append(c)
                    if first == -1:
                        keep.extend(watchlist[i:])
                        self.watches[-p] = keep
                        return c
                    self._enqueue(c[0], c)
            self.watches[-p] = keep
        return None

    # ---- conflict analysis

    def _bump(self, var: int) -> None:
        self.activity[var] += self.var_inc
        if self.activity[var] > _RESCALE:
            inv = 1.0 / _RESCALE
            for v in range(1, self.nvars + 1):
                self.activity[v] *= inv
            self.var_inc *= inv

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        """First-UIP learning; returns (learnt clause, backjump level)."""
        cur = self.decision_level()
        seen = set()
        learnt: list[int] = []
        counter = 0
        p: int | None = None
        index = len(self.trail) - 1
        c: list[int] | None = confl
        while True:
            assert c is not None
            for q in c:
                if p is not None and q == p:
                    continue
                v = abs(q)
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    self._bump(v)
                    if self.level[v] == cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while abs(self.trail[index]) not in seen:
                index -= 1
            p = self.trail[index]
            index -= 1
            counter -= 1
            if counter == 0:
                break
            c = self.reason[abs(p)]
        learnt.insert(0, -p)
        if len(learnt) == 1:
            bt = 0
        else:
            # watch a literal of maximal level at position 1
            widx = max(range(1, len(learnt)), key=lambda j: self.level[abs(learnt[j])])
            learnt[1], learnt[widx] = learnt[widx], learnt[1]
            bt = self.level[abs(learnt[1])]
        self.var_inc /= _VAR_DECAY
        return learnt, bt

    def _analyze_final(self, p: int) -> tuple[int, ...]:
        """Assumptions responsible for forcing ``p`` false (the failed core)."""
        core = {p}
        if self.decision_level() == 0:
            return tuple(sorted(core, key=abs))
        seen = {abs(p)}
        for idx in range(len(self.trail) - 1, self.lim[0] - 1, -1):
            x = self.trail[idx]
            v = abs(x)
            if v not in seen:
                continue
            r = self.reason[v]
            if r is None:
                core.add(x)   # a decision in the assumption prefix
            else:
                for q in r:
                    if abs(q) != v and self.level[abs(q)] > 0:
                        seen.add(abs(q))
        return tuple(sorted(core, key=abs))

    def _cancel_until(self, lvl: int) -> None:
        if self.decision_level() <= lvl:
            return
        bound = self.lim[lvl]
        for idx in range(len(self.trail) - 1, bound - 1, -1):
            lit = self.trail[idx]
            v = abs(lit)
            self.values[v] = 0
            self.reason[v] = None
            self.phase[v] = lit > 0
        del self.trail[bound:]
        del self.lim[lvl:]
        self.qhead = len(self.trail)

    def _pick_branch(self) -> int | None:
        best = 0
        best_key: tuple[float, int] | None = None
        for v in range(1, self.nvars + 1):
            if self.values[v] == 0:
                key = (self.activity[v], -self.rank[v])
                if best_key is None or key > best_key:
                    best, best_key = v, key
        if best_key is None:
            return None
        return best if self.phase[best] else -best

    # ---- solving

    def solve(self, assumptions: Sequence[int] = ()) -> bool:
        self.model = []
        self.core = ()
        if self.unsat_flag:
            return False
        self._cancel_until(0)
        if self._propagate() is not None:
            self.unsat_flag = True
            return False
        self.assumptions = [int(a) for a in assumptions]
        for a in self.assumptions:
            if a == 0 or abs(a) > self.nvars:
                raise ValueError(f"assumption {a} out of range")
        restarts = 0
        limit = _RESTART_BASE * luby(1)
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                since_restart += 1
                if self.decision_level() == 0:
                    self.unsat_flag = True
                    self.core = ()
                    return False
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self._enqueue(learnt[0], learnt)
                continue
            if since_restart >= limit:
                restarts += 1
                limit = _RESTART_BASE * luby(restarts + 1)
                since_restart = 0
                self._cancel_until(0)
                continue
            lvl = self.decision_level()
            if lvl < len(self.assumptions):
                a = self.assumptions[lvl]
                va = self.value(a)
                if va == 1:
                    self.lim.append(len(self.trail))  # placeholder level
                    continue
                if va == -1:
                    self.core = self._analyze_final(a)
                    self._cancel_until(0)
                    return False
                self.lim.append(len(self.trail))
                self._enqueue(a, None)
                continue
            decision = self._pick_branch()
            if decision is None:
                self.model = list(self.values)
                self._cancel_until(0)
                return True
            self.lim.append(len(self.trail))
            self._enqueue(decision, None)

    def model_value(self, lit: int) -> bool:
        v = self.model[abs(lit)]
        assert v != 0, "model is total over allocated variables"
        return (v > 0) if lit > 0 else (v < 0)


@dataclass(frozen=True)
class ExternalSolverConfig:
    """Run an external DIMACS solver as a subprocess per query.

    The command receives DIMACS CNF on stdin and must print a status line
    ``s SATISFIABLE`` / ``s UNSATISFIABLE`` and, when satisfiable, ``v`` lines
    with a 0-terminated model.  Assumptions are appended as unit clauses; on
    UNSAT the reported core is the full assumption set (cores need not be
    minimal).
    """

    command: tuple[str, ...]
    timeout_s: float | None = None


class PipeSat:
    """Same interface as ``Sat``, delegating each query to an external solver."""

    def __init__(self, config: ExternalSolverConfig) -> None:
        self.config = config
        self.nvars = 0
        self.added: list[list[int]] = []
        self.unsat_flag = False
        self.model: list[int] = []
        self.core: tuple[int, ...] = ()

    def new_var(self, rank: int | None = None) -> int:
        self.nvars += 1
        return self.nvars

    def add_clause(self, lits: Iterable[int]) -> None:
        clause = list(dict.fromkeys(int(l) for l in lits))
        for l in clause:
            if l == 0 or abs(l) > self.nvars:
                raise ValueError(f"literal {l} out of range")
        if any(-l in clause for l in clause):
            return
        if not clause:
            self.unsat_flag = True
            return
        self.added.append(clause)

    def solve(self, assumptions: Sequence[int] = ()) -> bool:
        self.model = []
        self.core = ()
        if self.unsat_flag:
            return False
        clauses = self.added + [[int(a)] for a in assumptions]
        dimacs = dimacs_text(self.nvars, clauses)
        proc = subprocess.run(
            list(self.config.command),
            input=dimacs.encode(),
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            timeout=self.config.timeout_s,
        )
        status = None
        lits: list[int] = []
        for line in proc.stdout.decode(errors="replace").splitlines():
            if line.startswith("s "):
                status = line[2:].strip()
            elif line.startswith("v "):
                lits += [int(t) for t in line[2:].split()]
        if status == "UNSATISFIABLE":
            self.core = tuple(sorted((int(a) for a in assumptions), key=abs))
            return False
        if status != "SATISFIABLE":
            raise RuntimeError(f"external solver gave no verdict (exit {proc.returncode})")
        vals = [0] * (self.nvars + 1)
        for l in lits:
            if l != 0 and abs(l) <= self.nvars:
                vals[abs(l)] = 1 if l > 0 else -1
        for v in range(1, self.nvars + 1):
            if vals[v] == 0:
                vals[v] = -1   # unmentioned variables default to false
        self.model = vals
        return True

    def model_value(self, lit: int) -> bool:
        v = self.model[abs(lit)]
        return (v > 0) if lit > 0 else (v < 0)


def dimacs_text(nvars: int, clauses: Sequence[Sequence[int]]) -> str:
    lines = [f"p cnf {nvars} {len(clauses)}"]
    for c in clauses:
        lines.append(" ".join(str(l) for l in c) + " 0")
    return "\n".join(lines) + "\n"


@dataclass
class SatResult:
    sat: bool
    model: tuple[int, ...] = ()   # assignment snapshot indexed by variable
    core: tuple[int, ...] = ()

    def lit_true(self, cnf_lit: int) -> bool:
        assert self.sat, "model only available on SAT"
        v = self.model[abs(cnf_lit)]
        assert v != 0, "model is total over allocated variables"
        return (v > 0) if cnf_lit > 0 else (v < 0)


CURRENT = "current"
NEXT = "next"


class SolverContext:
    """SAT context bound to an AIG: CNF variables plus frame-aware encodings.

    ``encode_cone(lit, frame)`` returns a CNF literal equisatisfiable with the
    AIG literal's cone.  For ``frame=NEXT`` latch variables are driven through
    their next-state cones over current-frame variables (inputs get fresh
    next-frame copies), so conjoining next-frame encodings yields the
    transition relation.
    """

    def __init__(
        self,
        ts: TransitionSystem | None = None,
        aig: Aig | None = None,
        order_seed: int | None = None,
        external: ExternalSolverConfig | None = None,
    ) -> None:
        if ts is None and aig is None:
            raise ValueError("need a transition system or an AIG")
        self.ts = ts
        self.aig = aig if aig is not None else ts.aig
        self._order_rng = XorShift64(order_seed) if order_seed is not None else None
        self.sat: Sat | PipeSat = PipeSat(external) if external is not None else Sat()
        self.maps: dict[str, dict[int, int]] = {CURRENT: {}, NEXT: {}}
        self._kinds = self._classify(self.aig)
        self._ands = self.aig.and_for_var()
        self.false_var = self.new_var()
        self.add_clause([-self.false_var])
        self.maps[CURRENT][0] = self.false_var
        self.maps[NEXT][0] = self.false_var
        self.queries = 0

    @staticmethod
    def _classify(aig: Aig) -> dict[int, str]:
        kinds = {0: "const"}
        for lit in aig.inputs:
            kinds[lit >> 1] = "input"
        for latch in aig.latches:
            kinds[latch.lit >> 1] = "latch"
        for lhs, _, _ in aig.ands:
            kinds[lhs >> 1] = "and"
        return kinds

    # ---- variables and clauses

    def new_var(self) -> int:
        rank = None
        if self._order_rng is not None:
            rank = self._order_rng.next_u64()
        return self.sat.new_var(rank)

    def add_clause(self, lits: Iterable[int]) -> None:
        self.sat.add_clause(lits)

    def add_guarded(self, lits: Iterable[int]) -> int:
        """Add clause under a fresh activation literal; assume it to enable."""
        act = self.new_var()
        self.add_clause([-act, *lits])
        return act

    def solve(self, assumptions: Sequence[int] = ()) -> SatResult:
        self.queries += 1
        sat = self.sat.solve(assumptions)
        if sat:
            return SatResult(True, model=tuple(self.sat.model))
        return SatResult(False, core=self.sat.core)

    # ---- encodings

    def encode_cone(self, lit: int, frame: str = CURRENT) -> int:
        """CNF literal for an AIG literal's cone in the given frame."""
        if frame not in self.maps:
            raise ValueError(f"unknown frame {frame!r}")
        self._encode_var(lit >> 1, frame)
        base = self.maps[frame][lit >> 1]
        return -base if lit & 1 else base

    def _encode_var(self, var: int, frame: str) -> None:
        stack: list[tuple[int, str]] = [(var, frame)]
        while stack:
            v, fr = stack[-1]
            table = self.maps[fr]
            if v in table:
                stack.pop()
                continue
            kind = self._kinds.get(v)
            if kind is None:
                raise ValueError(f"AIG variable {v} is undefined in this circuit")
            if kind == "input":
                table[v] = self.new_var()
                stack.pop()
            elif kind == "latch":
                if fr == CURRENT:
                    table[v] = self.new_var()
                    stack.pop()
                else:
                    if self.ts is None:
                        raise ValueError("next-frame encoding needs a transition system")
                    nf = self.ts.next_fn[v]
                    if (nf >> 1) in self.maps[CURRENT]:
                        base = self.maps[CURRENT][nf >> 1]
                        table[v] = -base if nf & 1 else base
                        stack.pop()
                    else:
                        stack.append((nf >> 1, CURRENT))
            else:  # and gate
                lhs, rhs0, rhs1 = self._ands[v]
                missing = [r >> 1 for r in (rhs0, rhs1) if (r >> 1) not in table]
                if missing:
                    stack.extend((mv, fr) for mv in missing)
                    continue
                a = table[rhs0 >> 1]
                a = -a if rhs0 & 1 else a
                b = table[rhs1 >> 1]
                b = -b if rhs1 & 1 else b
                g = self.new_var()
                self.add_clause([-g, a])
                self.add_clause([-g, b])
                self.add_clause([g, -a, -b])
                table[v] = g
                stack.pop()

    def latch_lit(self, var: int, frame: str = CURRENT) -> int:
        """CNF literal of a latch variable in the given frame."""
        assert self._kinds.get(var) == "latch", f"{var} is not a latch"
        return self.encode_cone(var << 1, frame)

    def input_values(self, result: SatResult, frame: str = CURRENT) -> dict[int, bool]:
        """Valuation of every *encoded* input variable in the model."""
        out = {}
        for lit in self.aig.inputs:
            v = lit >> 1
            if v in self.maps[frame]:
                out[v] = result.lit_true(self.maps[frame][v])
        return out

    def to_dimacs(self) -> str:
        return dimacs_text(self.sat.nvars, self.sat.added)
