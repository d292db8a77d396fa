"""Property-directed reachability (IC3) with clause side-loading.

Frames are delta-encoded: each learned clause lives in the highest frame where
it is known to hold, and the content of F_i is the union of delta sets at
indices >= i, each guarded by a per-frame activation literal.  F_0 is the
initial cube exactly.  The engine:

  * extracts bad states from F_k and not-P, lifting witnesses to cubes through
    input-fixed UNSAT cores (all states in a lifted cube reach the bad states
    under the recorded inputs, which keeps counterexample traces replayable),
  * blocks obligations through a priority queue ordered by (frame, cube size,
    insertion order), re-enqueueing blocked cubes one frame up,
  * generalizes blocking clauses literal by literal in ascending variable
    order, guarding every drop with an initiation check (the candidate cube
    must stay disjoint from the initial states -- exact as a syntactic test
    because the initial states form a cube),
  * propagates clauses forward into a freshly created empty top frame and
    declares a fixpoint when some delta set drains empty,
  * accepts side-loaded clauses into F_1 only before the main loop starts,
    re-checking each defensively against the clause sanity conditions.

Safe results carry the inductive invariant clauses (with discovery-frame
annotations) and are re-certified by three UNSAT query groups before being
returned; Unsafe results carry a trace that is replayed on the simulator
before being returned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Iterable, Sequence

from . import aiger
from .aiger import TransitionSystem
from .cubes import Clause, Cube
from .sanity import SanityChecker, filter_candidates
from .sat import CURRENT, NEXT, SolverContext


class InternalCheckError(AssertionError):
    """A certified-result or lifting invariant failed; indicates an engine bug."""


@dataclass(frozen=True)
class Budget:
    timeout_s: float | None = None
    max_frames: int | None = None
    max_queries: int | None = None


@dataclass
class Stats:
    sat_queries: int = 0
    obligations: int = 0
    clauses_learned: int = 0
    frames: int = 0
    propagations: int = 0
    wall_time_s: float = 0.0
    sideload_offered: int = 0
    sideload_accepted: int = 0

    def deterministic_fields(self) -> tuple:
        return (
            self.sat_queries,
            self.obligations,
            self.clauses_learned,
            self.frames,
            self.propagations,
            self.sideload_offered,
            self.sideload_accepted,
        )


@dataclass(frozen=True)
class Trace:
    """Counterexample: initial latch values, then one input vector per step.

    The bad literal holds at the final step's (state, inputs) pair, i.e. after
    ``len(inputs) - 1`` transitions from the initial state.
    """

    initial: tuple[bool, ...]
    inputs: tuple[tuple[bool, ...], ...]

    def steps(self) -> int:
        return len(self.inputs) - 1


@dataclass
class Safe:
    invariant: tuple[Clause, ...]
    discovery_frames: dict[Clause, int] = field(default_factory=dict)


@dataclass
class Unsafe:
    trace: Trace


@dataclass
class Unknown:
    reason: str


VerificationResult = Safe | Unsafe | Unknown


def replay_trace(ts: TransitionSystem, trace: Trace) -> bool:
    """Simulate the trace; True iff it starts in I and ends in a bad valuation."""
    state = dict(zip(ts.latch_vars, trace.initial))
    if len(state) != len(ts.latch_vars) or len(trace.initial) != len(ts.latch_vars):
        return False
    for lit in ts.init_cube:
        if state[abs(lit)] != (lit > 0):
            return False
    if not trace.inputs:
        return False
    input_vars = ts.aig.input_vars()
    for t, vec in enumerate(trace.inputs):
        if len(vec) != len(input_vars):
            return False
        nxt, bad = aiger.step(ts, state, dict(zip(input_vars, vec)))
        if t == len(trace.inputs) - 1:
            return bad
        state = nxt
    return False


def certify_invariant(ts: TransitionSystem, clauses: Sequence[Clause]) -> bool:
    """Check I => Inv, Inv and T => Inv', Inv => P with a fresh solver context."""
    ok, _ = _certify_invariant_counted(ts, clauses)
    return ok


def _certify_invariant_counted(
    ts: TransitionSystem, clauses: Sequence[Clause]
) -> tuple[bool, int]:
    ctx = SolverContext(ts)
    bad_cur = ctx.encode_cone(ts.bad, CURRENT)
    act_init = ctx.new_var()
    for lit in ts.init_cube:
        cnf = ctx.latch_lit(abs(lit), CURRENT)
        ctx.add_clause([-act_init, cnf if lit > 0 else -cnf])
    inv_act = ctx.new_var()
    for cl in clauses:
        lits = []
        for lit in cl:
            cnf = ctx.latch_lit(abs(lit), CURRENT)
            lits.append(cnf if lit > 0 else -cnf)
        ctx.add_clause([-inv_act, *lits])

    def cube_assumptions(cube: Cube, frame: str) -> list[int]:
        out = []
        for lit in cube:
            cnf = ctx.latch_lit(abs(lit), frame)
            out.append(cnf if lit > 0 else -cnf)
        return out

    for cl in clauses:
        if ctx.solve([act_init, *cube_assumptions(cl.negate(), CURRENT)]).sat:
            return False, ctx.queries
    for cl in clauses:
        if ctx.solve([inv_act, *cube_assumptions(cl.negate(), NEXT)]).sat:
            return False, ctx.queries
    return not ctx.solve([inv_act, bad_cur]).sat, ctx.queries


class _BudgetExhausted(Exception):
    def __init__(self, reason: str):
        self.reason = reason


@dataclass
class _Frame:
    act: int
    delta: dict[Clause, None] = field(default_factory=dict)


class _Obligation:
    __slots__ = ("cube", "frame", "inputs", "parent")

    def __init__(self, cube: Cube, frame: int, inputs: tuple[bool, ...], parent):
        self.cube = cube
        self.frame = frame
        self.inputs = inputs
        self.parent = parent


@dataclass
class PredecessorWitness:
    """SAT witness of a failed relative-induction query."""

    state: dict[int, bool]    # full current-state latch valuation
    inputs: tuple[bool, ...]  # full input vector (declaration order)
    cube: Cube                # input-fixed lifted sub-cube of ``state``


class PdrEngine:
    def __init__(self, ts: TransitionSystem, budget: Budget | None = None):
        self.ts = ts
        self.budget = budget if budget is not None else Budget()
        self.stats = Stats()
        self.ctx = SolverContext(ts)
        self._extra_queries = 0  # queries issued in auxiliary contexts
        self._started = False
        self._deadline: float | None = None
        self._init_values = {abs(l): (l > 0) for l in ts.init_cube.lits}
        self._latch_set = set(ts.latch_vars)
        self._input_vars = ts.aig.input_vars()

        # encode the property cone and the full transition relation up front so
        # every input that can influence behavior has a CNF variable
        self.bad_cur = self.ctx.encode_cone(ts.bad, CURRENT)
        self._latch_cur = {v: self.ctx.latch_lit(v, CURRENT) for v in ts.latch_vars}
        self._latch_next = {v: self.ctx.latch_lit(v, NEXT) for v in ts.latch_vars}

        act_init = self.ctx.new_var()
        for lit in ts.init_cube:
            cnf = self._latch_cur[abs(lit)]
            self.ctx.add_clause([-act_init, cnf if lit > 0 else -cnf])
        self.frames: list[_Frame] = [_Frame(act=act_init), _Frame(act=self.ctx.new_var())]
        self.discovery: dict[Clause, int] = {}
        self._ob_seq = 0

    # ------------------------------------------------------------------ helpers

    def _tick(self) -> None:
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise _BudgetExhausted("timeout")
        if self.budget.max_queries is not None and self.ctx.queries >= self.budget.max_queries:
            raise _BudgetExhausted("query budget")

    def _solve(self, assumptions: list[int]):
        self._tick()
        res = self.ctx.solve(assumptions)
        self.stats.sat_queries = self.ctx.queries + self._extra_queries
        return res

    def _frame_assumptions(self, i: int) -> list[int]:
        if i == 0:
            return [self.frames[0].act]
        return [f.act for f in self.frames[i:]]

    def _cube_assumptions(self, cube: Cube, frame: str) -> list[int]:
        table = self._latch_cur if frame == CURRENT else self._latch_next
        out = []
        for lit in cube:
            cnf = table[abs(lit)]
            out.append(cnf if lit > 0 else -cnf)
        return out

    def _intersects_init(self, cube: Cube) -> bool:
        """Exact: the initial states form a cube (uninitialized latches free)."""
        for lit in cube:
            want = self._init_values.get(abs(lit))
            if want is not None and want != (lit > 0):
                return False
        return True

    def _init_state_in(self, cube: Cube) -> dict[int, bool]:
        """Some initial state inside ``cube`` (requires an intersection)."""
        assert self._intersects_init(cube)
        state = dict(self._init_values)
        for lit in cube:
            state.setdefault(abs(lit), lit > 0)
        for v in self.ts.latch_vars:
            state.setdefault(v, False)
        return state

    def _model_state(self, res) -> dict[int, bool]:
        return {v: res.lit_true(cnf) for v, cnf in self._latch_cur.items()}

    def _model_inputs(self, res) -> tuple[bool, ...]:
        cur = self.ctx.maps[CURRENT]
        return tuple(
            res.lit_true(cur[v]) if v in cur else False for v in self._input_vars
        )

    def _state_assumptions(self, state: dict[int, bool]) -> list[int]:
        return [
            self._latch_cur[v] if val else -self._latch_cur[v]
            for v, val in sorted(state.items())
        ]

    def _input_assumptions(self, inputs: tuple[bool, ...]) -> list[int]:
        cur = self.ctx.maps[CURRENT]
        out = []
        for v, val in zip(self._input_vars, inputs):
            if v in cur:
                out.append(cur[v] if val else -cur[v])
        return out

    def _core_to_cube(self, core: Iterable[int], state: dict[int, bool]) -> Cube:
        cnf_to_var = {cnf: v for v, cnf in self._latch_cur.items()}
        lits = []
        for c in core:
            v = cnf_to_var.get(abs(c))
            if v is not None:
                lits.append(v if state[v] else -v)
        return Cube.of(lits)

    # ------------------------------------------------------------- core queries

    def is_relative_inductive(
        self, cube: Cube, i: int, lift: bool = True
    ) -> tuple[bool, PredecessorWitness | None]:
        """F_i and not-cube and T and cube' UNSAT?  On SAT, yields the witness."""
        assume = self._frame_assumptions(i)
        neg_cur = [-l for l in self._cube_assumptions(cube, CURRENT)]
        assume.append(self.ctx.add_guarded(neg_cur))
        assume += self._cube_assumptions(cube, NEXT)
        res = self._solve(assume)
        if not res.sat:
            return True, None
        state = self._model_state(res)
        inputs = self._model_inputs(res)
        lifted = self._lift_predecessor(state, inputs, cube) if lift else Cube.of(
            [v if val else -v for v, val in state.items()]
        )
        return False, PredecessorWitness(state=state, inputs=inputs, cube=lifted)

    def _lift_predecessor(
        self, state: dict[int, bool], inputs: tuple[bool, ...], target: Cube
    ) -> Cube:
        """Shrink a predecessor to an UNSAT core that still forces the target.

        Core of: state and inputs and T and not-target'.  The transition
        relation is deterministic once state and inputs are fixed, so the
        query must be UNSAT; every state in the returned cube steps into
        ``target`` under these inputs.
        """
        neg_next = [-l for l in self._cube_assumptions(target, NEXT)]
        act = self.ctx.add_guarded(neg_next)
        assume = [act] + self._state_assumptions(state) + self._input_assumptions(inputs)
        res = self._solve(assume)
        if res.sat:
            raise InternalCheckError("predecessor lifting query unexpectedly SAT")
        return self._core_to_cube(res.core, state)

    def _lift_bad(self, state: dict[int, bool], inputs: tuple[bool, ...]) -> Cube:
        """Core of: state and inputs and P (the state/input pair violates P)."""
        assume = (
            [-self.bad_cur]
            + self._state_assumptions(state)
            + self._input_assumptions(inputs)
        )
        res = self._solve(assume)
        if res.sat:
            raise InternalCheckError("bad-state lifting query unexpectedly SAT")
        return self._core_to_cube(res.core, state)

    # ------------------------------------------------------------------ frames

    def _install_clause(self, clause: Clause, i: int) -> None:
        """Make ``clause`` a member of frames 1..i (delta set at i)."""
        for j, fr in enumerate(self.frames):
            if clause in fr.delta:
                if j >= i:
                    return
                del fr.delta[clause]
        lits = []
        for lit in clause:
            cnf = self._latch_cur[abs(lit)]
            lits.append(cnf if lit > 0 else -cnf)
        self.ctx.add_clause([-self.frames[i].act, *lits])
        self.frames[i].delta[clause] = None
        self.discovery[clause] = max(self.discovery.get(clause, 0), i)

    def _blocked_syntactically(self, cube: Cube, i: int) -> bool:
        cube_set = set(cube.lits)
        for fr in self.frames[i:]:
            for cl in fr.delta:
                if set(cl.negate().lits) <= cube_set:
                    return True
        return False

    def generalize_cube(self, cube: Cube, i: int) -> Cube:
        """Drop literals (ascending variable order) while the cube stays
        relatively inductive at frame i and disjoint from the initial states."""
        current = cube
        for lit in cube.lits:
            if len(current) == 1:
                break
            if lit not in current:
                continue
            cand = current.without(lit)
            if self._intersects_init(cand):
                continue
            ok, _ = self.is_relative_inductive(cand, i, lift=False)
            if ok:
                current = cand
        return current

    # --------------------------------------------------------------- side-load

    def inject_sideload(self, clauses: Sequence[Clause]) -> int:
        """Install externally supplied clauses into F_1 before the main loop.

        Each clause is re-checked defensively against the sanity conditions;
        violators (and duplicates/subsumed candidates) are skipped and counted.
        Returns the number of accepted clauses.
        """
        if self._started:
            raise RuntimeError(
                "side-loading is only allowed at initialization (k=1, before the main loop)"
            )
        offered = list(clauses)
        self.stats.sideload_offered += len(offered)
        if not offered:
            return 0
        for cl in offered:
            for v in cl.variables():
                if v not in self._latch_set:
                    raise ValueError(f"side-load clause mentions non-latch variable {v}")
        checker = SanityChecker(self.ts)
        kept, _verdicts = filter_candidates(self.ts, offered, checker)
        self._extra_queries += checker.ctx.queries
        self.stats.sat_queries = self.ctx.queries + self._extra_queries
        for cl in kept:
            self._install_clause(cl, 1)
        self.stats.sideload_accepted += len(kept)
        return len(kept)

    # ------------------------------------------------------------------- check

    def check(self) -> tuple[VerificationResult, Stats]:
        t0 = time.monotonic()
        if self.budget.timeout_s is not None:
            self._deadline = t0 + self.budget.timeout_s
        self._started = True
        try:
            result = self._run()
        except _BudgetExhausted as exc:
            result = Unknown(reason=exc.reason)
        self.stats.frames = len(self.frames) - 1
        self.stats.wall_time_s = time.monotonic() - t0
        return result, self.stats

    def _run(self) -> VerificationResult:
        # 0-step base case: I and not-P
        res = self._solve([self.frames[0].act, self.bad_cur])
        if res.sat:
            trace = Trace(
                initial=tuple(
                    self._model_state(res)[v] for v in self.ts.latch_vars
                ),
                inputs=(self._model_inputs(res),),
            )
            return self._certified_unsafe(trace)

        k = 1
        while True:
            if self.budget.max_frames is not None and k > self.budget.max_frames:
                raise _BudgetExhausted("frame budget")
            while True:
                res = self._solve(self._frame_assumptions(k) + [self.bad_cur])
                if not res.sat:
                    break
                state = self._model_state(res)
                inputs = self._model_inputs(res)
                cube = self._lift_bad(state, inputs)
                if self._intersects_init(cube):
                    # only possible when I itself can violate P, which the
                    # 0-step check excluded; defensive
                    raise InternalCheckError("bad cube intersects initial states")
                outcome = self._block(_Obligation(cube, k, inputs, None))
                if isinstance(outcome, Trace):
                    return self._certified_unsafe(outcome)
            self.frames.append(_Frame(act=self.ctx.new_var()))
            self.stats.propagations += 1
            fix = self._propagate(k)
            if fix is not None:
                return self._certified_safe(fix)
            k += 1

    def _block(self, root: _Obligation) -> bool | Trace:
        heap: list[tuple[int, int, int, _Obligation]] = []

        def push(ob: _Obligation) -> None:
            self._ob_seq += 1
            heappush(heap, (ob.frame, len(ob.cube), self._ob_seq, ob))

        push(root)
        top = len(self.frames) - 1
        while heap:
            self._tick()
            _, _, _, ob = heappop(heap)
            self.stats.obligations += 1
            if ob.frame == 0:
                raise InternalCheckError("obligation reached frame 0 unchecked")
            if self._blocked_syntactically(ob.cube, ob.frame):
                continue
            ok, wit = self.is_relative_inductive(ob.cube, ob.frame - 1)
            if ok:
                g = self.generalize_cube(ob.cube, ob.frame - 1)
                self._install_clause(g.negate(), ob.frame)
                self.stats.clauses_learned += 1
                if ob.frame < top:
                    ob.frame += 1
                    push(ob)
                continue
            assert wit is not None
            if self._intersects_init(wit.cube):
                # the predecessor covers an initial state: a real counterexample
                initial = wit.state
                for lit in self.ts.init_cube:
                    if initial[abs(lit)] != (lit > 0):
                        initial = self._init_state_in(wit.cube)
                        break
                chain = [wit.inputs]
                node: _Obligation | None = ob
                while node is not None:
                    chain.append(node.inputs)
                    node = node.parent
                return Trace(
                    initial=tuple(initial[v] for v in self.ts.latch_vars),
                    inputs=tuple(chain),
                )
            push(ob)
            push(_Obligation(wit.cube, ob.frame - 1, wit.inputs, ob))
        return True

    def _propagate(self, k: int) -> int | None:
        """Push clauses from F_1..F_k into the next frame; report a fixpoint."""
        for i in range(1, len(self.frames) - 1):
            delta = self.frames[i].delta
            for clause in list(delta.keys()):
                if clause not in delta:
                    continue
                self._tick()
                cube = clause.negate()
                assume = self._frame_assumptions(i) + self._cube_assumptions(cube, NEXT)
                if not self._solve(assume).sat:
                    del delta[clause]
                    self.frames[i + 1].delta[clause] = None
                    lits = [
                        self._latch_cur[abs(l)] if l > 0 else -self._latch_cur[abs(l)]
                        for l in clause
                    ]
                    self.ctx.add_clause([-self.frames[i + 1].act, *lits])
            if not delta:
                return i
        return None

    # ------------------------------------------------------------ certification

    def _invariant_at(self, i: int) -> tuple[Clause, ...]:
        out: list[Clause] = []
        for fr in self.frames[i + 1 :]:
            out.extend(fr.delta.keys())
        return tuple(out)

    def _certified_safe(self, fix: int) -> Safe:
        invariant = self._invariant_at(fix)
        ok, nq = _certify_invariant_counted(self.ts, invariant)
        self._extra_queries += nq
        self.stats.sat_queries = self.ctx.queries + self._extra_queries
        if not ok:
            raise InternalCheckError("invariant failed certification")
        frames_of = {cl: self.discovery.get(cl, 1) for cl in invariant}
        return Safe(invariant=invariant, discovery_frames=frames_of)

    def _certified_unsafe(self, trace: Trace) -> Unsafe:
        if not replay_trace(self.ts, trace):
            raise InternalCheckError("counterexample trace failed replay")
        return Unsafe(trace=trace)


def check(
    ts: TransitionSystem,
    sideload: Sequence[Clause] = (),
    budget: Budget | None = None,
) -> tuple[VerificationResult, Stats]:
    """One-shot check with optional side-loaded clauses (injected into F_1)."""
    engine = PdrEngine(ts, budget)
    if sideload:
        engine.inject_sideload(sideload)
    return engine.check()
