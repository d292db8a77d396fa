"""Acceptance gate: one test per criterion, each printing its own PASS line.

Run with ``pytest -v tests/test_acceptance.py`` for one pass/fail line per
criterion; add ``-s`` to see the printed summaries.
"""

from __future__ import annotations

import itertools
import time

import numpy as np
import pytest

from helpers import AigBuilder, bfs_check, random_aig, ts_of
from pdrkit import pdr
from pdrkit.cti import sample_ctis
from pdrkit.cubes import Clause, Cube
from pdrkit.embed import (
    augment_with_flip_rate,
    graph_passes,
    structural_fallback_embed,
)
from pdrkit.flipsim import compute_flip_rates
from pdrkit.graph import build_graph
from pdrkit.pdr import Safe, Unsafe
from pdrkit.pipeline import ablation_candidates
from pdrkit.rng import XorShift64
from pdrkit.sanity import SanityChecker, filter_candidates
from pdrkit.scorer import (
    TrainConfig,
    TrainSample,
    _loss_and_grads,
    init_scorer_weights,
    score_clause_literals,
    score_rows,
    train_on_samples,
)
from test_flipsim import _packed_trace, _scalar_lane_trace

# --------------------------------------------------------- shared A1 suite

_RANDOM_PARAMS = (
    [(s, dict(n_inputs=2, n_latches=4, n_ands=10)) for s in range(20)]
    + [(s, dict(n_inputs=2, n_latches=5, n_ands=14)) for s in range(15)]
    + [(s, dict(n_inputs=3, n_latches=6, n_ands=20)) for s in range(10)]
    + [(s, dict(n_inputs=2, n_latches=8, n_ands=24)) for s in range(5)]
)


def _blocked_shift_aig(n):
    """Input-fed shift chain whose last cell is frozen low; bad = all cells high.

    Safe (the frozen cell never rises), yet the bad cone has wide single-step
    predecessor cubes, so minimized counterexamples-to-induction keep many
    literals and random ablation yields plenty of sanity-passing clauses.
    """
    b = AigBuilder()
    i0 = b.input()
    lats = [b.latch(init=0) for _ in range(n)]
    b.set_next(lats[0], i0)
    for i in range(1, n - 1):
        b.set_next(lats[i], lats[i - 1])
    b.set_next(lats[n - 1], lats[n - 1])
    acc = lats[0]
    for l in lats[1:]:
        acc = b.AND(acc, l)
    b.bad(acc)
    return b.build()


def _ring_aig(n):
    """One-hot token ring: bad output fires when two adjacent cells collide."""
    b = AigBuilder()
    lats = [b.latch(init=(1 if i == 0 else 0)) for i in range(n)]
    for i in range(n):
        b.set_next(lats[i], lats[(i - 1) % n])
    b.bad(b.AND(lats[0], lats[1]))
    return b.build()


@pytest.fixture(scope="module")
def a1_suite():
    """Engine verdicts vs explicit-state BFS over 60 generated circuits.

    50 random circuits across four size classes plus two structured families
    (blocked shift registers and one-hot token rings) that are guaranteed to
    be safe only non-trivially, so the suite exercises real clause learning.
    """
    aigs = [random_aig(seed, **params) for seed, params in _RANDOM_PARAMS]
    aigs += [_blocked_shift_aig(n) for n in range(6, 11)]
    aigs += [_ring_aig(n) for n in range(4, 9)]
    instances = []
    t0 = time.monotonic()
    for aig in aigs:
        assert len(aig.latches) <= 16 and len(aig.ands) <= 100
        ts = ts_of(aig)
        result, stats = pdr.check(ts)
        bfs_safe, bfs_trace = bfs_check(ts)
        instances.append((ts, result, stats, bfs_safe, bfs_trace))
    elapsed = time.monotonic() - t0
    return instances, elapsed


def test_A1_oracle_equivalence(a1_suite):
    instances, elapsed = a1_suite
    assert len(instances) >= 50
    mismatches = 0
    n_safe = n_unsafe = 0
    for ts, result, _stats, bfs_safe, _bfs_trace in instances:
        engine_safe = isinstance(result, Safe)
        engine_unsafe = isinstance(result, Unsafe)
        assert engine_safe or engine_unsafe, "engine returned no verdict"
        if engine_safe != bfs_safe:
            mismatches += 1
        n_safe += engine_safe
        n_unsafe += engine_unsafe
    assert mismatches == 0, f"{mismatches} verdict mismatches vs BFS"
    assert n_safe > 0 and n_unsafe > 0, "suite must exercise both verdicts"
    assert elapsed < 120.0, f"suite took {elapsed:.2f}s, budget is 120s"
    print(
        f"A1 PASS: {len(instances)} instances, 100% BFS agreement "
        f"({n_safe} safe / {n_unsafe} unsafe) in {elapsed:.2f}s"
    )


def test_A2_certificate_validity(a1_suite):
    instances, _ = a1_suite
    failures = 0
    n_certified = n_replayed = 0
    for ts, result, _stats, _bfs_safe, _bfs_trace in instances:
        if isinstance(result, Safe):
            if not pdr.certify_invariant(ts, result.invariant):
                failures += 1
            n_certified += 1
        elif isinstance(result, Unsafe):
            if not pdr.replay_trace(ts, result.trace):
                failures += 1
            n_replayed += 1
    assert failures == 0, f"{failures} certificate failures"
    print(
        f"A2 PASS: {n_certified} invariants certified, "
        f"{n_replayed} traces replayed, 0 failures"
    )


def test_A3_sanity_filter_equivalence():
    def enumerate_initial_states(ts):
        fixed = {abs(l): l > 0 for l in ts.init_cube}
        free = [v for v in ts.latch_vars if v not in fixed]
        for combo in itertools.product([False, True], repeat=len(free)):
            s = dict(fixed)
            s.update(zip(free, combo))
            yield s

    def clause_holds(clause, state):
        return any(state[abs(l)] == (l > 0) for l in clause.lits)

    def brute_initiation(ts, clause):
        return all(clause_holds(clause, s) for s in enumerate_initial_states(ts))

    def brute_one_step(ts, clause):
        from pdrkit import aiger

        input_vars = ts.aig.input_vars()
        for s in enumerate_initial_states(ts):
            for bits in itertools.product([False, True], repeat=len(input_vars)):
                nxt, _ = aiger.step(ts, s, dict(zip(input_vars, bits)))
                if not clause_holds(clause, nxt):
                    return False
        return True

    rng = XorShift64(90210)
    checked = disagreements = 0
    for seed in range(30):
        params = [
            dict(n_inputs=2, n_latches=4, n_ands=10),
            dict(n_inputs=3, n_latches=5, n_ands=14),
            dict(n_inputs=2, n_latches=6, n_ands=16, init_modes=(0, 1, None)),
        ][seed % 3]
        ts = ts_of(random_aig(seed, **params))
        assert len(ts.latch_vars) <= 12  # state space stays within 12 bits
        checker = SanityChecker(ts)
        for _ in range(18):
            lits = []
            for v in ts.latch_vars:
                r = rng.next_below(3)
                if r == 0:
                    lits.append(v)
                elif r == 1:
                    lits.append(-v)
            if not lits:
                continue
            clause = Clause.of(lits)
            v = checker.verdict(clause)
            if v.initiation != brute_initiation(ts, clause):
                disagreements += 1
            if v.one_step != brute_one_step(ts, clause):
                disagreements += 1
            checked += 1
    assert checked >= 500, f"only {checked} clauses checked"
    assert disagreements == 0, f"{disagreements} disagreements with brute force"
    print(f"A3 PASS: {checked} clauses, 100% brute-force agreement")


def test_A4_sideload_soundness(a1_suite):
    instances, _ = a1_suite
    disagreements = 0
    n_safe = full_ten = 0
    for ts, result, _stats, _bfs_safe, _bfs_trace in instances:
        if not isinstance(result, Safe):
            continue
        n_safe += 1
        pool = [s.cube for s in sample_ctis(ts, n=64, seed=1)]
        pool = [c for c in pool if len(c)]
        accepted: list[Clause] = []
        seen: set[Clause] = set()
        checker = SanityChecker(ts)
        for sub_seed in range(50):
            if len(accepted) >= 10:
                break
            for cand in ablation_candidates(pool, seed=sub_seed):
                if cand in seen:
                    continue
                seen.add(cand)
                if checker.verdict(cand).accepted:
                    accepted.append(cand)
                    if len(accepted) >= 10:
                        break
        full_ten += len(accepted) == 10
        res2, stats2 = pdr.check(ts, sideload=accepted[:10])
        if not isinstance(res2, Safe):
            disagreements += 1
        assert stats2.sideload_offered == len(accepted[:10])
        assert stats2.sideload_accepted <= len(accepted[:10])
    assert disagreements == 0, f"{disagreements} verdict changes under side-load"
    assert full_ten >= 5, (
        f"only {full_ten} instances support the full 10-clause injection"
    )
    print(
        f"A4 PASS: {n_safe} safe instances re-checked under ablation side-load, "
        f"0 verdict changes ({full_ten} received the full 10 clauses)"
    )


def test_A5_constructed_speedup():
    sizes = list(range(4, 14))  # ten ring instances
    wins = 0
    reductions = []
    for n in sizes:
        ts = ts_of(_ring_aig(n))
        res_v, stats_v = pdr.check(ts)
        lv = ts.latch_vars
        # Known inductive invariant: no two adjacent cells ever both hold the
        # token (the shift preserves inter-token distances, so this is closed
        # under the transition and excludes the collision output).
        known = [Clause.of([-lv[i], -lv[(i + 1) % n]]) for i in range(n)]
        res_g, stats_g = pdr.check(ts, sideload=known)
        assert type(res_v) is type(res_g), f"ring {n}: verdicts differ"
        assert isinstance(res_g, Safe)
        assert stats_g.propagations == 1, (
            f"ring {n}: F_1 did not reach fixpoint at the first propagation"
        )
        reduction = 1.0 - stats_g.sat_queries / stats_v.sat_queries
        reductions.append(reduction)
        if reduction >= 0.30:
            wins += 1
    assert wins >= 8, f"only {wins}/10 instances reached a 30% query reduction"
    print(
        f"A5 PASS: {wins}/10 ring instances at >=30% fewer SAT queries "
        f"(min {min(reductions):.0%}, max {max(reductions):.0%}), "
        f"all verdicts identical, fixpoint at first propagation"
    )


def test_A6_scorer_numerics():
    # Part 1: analytic gradients vs central differences at 20 random points.
    D, H = 7, 5
    w = init_scorer_weights(D - 1, hidden=H, seed=3)
    rng = XorShift64(11)

    def rnd(m):
        return np.array([[2 * rng.next_float() - 1 for _ in range(D)] for _ in range(m)])

    batch = [
        TrainSample(x=rnd(3), y=np.array([1.0, 0.0, 1.0])),
        TrainSample(x=rnd(2), y=np.array([0.0, 0.0])),
        TrainSample(x=rnd(4), y=np.array([1.0, 1.0, 0.0, 1.0])),
    ]
    _, grads = _loss_and_grads(w, batch)
    tensors = w.tensors()
    flat_sizes = [t.size for t in tensors]
    total = sum(flat_sizes)
    pick = XorShift64(404)
    step = 1e-4
    worst = 0.0
    for _ in range(20):
        flat = pick.next_below(total)
        t_idx = 0
        while flat >= flat_sizes[t_idx]:
            flat -= flat_sizes[t_idx]
            t_idx += 1
        tensor = tensors[t_idx]
        idx = np.unravel_index(flat, tensor.shape)
        orig = tensor[idx]
        tensor[idx] = orig + step
        lp, _ = _loss_and_grads(w, batch, want_grads=False)
        tensor[idx] = orig - step
        lm, _ = _loss_and_grads(w, batch, want_grads=False)
        tensor[idx] = orig
        fd = (lp - lm) / (2 * step)
        an = grads[t_idx][idx]
        rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
        worst = max(worst, rel)
        assert rel <= 1e-3, (t_idx, idx, fd, an, rel)

    # Part 2: bitwise permutation invariance over 1000 cube shufflings.
    from pdrkit.embed import EmbeddingTable

    D2 = 34
    w2 = init_scorer_weights(D2 - 1, hidden=16, seed=9)
    lvars = (2, 4, 6, 8, 10, 12)
    aug = np.array(
        [[2 * rng.next_float() - 1 for _ in range(D2 - 1)] for _ in lvars],
        dtype=np.float32,
    )
    table = EmbeddingTable(
        latch_vars=lvars, raw=aug[:, :-1], augmented=aug, provenance="fallback"
    )
    lits = [2, -4, 6, -8, 10, -12]
    base = score_clause_literals(w2, Cube.of(lits), table)
    for trial in range(1000):
        shuffled = list(lits)
        XorShift64(trial).shuffle(shuffled)
        s = score_clause_literals(w2, Cube.of(shuffled), table)
        assert np.array_equal(s, base), f"shuffle {trial} not bitwise identical"

    # Part 3: 100% training accuracy on the 200-sample separable set.
    rng2 = XorShift64(77)
    samples = []
    for _ in range(200):
        m = 2 + rng2.next_below(4)
        x = np.array([[2 * rng2.next_float() - 1 for _ in range(D2)] for _ in range(m)])
        samples.append(TrainSample(x=x, y=(x[:, 0] > 0).astype(np.float64)))
    cfg = TrainConfig(lr=0.5, batch=200, epochs=500, seed=1, hidden=16)
    wt, curve = train_on_samples(samples, cfg)
    assert len(curve) - 1 <= 500
    acc_num = acc_den = 0
    for s in samples:
        pred = score_rows(wt, s.x) >= 0.5
        acc_num += int((pred == (s.y > 0.5)).sum())
        acc_den += len(s.y)
    assert acc_num == acc_den, f"accuracy {acc_num}/{acc_den} below 100%"
    print(
        f"A6 PASS: gradcheck worst rel err {worst:.2e} over 20 points; "
        f"1000 shuffles bitwise invariant; separable set at 100% "
        f"within {len(curve) - 1} epochs"
    )


def test_A7_flip_rate_exactness():
    b = AigBuilder()
    i0 = b.input()
    toggle = b.latch(init=0)
    b.set_next(toggle, AigBuilder.NOT(toggle))
    frozen = b.latch(init=1)
    b.set_next(frozen, frozen)
    follower = b.latch(init=0)
    b.set_next(follower, i0)
    b.bad(toggle)
    aig = b.build()
    for seed in (0, 1, 99):
        v = compute_flip_rates(aig, cycles=10000, seed=seed)
        assert v.rates[0] == 1.0, "toggle latch must flip every cycle exactly"
        assert v.rates[1] == 0.0, "frozen latch must never flip"
        assert abs(v.rates[2] - 0.5) <= 0.02, f"follower rate {v.rates[2]}"

    # Bit-parallel vs scalar: per-lane traces bitwise equal, and the packed
    # rate equals the exact flip total over all 64 scalar lanes.
    cycles = 40
    for seed in range(6):
        rnd = random_aig(seed, n_inputs=3, n_latches=5, n_ands=14)
        ptrace = _packed_trace(rnd, cycles, seed=seed + 1)
        for lane in (0, 31, 63):
            strace, _ = _scalar_lane_trace(rnd, cycles, seed=seed + 1, lane=lane)
            for t in range(cycles + 1):
                packed_bits = tuple(bool((wd >> lane) & 1) for wd in ptrace[t])
                assert packed_bits == strace[t], f"seed {seed} lane {lane} cycle {t}"
        v = compute_flip_rates(rnd, cycles=cycles, seed=seed + 1)
        totals = [0] * 5
        for lane in range(64):
            _, flips = _scalar_lane_trace(rnd, cycles, seed=seed + 1, lane=lane)
            for i, f in enumerate(flips):
                totals[i] += f
        for i, tot in enumerate(totals):
            assert v.rates[i] == tot / (64 * cycles)
    print(
        "A7 PASS: toggle=1.0 and frozen=0.0 exact, follower within +-0.02 of "
        "0.5 at T=10000, packed simulation bitwise-equal to 64 scalar lanes"
    )


def test_A8_one_time_embedding_contract():
    circuits = [random_aig(s, n_inputs=2, n_latches=5, n_ands=14) for s in (0, 1, 2)]
    graph_passes.reset()
    tables = []
    for i, aig in enumerate(circuits):
        g = build_graph(aig)
        table = structural_fallback_embed(g, seed=0, dim=16)
        assert graph_passes.count == i + 1  # exactly one pass per circuit
        rates = compute_flip_rates(aig, cycles=200, seed=0)
        tables.append(augment_with_flip_rate(table, rates))
    assert graph_passes.count == len(circuits)

    w = init_scorer_weights(tables[0].augmented.shape[1], hidden=16, seed=0)
    rng = XorShift64(55)
    before = graph_passes.count
    n_scored = 0
    while n_scored < 10_000:
        table = tables[n_scored % len(tables)]
        lv = table.latch_vars
        lits = [v if rng.next_bit() else -v for v in lv if rng.next_below(4) != 0]
        if not lits:
            continue
        scores = score_clause_literals(w, Cube.of(lits), table)
        assert len(scores) == len(set(abs(l) for l in lits))
        n_scored += 1
    assert graph_passes.count == before, "scoring must not traverse the graph"
    print(
        f"A8 PASS: {n_scored} clause scorings caused 0 graph passes; "
        f"embedding used exactly one pass per circuit ({len(circuits)} total)"
    )
