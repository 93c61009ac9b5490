"""Named verification checks: golden instances and randomized property
suites over the oracles, the fractional solvers and the schedulers.

Each check returns a ``CheckResult``; the CLI ``verify`` command runs them
all and fails on the first false one, printing the offending detail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (ArrivalPattern, CostModel, Decision, RelayQueues,
                   queue_step, run_policy)
from .netsim import empirical_ratio, random_pattern, stream_rng
from .oracle import (extract_intervals, identify_constraints, opt_one_sided,
                     opt_two_sided, opt_two_sided_bruteforce,
                     opt_two_sided_closed_form)
from .primaldual import (compute_normalizer, competitive_bound,
                         one_sided_violations, run_one_sided, run_two_sided,
                         two_sided_violations)
from .scheduler import (OneSidedRandomizedPolicy, TwoSidedRandomizedPolicy,
                        spread_arrivals)

EXACT_COSTS = (2, 3, 5, 8)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = f"  [{self.detail}]" if (self.detail and not self.passed) else ""
        return f"{status}  {self.name}{tail}"


def _result(name: str, failures: list[str]) -> CheckResult:
    return CheckResult(name, not failures, "; ".join(failures[:4]))


def check_golden_normalizer() -> CheckResult:
    fails = []
    if compute_normalizer(CostModel(2)).value != Fraction(5, 4):
        fails.append("normalizer(2) != 5/4")
    if compute_normalizer(CostModel(Fraction(3, 2))).value != Fraction(2, 3):
        fails.append("normalizer(3/2) != 2/3")
    if abs(float(compute_normalizer(CostModel(10)).value) - 1.5937424601) > 1e-9:
        fails.append("normalizer(10) off")
    if competitive_bound(CostModel(2)) != Fraction(9, 5):
        fails.append("bound(2) != 9/5")
    return _result("golden: update normalizer and ratio bound", fails)


def check_golden_queue_dynamics() -> CheckResult:
    fails = []
    q = RelayQueues(5, 3)
    d = Decision.from_total(q, 4)
    if (d.coded, d.uncoded1, d.uncoded2) != (3, 1, 0):
        fails.append(f"greedy split gave {d}")
    after = queue_step(q, d, (2, 0))
    if (after.q1, after.q2) != (3, 0):
        fails.append(f"queue step gave {after}")
    return _result("golden: queue dynamics example", fails)


def check_golden_decoupled_updates() -> CheckResult:
    """Two packets arriving in slots 1 and 3, cost 2: the commitments must
    run 2/5 then 1 for each packet, one certificate per slot 1..4, and the
    primal objective must sit exactly on the guarantee."""
    fails = []
    pattern = ArrivalPattern((1, 0, 1), (0, 0, 0))
    cm = CostModel(2)
    state = run_two_sided(pattern, cm, record_trace=True)
    rows = [(t, i, x) for (t, i, x, _z, _w) in state.trace]
    want = [(1, 1, Fraction(2, 5)), (2, 1, Fraction(1)),
            (3, 2, Fraction(2, 5)), (4, 2, Fraction(1))]
    if rows != want:
        fails.append(f"update trajectory {rows}")
    primal, dual = state.objectives()
    if primal != Fraction(36, 5) or dual != 4:
        fails.append(f"objectives ({primal}, {dual})")
    opt = opt_two_sided(pattern, cm)
    if primal != competitive_bound(cm) * opt:
        fails.append("guarantee not tight on this instance")
    return _result("golden: decoupled fractional updates", fails)


def check_golden_interval_optimum() -> CheckResult:
    """Arrivals at queue 1 in slots 1 and 2, one queue-2 arrival in slot 3,
    cost 4: active sets {1}, {1,2}, {1}; optimum 5 on both oracle routes."""
    fails = []
    pattern = ArrivalPattern((1, 1, 0), (0, 0, 1))
    cm = CostModel(4)
    trace = identify_constraints(pattern)
    sets = [set(s) for s in trace.sets]
    if sets != [{1}, {1, 2}, {1}]:
        fails.append(f"active sets {sets}")
    iv = extract_intervals(trace, pattern, cm)
    if iv.alpha != (1, 2) or iv.beta[1] != 2 or iv.beta[0] < 1 + cm.floor_c:
        fails.append(f"intervals {iv}")
    closed = opt_two_sided_closed_form(iv, cm)
    brute = opt_two_sided_bruteforce(pattern, cm)
    if closed != 5 or brute != 5:
        fails.append(f"optima closed={closed} brute={brute}")
    return _result("golden: interval closed-form optimum", fails)


def check_oracle_agreement(instances: int, seed: int = 20260810) -> CheckResult:
    """Closed form equals exhaustive matching; the initial-burst oracle
    agrees on its own instances; extra queue-2 traffic never hurts."""
    rng = stream_rng(seed, 100)
    fails = []
    for k in range(instances):
        cm = CostModel(int(rng.choice(EXACT_COSTS)))
        pattern = random_pattern(rng, max_per_side=6, horizon=20)
        closed = opt_two_sided(pattern, cm)
        brute = opt_two_sided_bruteforce(pattern, cm)
        if closed != brute:
            fails.append(f"#{k}: closed {closed} != brute {brute} on {pattern} c={cm.c}")
            continue
        if k % 3 == 0:
            burst = random_pattern(rng, max_per_side=min(6, cm.floor_c),
                                   horizon=20, one_sided=True)
            one, _x = opt_one_sided(burst, cm)
            if one != opt_two_sided(burst, cm):
                fails.append(f"#{k}: burst oracle {one} != closed form")
        if k % 3 == 1 and pattern.horizon:
            t = int(rng.integers(1, pattern.horizon + 1))
            a2 = list(pattern.a2)
            a2[t - 1] += 1
            more = ArrivalPattern(pattern.a1, tuple(a2))
            if opt_two_sided(more, cm) > closed:
                fails.append(f"#{k}: extra arrival raised the optimum")
    return _result(f"oracle agreement ({instances} instances)", fails)


def one_sided_continuous_minimum(pattern: ArrivalPattern, cm: CostModel,
                                 iters: int = 200) -> float:
    """Real-valued minimum of the initial-burst objective by ternary search;
    independent of the integer enumeration it cross-checks."""
    import numpy as np

    n1 = pattern.n1_total
    t_end = pattern.horizon + cm.floor_c + 1
    shortfall = np.array([n1 - pattern.cum2(t) for t in range(1, t_end + 1)],
                         dtype=float)
    c = float(cm.c)

    def f(x: float) -> float:
        return c * x + np.maximum(shortfall - x, 0.0).sum()

    lo, hi = float(max(0, n1 - pattern.n2_total)), float(n1)
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    return f((lo + hi) / 2)


def check_one_sided_integrality(instances: int, seed: int = 20260810) -> CheckResult:
    """The relaxed problem's real minimum matches the integer minimum."""
    rng = stream_rng(seed, 101)
    fails = []
    for k in range(instances):
        cm = CostModel(int(rng.choice(EXACT_COSTS)))
        pattern = random_pattern(rng, max_per_side=min(6, cm.floor_c),
                                 horizon=20, one_sided=True)
        integral, _x = opt_one_sided(pattern, cm)
        cont = one_sided_continuous_minimum(pattern, cm)
        if abs(cont - float(integral)) > 1e-9:
            fails.append(f"#{k}: continuous {cont} vs integral {integral}")
    return _result(f"relaxation integrality ({instances} instances)", fails)


def check_feasibility(instances: int, seed: int = 20260810) -> CheckResult:
    """Both fractional solvers always emit feasible primal and dual points."""
    rng = stream_rng(seed, 102)
    fails = []
    for k in range(instances):
        cm = CostModel(int(rng.choice(EXACT_COSTS)))
        two = random_pattern(rng, max_per_side=6, horizon=20)
        state2 = run_two_sided(two, cm, record_trace=True)
        fails += [f"#{k} two-sided {v}" for v in two_sided_violations(state2)]
        one = random_pattern(rng, max_per_side=min(6, cm.floor_c), horizon=20,
                             one_sided=True)
        state1 = run_one_sided(one, cm)
        fails += [f"#{k} one-sided {v}" for v in one_sided_violations(state1, one)]
    return _result(f"primal/dual feasibility ({instances} instances)", fails)


def check_fractional_ratio(instances: int, seed: int = 20260810) -> CheckResult:
    """Primal objective never exceeds the guarantee times the offline
    optimum, with exact arithmetic; per-slot increments match too."""
    rng = stream_rng(seed, 103)
    fails = []
    for k in range(instances):
        cm = CostModel(int(rng.choice(EXACT_COSTS)))
        bound = competitive_bound(cm)
        two = random_pattern(rng, max_per_side=6, horizon=20)
        state2 = run_two_sided(two, cm)
        primal, dual = state2.objectives()
        opt = opt_two_sided(two, cm)
        if primal > bound * opt:
            fails.append(f"#{k} two-sided: {primal} > {bound}*{opt}")
        for dp, dd in zip(state2.primal_increments, state2.dual_increments):
            if dp != bound * dd:
                fails.append(f"#{k} two-sided increment {dp} != {bound}*{dd}")
                break
        one = random_pattern(rng, max_per_side=min(6, cm.floor_c), horizon=20,
                             one_sided=True)
        state1 = run_one_sided(one, cm)
        primal1, _ = state1.objectives()
        opt1, _x = opt_one_sided(one, cm)
        if primal1 > bound * opt1:
            fails.append(f"#{k} one-sided: {primal1} > {bound}*{opt1}")
    return _result(f"fractional ratio bound ({instances} instances)", fails)


def check_freeze_and_caps(instances: int, seed: int = 20260810) -> CheckResult:
    """No packet is updated more than floor(c) times; certificates stop by
    slot floor(c) in the initial-burst model; the randomized schedulers stay
    within their per-slot transmission caps and never waste a crossing."""
    rng = stream_rng(seed, 104)
    fails = []
    for k in range(instances):
        cm = CostModel(int(rng.choice(EXACT_COSTS)))
        two = random_pattern(rng, max_per_side=6, horizon=15)
        state2 = run_two_sided(two, cm)
        if any(p.updates > cm.floor_c for p in state2.packets):
            fails.append(f"#{k}: packet updated beyond floor(c)")
        one = random_pattern(rng, max_per_side=min(6, cm.floor_c), horizon=15,
                             one_sided=True)
        state1 = run_one_sided(one, cm)
        if any(n > cm.floor_c for n in state1.update_counts):
            fails.append(f"#{k}: burst packet updated beyond floor(c)")
        if any(w for w in state1.w[cm.floor_c:]):
            fails.append(f"#{k}: certificate after slot floor(c)")
        u = float(rng.random())
        pol1 = OneSidedRandomizedPolicy(one.n1_total, cm, u)
        led1 = run_policy(one, pol1, cm)
        if pol1.max_uncoded_in_slot > 3:
            fails.append(f"#{k}: {pol1.max_uncoded_in_slot} uncoded in one slot")
        if pol1.wasted_crossings:
            fails.append(f"#{k}: burst scheduler wasted a crossing")
        if led1.leaked:
            fails.append(f"#{k}: burst scheduler left {led1.leaked} packets")
        spread = spread_arrivals(two)
        pol2 = TwoSidedRandomizedPolicy(cm, u, constrained=True)
        led2 = run_policy(spread, pol2, cm)
        if pol2.max_tx_in_slot > 1:
            fails.append(f"#{k}: constrained scheduler sent {pol2.max_tx_in_slot}")
        if pol2.wasted_crossings:
            fails.append(f"#{k}: constrained scheduler wasted a crossing")
        served = 2 * led2.coded + led2.uncoded1 + led2.uncoded2
        if served + led2.leaked != spread.n1_total + spread.n2_total:
            fails.append(f"#{k}: packet conservation broken")
    return _result(f"freeze and per-slot caps ({instances} instances)", fails)


def check_expected_ratio(seed: int = 20260810, u_draws: int = 400,
                         c_values=(2, 10), patterns_per_family: int = 12,
                         tolerance: float = 0.02) -> CheckResult:
    """Monte-Carlo mean cost over optimum stays within the guarantee plus a
    sampling tolerance, on buy-vs-wait sweeps and random instances."""
    from .baselines import ski_rental_instance

    fails = []
    for c in c_values:
        cm = CostModel(c)
        bound = float(competitive_bound(cm)) + tolerance
        skis = [ski_rental_instance(t) for t in range(1, 3 * c + 1)]
        s = empirical_ratio(skis, cm, u_draws=u_draws, seed=seed, model="one-sided")
        if s.infinite or s.max_ratio > bound:
            fails.append(f"ski c={c}: max ratio {s.max_ratio:.4f} > {bound:.4f}")
        rng = stream_rng(seed, 105, c)
        pats = [random_pattern(rng, max_per_side=5, horizon=15)
                for _ in range(patterns_per_family)]
        s2 = empirical_ratio(pats, cm, u_draws=u_draws, seed=seed + 1,
                             model="two-sided")
        if s2.infinite or s2.max_ratio > bound:
            fails.append(f"two-sided c={c}: max ratio {s2.max_ratio:.4f} > {bound:.4f}")
    return _result("expected competitive ratio (Monte Carlo)", fails)


def run_all(quick: bool = True, seed: int = 20260810) -> list[CheckResult]:
    n = 300 if quick else 10_000
    draws = 1000 if quick else 10_000
    return [
        check_golden_normalizer(),
        check_golden_queue_dynamics(),
        check_golden_decoupled_updates(),
        check_golden_interval_optimum(),
        check_oracle_agreement(n, seed),
        check_one_sided_integrality(n, seed),
        check_feasibility(max(100, n // 10), seed),
        check_fractional_ratio(max(100, n // 10), seed),
        check_freeze_and_caps(max(100, n // 10), seed),
        check_expected_ratio(seed, u_draws=draws),
    ]
