"""Seeded traffic generation, single-relay and line-network experiments.

Every stochastic quantity is drawn from a generator keyed by (seed, stream,
replication[, relay]); identical seeds reproduce identical runs bit for bit.
The line network is store-and-forward: packets a relay transmits in one slot
reach its neighbours' queues at the start of the next, and a coded broadcast
delivers one packet in each direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselines import (ThresholdPolicy, default_search_range, ski_rental_instance,
                        vector_threshold_run)
from .core import (ArrivalPattern, CostLedger, CostModel, RelayQueues,
                   run_policy, slot_cost)
from .oracle import opt_two_sided
from .scheduler import (OneSidedRandomizedPolicy, TwoSidedRandomizedPolicy,
                        WaitingCodingPolicy)

# RNG stream labels; each (seed, stream, replication, ...) tuple is independent.
TRAFFIC_STREAM = 0
POLICY_STREAM = 1
TRAIN_STREAM = 2
RATIO_STREAM = 3


def stream_rng(seed: int, stream: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, *key]))


@dataclass(frozen=True)
class TrafficSpec:
    """What arrives at the relay: a fixed pattern, noisy Bernoulli traffic,
    a buy-vs-wait instance, or a random small adversarial pattern."""

    kind: str = "bernoulli"
    horizon: int = 10_000
    p1: float = 0.5
    p2: float = 0.5
    sigma2: float = 0.0
    last_day: int = 1
    pattern: ArrivalPattern | None = None
    max_packets: int = 6
    seed: int = 0

    def __post_init__(self):
        kinds = ("pattern", "bernoulli", "ski-rental", "adversary")
        if self.kind not in kinds:
            raise ValueError(f"kind must be one of {kinds}")
        if self.kind == "pattern" and self.pattern is None:
            raise ValueError("pattern kind needs a pattern")
        if self.kind == "bernoulli" and self.horizon < 1:
            raise ValueError("bernoulli traffic needs a positive horizon")
        if self.sigma2 < 0:
            raise ValueError("variance must be non-negative")


def gen_bernoulli_truncated_gaussian(p1: float, p2: float, sigma2: float,
                                     horizon: int,
                                     rng: np.random.Generator) -> ArrivalPattern:
    """Per-slot Bernoulli arrivals whose success probabilities are fresh
    Gaussian draws around (p1, p2), truncated into [0, 1]."""
    sigma = math.sqrt(sigma2)

    def one_queue(p: float) -> np.ndarray:
        if sigma2 > 0:
            probs = np.clip(rng.normal(p, sigma, size=horizon), 0.0, 1.0)
        else:
            probs = np.clip(np.full(horizon, p), 0.0, 1.0)
        return (rng.random(horizon) < probs).astype(int)

    a1 = one_queue(p1)
    a2 = one_queue(p2)
    return ArrivalPattern(tuple(int(v) for v in a1), tuple(int(v) for v in a2))


def random_pattern(rng: np.random.Generator, max_per_side: int = 6,
                   horizon: int = 20, one_sided: bool = False) -> ArrivalPattern:
    """Small random adversarial instance for property suites."""
    n1 = int(rng.integers(0, max_per_side + 1))
    n2 = int(rng.integers(0, max_per_side + 1))
    a1 = np.zeros(horizon, dtype=int)
    a2 = np.zeros(horizon, dtype=int)
    if one_sided:
        a1[0] = n1
    else:
        for t in rng.integers(1, horizon + 1, size=n1):
            a1[t - 1] += 1
    for t in rng.integers(1, horizon + 1, size=n2):
        a2[t - 1] += 1
    return ArrivalPattern(tuple(int(v) for v in a1), tuple(int(v) for v in a2))


def generate_pattern(spec: TrafficSpec, rep: int,
                     stream: int = TRAFFIC_STREAM) -> ArrivalPattern:
    """Materialize one replication of a traffic spec."""
    if spec.kind == "pattern":
        return spec.pattern
    if spec.kind == "ski-rental":
        return ski_rental_instance(spec.last_day)
    rng = stream_rng(spec.seed, stream, rep)
    if spec.kind == "bernoulli":
        return gen_bernoulli_truncated_gaussian(spec.p1, spec.p2, spec.sigma2,
                                                spec.horizon, rng)
    return random_pattern(rng, spec.max_packets, spec.horizon)


def bernoulli_arrays(spec: TrafficSpec, replications: int,
                     stream: int = TRAFFIC_STREAM) -> tuple[np.ndarray, np.ndarray]:
    """Stacked per-replication arrival rows, row r identical to
    ``generate_pattern(spec, r, stream)``."""
    rows1, rows2 = [], []
    for rep in range(replications):
        p = generate_pattern(spec, rep, stream)
        rows1.append(p.a1)
        rows2.append(p.a2)
    return np.array(rows1, dtype=np.int64), np.array(rows2, dtype=np.int64)


@dataclass
class RelayRunResult:
    """Per-replication outcomes of one policy on the single relay."""

    policy: str
    seed: int
    costs: list[float]
    coded: list[int]
    max_uncoded_in_slot: int = 0
    max_tx_in_slot: int = 0
    wasted_crossings: int = 0
    leaks: int = 0
    ledgers: list[CostLedger] | None = None

    @property
    def mean_cost(self) -> float:
        return sum(self.costs) / len(self.costs)

    @property
    def mean_coded(self) -> float:
        return sum(self.coded) / len(self.coded)

    def stderr_coded(self) -> float:
        n = len(self.coded)
        if n < 2:
            return 0.0
        m = self.mean_coded
        var = sum((v - m) ** 2 for v in self.coded) / (n - 1)
        return math.sqrt(var / n)


def run_single_relay(spec: TrafficSpec, cm: CostModel,
                     policy: str | ThresholdPolicy, replications: int, *,
                     constrained: bool = True,
                     keep_ledgers: bool = False) -> RelayRunResult:
    """Simulate one policy over seeded replications of the traffic.

    ``policy`` is either the string ``"proposed"`` (the randomized
    waiting-queue scheduler, one fresh ``u`` per replication) or a
    ``ThresholdPolicy`` run on the original queues.
    """
    label = policy if isinstance(policy, str) else f"threshold({policy.theta1},{policy.theta2})"
    result = RelayRunResult(policy=label, seed=spec.seed, costs=[], coded=[],
                            ledgers=[] if keep_ledgers else None)
    for rep in range(replications):
        pattern = generate_pattern(spec, rep)
        if policy == "proposed":
            u = float(stream_rng(spec.seed, POLICY_STREAM, rep).random())
            pol = WaitingCodingPolicy(cm, u, constrained=constrained)
        elif isinstance(policy, ThresholdPolicy):
            pol = policy
        else:
            raise ValueError(f"unknown policy: {policy!r}")
        ledger = run_policy(pattern, pol, cm)
        result.costs.append(float(ledger.total))
        result.coded.append(ledger.coded)
        result.leaks += ledger.leaked
        if isinstance(pol, WaitingCodingPolicy):
            result.max_uncoded_in_slot = max(result.max_uncoded_in_slot,
                                             pol.max_uncoded_in_slot)
            result.max_tx_in_slot = max(result.max_tx_in_slot, pol.max_tx_in_slot)
            result.wasted_crossings += pol.wasted_crossings
        if keep_ledgers:
            result.ledgers.append(ledger)
    return result


def optimized_threshold_policy(spec: TrafficSpec, cm: CostModel,
                               replications: int, *,
                               search_range=None, max_tx: int | None = 1
                               ) -> tuple[ThresholdPolicy, list[tuple[int, int, float]]]:
    """Exhaustive threshold search trained on its own replication stream,
    standing in for a policy that knows the traffic statistics."""
    if search_range is None:
        search_range = default_search_range(cm)
    values = list(search_range)
    if not values:
        raise ValueError("threshold search range is empty")
    combos = [(t1, t2) for t1 in values for t2 in values]
    a1, a2 = bernoulli_arrays(spec, replications, stream=TRAIN_STREAM)
    t_end = spec.horizon + cm.floor_c + 1
    costs, _ = vector_threshold_run(a1, a2, t_end, combos, float(cm.c),
                                    max_tx=max_tx)
    means = costs.mean(axis=1)
    best_k = int(np.argmin(means))  # first minimum = lexicographically smallest
    rows = [(t1, t2, float(m)) for (t1, t2), m in zip(combos, means)]
    return ThresholdPolicy(*combos[best_k], max_tx=max_tx), rows


@dataclass(frozen=True)
class LineNetwork:
    """Relays in a line; external packets enter at the two end relays and
    every transmission takes one slot to reach the neighbouring queue."""

    relay_count: int
    cost_models: tuple[CostModel, ...]
    p1: float = 0.5
    p2: float = 0.5
    sigma2: float = 0.0
    horizon: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.relay_count < 1:
            raise ValueError("need at least one relay")
        if len(self.cost_models) != self.relay_count:
            raise ValueError("need one cost model per relay")

    def drain_end(self) -> int:
        span = max(cm.floor_c for cm in self.cost_models)
        return self.horizon + span + self.relay_count + 1


@dataclass
class LineRunResult:
    policy: str
    seed: int
    totals: list[float]
    per_relay: list[list[float]]
    coded: list[int]
    max_tx_in_slot: int = 0

    @property
    def mean_total(self) -> float:
        return sum(self.totals) / len(self.totals)

    @property
    def mean_coded(self) -> float:
        return sum(self.coded) / len(self.coded)


def run_line_network(net: LineNetwork, policy: str | list[ThresholdPolicy],
                     replications: int) -> LineRunResult:
    """Simulate the whole line, one independent policy instance per relay.

    Each slot first lands the previous slot's deliveries plus external
    arrivals, then every relay decides from its own queues alone; at most
    one transmission per relay per slot.
    """
    r = net.relay_count
    label = policy if isinstance(policy, str) else "threshold"
    result = LineRunResult(policy=label, seed=net.seed, totals=[], per_relay=[],
                           coded=[])
    ext_spec = TrafficSpec(kind="bernoulli", horizon=net.horizon, p1=net.p1,
                           p2=net.p2, sigma2=net.sigma2, seed=net.seed)
    t_end = net.drain_end()
    for rep in range(replications):
        ext = generate_pattern(ext_spec, rep)
        if policy == "proposed":
            policies = [
                WaitingCodingPolicy(net.cost_models[k],
                                    float(stream_rng(net.seed, POLICY_STREAM, rep, k).random()),
                                    constrained=True)
                for k in range(r)
            ]
        else:
            if len(policy) != r:
                raise ValueError("need one threshold policy per relay")
            policies = list(policy)
        q1 = [0] * r
        q2 = [0] * r
        in1 = [0] * r
        in2 = [0] * r
        cost_k = [0.0] * r
        coded_total = 0
        for t in range(1, t_end + 1):
            e1, e2 = ext.arrivals(t)
            arr1 = [in1[k] + (e1 if k == 0 else 0) for k in range(r)]
            arr2 = [in2[k] + (e2 if k == r - 1 else 0) for k in range(r)]
            nxt1 = [0] * r
            nxt2 = [0] * r
            for k in range(r):
                q1[k] += arr1[k]
                q2[k] += arr2[k]
                queues = RelayQueues(q1[k], q2[k])
                d = policies[k].decide(queues, (arr1[k], arr2[k]), t)
                if d.total > 1:
                    raise ValueError("line-network policies must respect one tx per slot")
                tx, hold = slot_cost(queues, d, net.cost_models[k])
                cost_k[k] += float(tx + hold)
                coded_total += d.coded
                rightward = d.coded + d.uncoded1
                leftward = d.coded + d.uncoded2
                if k + 1 < r:
                    nxt1[k + 1] += rightward
                if k - 1 >= 0:
                    nxt2[k - 1] += leftward
                q1[k] -= d.coded + d.uncoded1
                q2[k] -= d.coded + d.uncoded2
            in1, in2 = nxt1, nxt2
        result.per_relay.append(cost_k)
        result.totals.append(sum(cost_k))
        result.coded.append(coded_total)
        if policy == "proposed":
            result.max_tx_in_slot = max([result.max_tx_in_slot] +
                                        [p.max_tx_in_slot for p in policies])
    return result


def vector_line_run(a1_ext: np.ndarray, a2_ext: np.ndarray, t_end: int,
                    combos: list[tuple[int, int]], relay_count: int,
                    c: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized line network under shared per-side thresholds.

    Lane layout is (combo, replication, relay); externals enter at the end
    columns, coded/uncoded deliveries shift one column per slot.  Returns
    per-lane network cost and coded counts summed over relays, shaped
    (combos, replications).
    """
    n_rep, horizon = a1_ext.shape
    k = len(combos)
    t1 = np.array([a for a, _ in combos], dtype=np.int64)[:, None, None]
    t2 = np.array([b for _, b in combos], dtype=np.int64)[:, None, None]
    q1 = np.zeros((k, n_rep, relay_count), dtype=np.int64)
    q2 = np.zeros_like(q1)
    in1 = np.zeros_like(q1)
    in2 = np.zeros_like(q1)
    cost = np.zeros((k, n_rep))
    coded_total = np.zeros((k, n_rep), dtype=np.int64)
    zero = np.zeros(n_rep, dtype=np.int64)
    for t in range(t_end):
        e1 = a1_ext[:, t] if t < horizon else zero
        e2 = a2_ext[:, t] if t < horizon else zero
        q1 += in1
        q2 += in2
        q1[:, :, 0] += e1
        q2[:, :, -1] += e2
        both = (q1 > 0) & (q2 > 0)
        coded = both.astype(np.int64)
        rem1 = q1 - coded
        rem2 = q2 - coded
        idle = ~both
        u1 = (idle & (rem2 == 0) & (rem1 > t1)).astype(np.int64)
        u2 = (idle & (rem1 == 0) & (rem2 > t2)).astype(np.int64)
        q1 = rem1 - u1
        q2 = rem2 - u2
        cost += (c * (coded + u1 + u2) + q1 + q2).sum(axis=2)
        coded_total += coded.sum(axis=2)
        rightward = coded + u1
        leftward = coded + u2
        in1 = np.zeros_like(q1)
        in2 = np.zeros_like(q1)
        in1[:, :, 1:] = rightward[:, :, :-1]
        in2[:, :, :-1] = leftward[:, :, 1:]
    return cost, coded_total


def sub_optimized_thresholds(net: LineNetwork, replications: int, *,
                             search_range=None
                             ) -> tuple[tuple[int, int], list[tuple[int, int, float]]]:
    """Exhaustive search over one shared threshold per direction.

    All relays must share a cost model.  Trained on its own replication
    stream, like the single-relay optimizer.
    """
    cms = set(cm.c for cm in net.cost_models)
    if len(cms) != 1:
        raise ValueError("shared-threshold search needs a uniform cost model")
    cm = net.cost_models[0]
    if search_range is None:
        search_range = default_search_range(cm)
    values = list(search_range)
    if not values:
        raise ValueError("threshold search range is empty")
    combos = [(t1, t2) for t1 in values for t2 in values]
    ext_spec = TrafficSpec(kind="bernoulli", horizon=net.horizon, p1=net.p1,
                           p2=net.p2, sigma2=net.sigma2, seed=net.seed)
    a1, a2 = bernoulli_arrays(ext_spec, replications, stream=TRAIN_STREAM)
    costs, _ = vector_line_run(a1, a2, net.drain_end(), combos,
                               net.relay_count, float(cm.c))
    means = costs.mean(axis=1)
    best_k = 0
    for k in range(1, len(combos)):
        if means[k] < means[best_k]:
            best_k = k
    rows = [(t1, t2, float(m)) for (t1, t2), m in zip(combos, means)]
    return combos[best_k], rows


@dataclass
class RatioStats:
    """Per-pattern mean competitive ratios of a randomized policy."""

    per_pattern: list[float]
    infinite: int = 0
    wasted_crossings: int = 0
    max_uncoded_in_slot: int = 0
    max_tx_in_slot: int = 0
    leaks: int = 0

    @property
    def max_ratio(self) -> float:
        return max(self.per_pattern) if self.per_pattern else 1.0

    @property
    def mean_ratio(self) -> float:
        return sum(self.per_pattern) / len(self.per_pattern)


def empirical_ratio(patterns: list[ArrivalPattern], cm: CostModel, *,
                    u_draws: int, seed: int, model: str = "two-sided",
                    stratified: bool = True) -> RatioStats:
    """Monte-Carlo mean of policy cost over offline optimum per pattern.

    Costs are reduced ones (uncoded waiting-side transmissions plus
    waiting-side holding), matching what the offline optimum prices.  A
    pattern with zero optimum reports ratio one if the policy also never
    pays, otherwise it is flagged as infinite.  ``stratified`` places one
    uniform draw in each of ``u_draws`` equal bins, which keeps the mean
    unbiased while sharply cutting its variance.
    """
    stats = RatioStats(per_pattern=[])
    # optima stay exact; the many policy runs use float arithmetic
    sim_cm = cm if not cm.exact else CostModel(float(cm.c))
    for pi, pattern in enumerate(patterns):
        opt = float(opt_two_sided(pattern, cm))
        rng = stream_rng(seed, RATIO_STREAM, pi)
        if stratified:
            us = (np.arange(u_draws) + rng.random(u_draws)) / u_draws
        else:
            us = rng.random(u_draws)
        total = 0.0
        for u in us:
            if model == "one-sided":
                pol = OneSidedRandomizedPolicy(pattern.n1_total, sim_cm, float(u))
            elif model == "two-sided":
                pol = TwoSidedRandomizedPolicy(sim_cm, float(u))
            elif model == "constrained":
                pol = TwoSidedRandomizedPolicy(sim_cm, float(u), constrained=True)
            else:
                raise ValueError(f"unknown model: {model!r}")
            ledger = run_policy(pattern, pol, sim_cm)
            total += float(ledger.reduced_cost(sim_cm))
            stats.wasted_crossings += pol.wasted_crossings
            stats.max_uncoded_in_slot = max(stats.max_uncoded_in_slot,
                                            pol.max_uncoded_in_slot)
            stats.max_tx_in_slot = max(stats.max_tx_in_slot, pol.max_tx_in_slot)
            stats.leaks += ledger.leaked
        mean_cost = total / u_draws
        if opt == 0:
            if mean_cost == 0:
                stats.per_pattern.append(1.0)
            else:
                stats.infinite += 1
                stats.per_pattern.append(math.inf)
        else:
            stats.per_pattern.append(mean_cost / opt)
    return stats
