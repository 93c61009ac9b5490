"""Threshold comparison policies and the buy-vs-wait special case.

Threshold policies code whatever pairs exist and send one uncoded packet
only when a lone non-empty queue has grown past its threshold.  The
optimizer is a plain exhaustive grid search; a vectorized kernel makes the
grid-times-replications sweep affordable and is checked against the scalar
engine in the tests.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .core import (ArrivalPattern, Cost, CostModel, Decision, RelayQueues,
                   drain_horizon, run_policy)


@dataclass(frozen=True)
class ThresholdPolicy:
    """Per-queue backlog thresholds; ``max_tx`` caps transmissions per slot."""

    theta1: int
    theta2: int
    max_tx: int | None = None

    def __post_init__(self):
        if self.theta1 < 0 or self.theta2 < 0:
            raise ValueError("thresholds must be non-negative")

    def decide(self, queues: RelayQueues, arrivals: tuple[int, int],
               slot: int) -> Decision:
        cap = self.max_tx if self.max_tx is not None else queues.total
        coded = min(queues.q1, queues.q2, cap)
        rem1 = queues.q1 - coded
        rem2 = queues.q2 - coded
        if cap - coded > 0:
            if rem1 > 0 and rem2 == 0 and rem1 > self.theta1:
                return Decision(coded=coded, uncoded1=1)
            if rem2 > 0 and rem1 == 0 and rem2 > self.theta2:
                return Decision(coded=coded, uncoded2=1)
        return Decision(coded=coded)


def c_threshold_policy(cm: CostModel, max_tx: int | None = 1) -> ThresholdPolicy:
    """The fixed policy with both thresholds equal to the transmission cost."""
    level = math.floor(cm.c)
    return ThresholdPolicy(theta1=level, theta2=level, max_tx=max_tx)


def default_search_range(cm: CostModel) -> range:
    """Thresholds 0..ceil(c); waiting longer than the transmission cost can
    never pay for itself, so larger thresholds are dominated."""
    return range(0, math.ceil(cm.c) + 1)


def threshold_sweep_costs(patterns: list[ArrivalPattern], cm: CostModel,
                          combos: list[tuple[int, int]], *,
                          max_tx: int | None = 1) -> np.ndarray:
    """Mean total cost of each threshold combination over the patterns.

    All patterns must share one horizon so the sweep can run vectorized;
    ``vector_threshold_run`` documents the kernel.
    """
    if not patterns:
        raise ValueError("need at least one pattern")
    horizons = {p.horizon for p in patterns}
    if len(horizons) == 1:
        a1 = np.array([p.a1 for p in patterns], dtype=np.int64)
        a2 = np.array([p.a2 for p in patterns], dtype=np.int64)
        t_end = drain_horizon(patterns[0], cm)
        costs, _coded = vector_threshold_run(a1, a2, t_end, combos, float(cm.c),
                                             max_tx=max_tx)
        return costs.mean(axis=1)
    out = np.empty(len(combos))
    for k, (t1, t2) in enumerate(combos):
        tot = 0.0
        for p in patterns:
            policy = ThresholdPolicy(t1, t2, max_tx=max_tx)
            tot += float(run_policy(p, policy, cm).total)
        out[k] = tot / len(patterns)
    return out


def vector_threshold_run(a1: np.ndarray, a2: np.ndarray, t_end: int,
                         combos: list[tuple[int, int]], c: float, *,
                         max_tx: int | None = 1
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Simulate every (combo, pattern) lane of a threshold policy at once.

    ``a1``/``a2`` hold one row of per-slot arrivals per pattern.  Returns
    total costs and coded-transmission counts, both shaped (combos,
    patterns).  Matches the scalar engine exactly for integer costs.
    """
    if max_tx not in (None, 1):
        raise ValueError("vector kernel supports max_tx of 1 or None")
    n_pat, horizon = a1.shape
    t1col = np.array([t for t, _ in combos], dtype=np.int64)[:, None]
    t2col = np.array([t for _, t in combos], dtype=np.int64)[:, None]
    q1 = np.zeros((len(combos), n_pat), dtype=np.int64)
    q2 = np.zeros_like(q1)
    cost = np.zeros((len(combos), n_pat))
    coded_total = np.zeros_like(q1)
    zero_col = np.zeros(n_pat, dtype=np.int64)
    for t in range(t_end):
        arr1 = a1[:, t] if t < horizon else zero_col
        arr2 = a2[:, t] if t < horizon else zero_col
        q1 += arr1
        q2 += arr2
        if max_tx == 1:
            coded = ((q1 > 0) & (q2 > 0)).astype(np.int64)
            budget_left = coded == 0
        else:
            coded = np.minimum(q1, q2)
            budget_left = True
        rem1 = q1 - coded
        rem2 = q2 - coded
        u1 = (budget_left & (rem2 == 0) & (rem1 > t1col)).astype(np.int64)
        u2 = (budget_left & (rem1 == 0) & (rem2 > t2col)).astype(np.int64)
        q1 = rem1 - u1
        q2 = rem2 - u2
        cost += c * (coded + u1 + u2) + q1 + q2
        coded_total += coded
    return cost, coded_total


def optimize_thresholds(patterns: list[ArrivalPattern], cm: CostModel,
                        search_range: range | list[int] | None = None, *,
                        max_tx: int | None = 1
                        ) -> tuple[ThresholdPolicy, list[tuple[int, int, float]]]:
    """Exhaustive threshold search minimizing mean total cost.

    Returns the winning policy and the full sweep table; ties go to the
    lexicographically smallest (theta1, theta2).
    """
    if search_range is None:
        search_range = default_search_range(cm)
    values = list(search_range)
    if not values:
        raise ValueError("threshold search range is empty")
    combos = [(t1, t2) for t1 in values for t2 in values]
    means = threshold_sweep_costs(patterns, cm, combos, max_tx=max_tx)
    best_k = 0
    for k in range(1, len(combos)):
        if means[k] < means[best_k]:
            best_k = k
    rows = [(t1, t2, float(m)) for (t1, t2), m in zip(combos, means)]
    best = ThresholdPolicy(*combos[best_k], max_tx=max_tx)
    return best, rows


def threshold_sweep_csv(rows: list[tuple[int, int, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta1", "theta2", "mean_cost"])
    for t1, t2, cost in rows:
        w.writerow([t1, t2, repr(cost)])
    return buf.getvalue()


def ski_rental_instance(last_day: int) -> ArrivalPattern:
    """Single packet waiting from slot 1 for a partner arriving on the last
    day: the buy-or-keep-renting decision problem as a relay pattern.

    The packet waiting corresponds to renting (one cost unit per slot), an
    uncoded transmission to buying (the full transmission cost), and the
    slot-``last_day`` partner to the end of the season.
    """
    if last_day < 1:
        raise ValueError("last day must be at least 1")
    a1 = [0] * last_day
    a2 = [0] * last_day
    a1[0] = 1
    a2[last_day - 1] = 1
    return ArrivalPattern(tuple(a1), tuple(a2))
