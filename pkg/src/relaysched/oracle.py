"""Exact offline optima for the relay scheduling problem.

Two independent routes are kept side by side: a closed form driven by the
constraint-interval construction, and a small exhaustive matching oracle.
They must agree on every instance; the test suite leans on that agreement.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .core import ArrivalPattern, Cost, CostModel, drain_horizon


class InstanceTooLargeError(ValueError):
    """The exhaustive oracle was asked for more packets than it enumerates."""


@dataclass(frozen=True)
class ConstraintSetTrace:
    """Per-slot active packet sets plus each packet's removal slot.

    Queue-1 packets are numbered 1..N1 in arrival order (ties broken by
    insertion order within a slot).  ``sets[t-1]`` is the active set at the
    end of slot ``t``'s maintenance; a queue-2 arrival removes the most
    recent (largest-index) packet still present.
    """

    arrival_slots: tuple[int, ...]
    removal_slots: tuple[int | None, ...]
    sets: tuple[frozenset[int], ...]
    removal_events: tuple[tuple[int, int, int], ...]  # (slot, index, max at removal)

    @property
    def n1(self) -> int:
        return len(self.arrival_slots)

    def active_set(self, slot: int) -> frozenset[int]:
        """Active set for any slot, holding flat past the recorded horizon."""
        if slot <= 0 or not self.sets:
            return frozenset()
        return self.sets[min(slot, len(self.sets)) - 1]


@dataclass(frozen=True)
class ConstraintIntervals:
    """Per-packet waiting interval [alpha, beta] in slots.

    ``beta = alpha - 1`` marks a packet paired in its arrival slot (it never
    waits); unmatched packets get the drain-window sentinel, which is large
    enough that the closed form charges them a full transmission.
    """

    alpha: tuple[int, ...]
    beta: tuple[int, ...]

    def __post_init__(self):
        if len(self.alpha) != len(self.beta):
            raise ValueError("alpha and beta must have equal length")
        for a, b in zip(self.alpha, self.beta):
            if b < a - 1:
                raise ValueError(f"interval [{a}, {b}] is shorter than empty")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["packet", "alpha", "beta"])
        for i, (a, b) in enumerate(zip(self.alpha, self.beta), start=1):
            w.writerow([i, a, b])
        return buf.getvalue()


def identify_constraints(pattern: ArrivalPattern) -> ConstraintSetTrace:
    """Build the active-set trace: inherit last slot's set, insert queue-1
    arrivals, then pop the most recent member once per queue-2 arrival."""
    arrival_slots: list[int] = []
    removal_slots: list[int | None] = []
    stack: list[int] = []  # ascending packet indices, most recent on top
    sets: list[frozenset[int]] = []
    events: list[tuple[int, int, int]] = []
    for t in range(1, pattern.horizon + 1):
        a1, a2 = pattern.arrivals(t)
        for _ in range(a1):
            arrival_slots.append(t)
            removal_slots.append(None)
            stack.append(len(arrival_slots))
        budget = a2
        while budget and stack:
            top = stack.pop()
            events.append((t, top, max([top] + stack)))
            removal_slots[top - 1] = t
            budget -= 1
        sets.append(frozenset(stack))
    return ConstraintSetTrace(
        arrival_slots=tuple(arrival_slots),
        removal_slots=tuple(removal_slots),
        sets=tuple(sets),
        removal_events=tuple(events),
    )


def extract_intervals(trace: ConstraintSetTrace, pattern: ArrivalPattern,
                      cm: CostModel) -> ConstraintIntervals:
    """Turn the trace into per-packet intervals.

    A removed packet's interval ends the slot before its removal; a packet
    never removed keeps its constraint through the drain window, which the
    cost model makes at least ``alpha + floor(c)`` slots long.
    """
    sentinel = drain_horizon(pattern, cm)
    alpha, beta = [], []
    for arr, rem in zip(trace.arrival_slots, trace.removal_slots):
        alpha.append(arr)
        beta.append(sentinel if rem is None else rem - 1)
    return ConstraintIntervals(alpha=tuple(alpha), beta=tuple(beta))


def opt_two_sided_closed_form(intervals: ConstraintIntervals, cm: CostModel) -> Cost:
    """Optimal reduced cost: each packet pays its interval length capped at
    the transmission cost; packets paired on arrival pay nothing."""
    total: Cost = 0
    for a, b in zip(intervals.alpha, intervals.beta):
        total += min(b - a + 1, cm.c)
    return total


def opt_two_sided(pattern: ArrivalPattern, cm: CostModel) -> Cost:
    """Convenience pipeline: trace, intervals, closed form."""
    trace = identify_constraints(pattern)
    return opt_two_sided_closed_form(extract_intervals(trace, pattern, cm), cm)


def opt_one_sided(pattern: ArrivalPattern, cm: CostModel) -> tuple[Cost, int]:
    """Optimal reduced cost and uncoded count for an initial-burst pattern.

    All queue-1 packets must be present from slot 1.  The optimum sends some
    count ``x`` uncoded in slot 1 and holds the rest for coding; the search
    starts at ``max(0, n1 - n2)`` since any smaller ``x`` strands packets
    forever.  Ties prefer the smaller ``x``.
    """
    if not pattern.one_sided:
        raise ValueError("pattern has queue-1 arrivals after slot 1")
    n1 = pattern.n1_total
    t_end = drain_horizon(pattern, cm)
    lo = max(0, n1 - pattern.n2_total)
    best_cost: Cost | None = None
    best_x = lo
    for x in range(lo, n1 + 1):
        cost: Cost = cm.c * x
        for t in range(1, t_end + 1):
            short = n1 - pattern.cum2(t) - x
            if short > 0:
                cost += short
        if best_cost is None or cost < best_cost:
            best_cost, best_x = cost, x
    if best_cost is None:  # n1 == 0 and lo == 0 handled above; defensive
        best_cost = 0
    return best_cost, best_x


def opt_two_sided_bruteforce(pattern: ArrivalPattern, cm: CostModel, *,
                             max_per_side: int = 8) -> Cost:
    """Exhaustive matching oracle for small instances.

    Enumerates every partial matching of queue-1 packets to later-or-equal
    queue-2 packets; a matched packet pays its wait capped at the
    transmission cost, an unmatched one pays a full transmission.
    """
    t1 = [t for t in range(1, pattern.horizon + 1) for _ in range(pattern.a1[t - 1])]
    t2 = [t for t in range(1, pattern.horizon + 1) for _ in range(pattern.a2[t - 1])]
    if len(t1) > max_per_side or len(t2) > max_per_side:
        raise InstanceTooLargeError(
            f"instance has {len(t1)}+{len(t2)} packets, cap is {max_per_side} per side"
        )
    c = cm.c
    memo: dict[tuple[int, int], Cost] = {}

    def best(i: int, mask: int) -> Cost:
        if i == len(t1):
            return 0
        key = (i, mask)
        if key in memo:
            return memo[key]
        value = c + best(i + 1, mask)  # transmit uncoded on arrival
        for j, tj in enumerate(t2):
            if mask & (1 << j) or tj < t1[i]:
                continue
            value = min(value, min(tj - t1[i], c) + best(i + 1, mask | (1 << j)))
        memo[key] = value
        return value

    return best(0, 0)


def _fmt(value: Cost) -> str:
    if isinstance(value, Fraction) and value.denominator == 1:
        value = value.numerator
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".12g")


def _lp_text(sense: str, objective: list[tuple[Cost, str]],
             constraints: list[tuple[str, list[str], str, Cost]],
             upper_bounds: list[str]) -> str:
    lines = [sense, " obj: " + _obj_terms(objective)]
    lines.append("Subject To")
    for name, vars_, op, rhs in constraints:
        lines.append(f" {name}: " + " + ".join(vars_) + f" {op} {_fmt(rhs)}")
    if upper_bounds:
        lines.append("Bounds")
        for v in upper_bounds:
            lines.append(f" {v} <= 1")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _obj_terms(objective: list[tuple[Cost, str]]) -> str:
    parts = []
    for coef, var in objective:
        parts.append(var if coef == 1 else f"{_fmt(coef)} {var}")
    return " + ".join(parts)


def lp_export(pattern: ArrivalPattern, cm: CostModel, which: str) -> str:
    """Emit an instantiated program in the textual LP file format.

    ``which`` selects among ``primal-one-sided`` / ``dual-one-sided`` (single
    uncoded-count variable, aggregate slot constraints), ``primal-two-sided``
    / ``dual-two-sided`` (per-packet variables over the active sets) and
    ``primal-aggregate`` (per-packet uncoded variables with aggregate slot
    constraints, for patterns whose queue-1 arrivals are spread out).
    """
    t_end = drain_horizon(pattern, cm)
    n1 = pattern.n1_total

    if which == "primal-one-sided":
        if not pattern.one_sided:
            raise ValueError("pattern has queue-1 arrivals after slot 1")
        objective = [(cm.c, "x")] if n1 else []
        constraints = []
        for t in range(1, t_end + 1):
            rhs = n1 - pattern.cum2(t)
            if rhs > 0:
                objective.append((1, f"z_{t}"))
                constraints.append((f"slot_{t}", ["x", f"z_{t}"], ">=", rhs))
        return _lp_text("Minimize", objective, constraints, [])

    if which == "dual-one-sided":
        if not pattern.one_sided:
            raise ValueError("pattern has queue-1 arrivals after slot 1")
        objective, names = [], []
        for t in range(1, t_end + 1):
            coef = n1 - pattern.cum2(t)
            if coef > 0:
                objective.append((coef, f"w_{t}"))
                names.append(f"w_{t}")
        constraints = [("budget", names, "<=", cm.c)] if names else []
        return _lp_text("Maximize", objective, constraints, names)

    if which == "primal-aggregate":
        objective = [(cm.c, f"x_{i}") for i in range(1, n1 + 1)]
        trace = identify_constraints(pattern)
        constraints = []
        for t in range(1, t_end + 1):
            arrived = [i for i in range(1, n1 + 1) if trace.arrival_slots[i - 1] <= t]
            rhs = len(arrived) - pattern.cum2(t)
            if rhs > 0:
                objective.append((1, f"z_{t}"))
                constraints.append(
                    (f"slot_{t}", [f"x_{i}" for i in arrived] + [f"z_{t}"], ">=", rhs)
                )
        return _lp_text("Minimize", objective, constraints, [])

    if which in ("primal-two-sided", "dual-two-sided"):
        trace = identify_constraints(pattern)
        membership: list[tuple[int, int]] = []  # (packet, slot) pairs with a constraint
        for t in range(1, t_end + 1):
            for i in sorted(trace.active_set(t)):
                membership.append((i, t))
        if which == "primal-two-sided":
            objective = [(cm.c, f"x_{i}") for i in range(1, n1 + 1)]
            constraints = []
            for i, t in membership:
                objective.append((1, f"z_{i}_{t}"))
                constraints.append((f"pkt_{i}_slot_{t}", [f"x_{i}", f"z_{i}_{t}"], ">=", 1))
            return _lp_text("Minimize", objective, constraints, [])
        objective = [(1, f"w_{i}_{t}") for i, t in membership]
        names = [v for _, v in objective]
        constraints = []
        for i in range(1, n1 + 1):
            mine = [f"w_{i}_{t}" for j, t in membership if j == i]
            if mine:
                constraints.append((f"pkt_{i}", mine, "<=", cm.c))
        return _lp_text("Maximize", objective, constraints, names)

    raise ValueError(f"unknown lp_export variant: {which!r}")
