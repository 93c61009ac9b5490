"""Slotted queueing model of a network-coding relay.

A relay keeps two queues of packets travelling in opposite directions.  In
each slot it may broadcast coded packets (one packet from each queue combined
into a single transmission), send packets uncoded, or hold them and pay one
cost unit per waiting packet per slot.  This module holds the shared
vocabulary: arrival patterns, queue dynamics, decision validation, the cost
model and the ledger that accumulates transmission and holding costs for any
scheduling policy.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Protocol, Sequence, Union

Cost = Union[int, float, Fraction]


class InvalidDecisionError(ValueError):
    """A transmission decision is inconsistent with the current queues."""


def is_exact(value: Cost) -> bool:
    """True when the value supports exact rational arithmetic."""
    return isinstance(value, (int, Fraction))


@dataclass(frozen=True)
class ArrivalPattern:
    """Per-slot arrival counts at both queues over a finite horizon.

    Slots are 1-indexed: ``a1[t-1]`` packets arrive at queue 1 at the
    beginning of slot ``t``.  Slots beyond the horizon carry no arrivals.
    """

    a1: tuple[int, ...]
    a2: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a1", tuple(int(v) for v in self.a1))
        object.__setattr__(self, "a2", tuple(int(v) for v in self.a2))
        if len(self.a1) != len(self.a2):
            raise ValueError("a1 and a2 must cover the same horizon")
        if any(v < 0 for v in self.a1 + self.a2):
            raise ValueError("arrival counts must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.a1)

    @cached_property
    def n1_total(self) -> int:
        return sum(self.a1)

    @cached_property
    def n2_total(self) -> int:
        return sum(self.a2)

    @cached_property
    def _cum2(self) -> tuple[int, ...]:
        out, run = [], 0
        for v in self.a2:
            run += v
            out.append(run)
        return tuple(out)

    def arrivals(self, slot: int) -> tuple[int, int]:
        """Arrival counts ``(a1, a2)`` in the given 1-indexed slot."""
        if 1 <= slot <= self.horizon:
            return self.a1[slot - 1], self.a2[slot - 1]
        return 0, 0

    def cum2(self, slot: int) -> int:
        """Total queue-2 arrivals in slots 1..slot (non-decreasing in slot)."""
        if slot <= 0:
            return 0
        if slot > self.horizon:
            return self.n2_total
        return self._cum2[slot - 1]

    @property
    def one_sided(self) -> bool:
        """True when every queue-1 packet is present from slot 1 on."""
        return all(v == 0 for v in self.a1[1:])

    @property
    def last_arrival_slot(self) -> int:
        last = 0
        for t in range(self.horizon, 0, -1):
            if self.a1[t - 1] or self.a2[t - 1]:
                last = t
                break
        return last

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "a1", "a2"])
        for t in range(1, self.horizon + 1):
            w.writerow([t, self.a1[t - 1], self.a2[t - 1]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ArrivalPattern":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["slot", "a1", "a2"]:
            raise ValueError("expected header slot,a1,a2")
        a1, a2 = [], []
        for i, row in enumerate(rows[1:], start=1):
            if int(row[0]) != i:
                raise ValueError("slots must be consecutive and 1-indexed")
            a1.append(int(row[1]))
            a2.append(int(row[2]))
        return cls(tuple(a1), tuple(a2))


@dataclass(frozen=True)
class RelayQueues:
    """Packet counts in the two relay queues."""

    q1: int = 0
    q2: int = 0

    def __post_init__(self):
        if self.q1 < 0 or self.q2 < 0:
            raise ValueError("queue sizes must be non-negative")

    @property
    def total(self) -> int:
        return self.q1 + self.q2


@dataclass(frozen=True)
class Decision:
    """One slot's transmission decision, split by kind.

    ``coded`` broadcasts pair one packet from each queue; ``uncoded1`` and
    ``uncoded2`` are plain transmissions out of queue 1 and queue 2.
    """

    coded: int = 0
    uncoded1: int = 0
    uncoded2: int = 0

    def __post_init__(self):
        if min(self.coded, self.uncoded1, self.uncoded2) < 0:
            raise InvalidDecisionError("decision counts must be non-negative")

    @property
    def total(self) -> int:
        return self.coded + self.uncoded1 + self.uncoded2

    def validate(self, queues: RelayQueues) -> None:
        """Check the split against the queues at decision time.

        Uncoded transmissions from one queue are only allowed once the other
        queue is fully served in the same slot; this keeps the per-slot cost
        and the queue update expressible with the total count alone.
        """
        if self.coded > min(queues.q1, queues.q2):
            raise InvalidDecisionError(
                f"coded count {self.coded} exceeds min queue {min(queues.q1, queues.q2)}"
            )
        rem1 = queues.q1 - self.coded - self.uncoded1
        rem2 = queues.q2 - self.coded - self.uncoded2
        if rem1 < 0 or rem2 < 0:
            raise InvalidDecisionError("uncoded counts exceed queue contents")
        if self.uncoded1 > 0 and rem2 > 0:
            raise InvalidDecisionError("uncoded from queue 1 while queue 2 still holds packets")
        if self.uncoded2 > 0 and rem1 > 0:
            raise InvalidDecisionError("uncoded from queue 2 while queue 1 still holds packets")

    @classmethod
    def from_total(cls, queues: RelayQueues, total: int) -> "Decision":
        """Split a requested transmission count greedily: coded pairs first,
        then uncoded packets from whichever queue still has them."""
        coded = min(queues.q1, queues.q2, total)
        rest = total - coded
        r1, r2 = queues.q1 - coded, queues.q2 - coded
        if rest == 0:
            return cls(coded=coded)
        if r1 and r2:
            # unreachable: coded == min() zeroes one side whenever rest > 0
            raise InvalidDecisionError("cannot place uncoded packets on both sides")
        if rest > max(r1, r2):
            raise InvalidDecisionError(f"requested {total} transmissions, queues hold fewer")
        if r1:
            return cls(coded=coded, uncoded1=rest)
        return cls(coded=coded, uncoded2=rest)


@dataclass(frozen=True)
class CostModel:
    """Transmission cost in units of holding-slots per transmission.

    ``c`` must exceed one (waiting is pointless otherwise).  When coded and
    uncoded transmissions cost differently, build the model through
    :func:`CostModel.from_split_costs` so everything downstream can keep
    using a single effective cost.
    """

    c: Cost
    coded_cost: Cost | None = None
    uncoded_cost: Cost | None = None

    def __post_init__(self):
        if not self.c > 1:
            raise ValueError(f"transmission cost must exceed 1, got {self.c}")
        if (self.coded_cost is None) != (self.uncoded_cost is None):
            raise ValueError("coded_cost and uncoded_cost must be given together")
        if self.coded_cost is not None:
            if 2 * self.uncoded_cost - self.coded_cost < 0:
                raise ValueError("coding never saves cost when coded_cost > 2*uncoded_cost")

    @property
    def floor_c(self) -> int:
        return math.floor(self.c)

    @property
    def exact(self) -> bool:
        return is_exact(self.c)

    @classmethod
    def from_split_costs(cls, coded_cost: Cost, uncoded_cost: Cost) -> "CostModel":
        eff = effective_cost(coded_cost, uncoded_cost)
        return cls(c=eff, coded_cost=coded_cost, uncoded_cost=uncoded_cost)


def effective_cost(coded_cost: Cost, uncoded_cost: Cost) -> Cost:
    """Single cost equivalent to distinct coded/uncoded transmission costs.

    A coded broadcast replaces two uncoded transmissions, so its net saving
    per packet pair is ``2*uncoded - coded``; that value plays the role of
    the transmission cost in every reduced scheduling problem.
    """
    if not (coded_cost >= uncoded_cost > 0):
        raise ValueError("expected coded_cost >= uncoded_cost > 0")
    eff = 2 * uncoded_cost - coded_cost
    if eff < 0:
        raise ValueError(
            f"coding saves nothing: 2*{uncoded_cost} - {coded_cost} < 0"
        )
    return eff


def drain_horizon(pattern: ArrivalPattern, cm: CostModel) -> int:
    """Simulation end slot: the horizon plus a window long enough for any
    policy in this package to finish reacting to the last arrival."""
    return pattern.horizon + cm.floor_c + 1


def queue_step(queues: RelayQueues, decision: Decision,
               next_arrivals: tuple[int, int]) -> RelayQueues:
    """Advance the queues one slot: serve the decision, then add arrivals."""
    decision.validate(queues)
    d = decision.total
    return RelayQueues(
        q1=max(queues.q1 - d, 0) + next_arrivals[0],
        q2=max(queues.q2 - d, 0) + next_arrivals[1],
    )


def slot_cost(queues: RelayQueues, decision: Decision, cm: CostModel) -> tuple[Cost, int]:
    """Transmission and holding cost of one slot.

    ``queues`` are the occupancies at decision time (after arrivals); holding
    is charged for every packet still queued at the end of the slot.
    """
    decision.validate(queues)
    d = decision.total
    tx = cm.c * d
    hold = max(queues.q1 - d, 0) + max(queues.q2 - d, 0)
    return tx, hold


@dataclass
class CostLedger:
    """Accumulated costs and transmission counts of one simulation run."""

    tx_cost: Cost = 0
    holding_cost: int = 0
    coded: int = 0
    uncoded1: int = 0
    uncoded2: int = 0
    hold1: int = 0
    hold2: int = 0
    final_queues: RelayQueues = field(default_factory=RelayQueues)
    per_slot_trace: list[tuple[Cost, int]] | None = None

    @property
    def total(self) -> Cost:
        return self.tx_cost + self.holding_cost

    def reduced_cost(self, cm: CostModel) -> Cost:
        """Cost with the unavoidable queue-2 service charge stripped out:
        uncoded queue-1 transmissions plus queue-1 holding only."""
        return cm.c * self.uncoded1 + self.hold1

    @property
    def leaked(self) -> int:
        """Packets still queued when the run ended."""
        return self.final_queues.total

    def to_csv(self) -> str:
        if self.per_slot_trace is None:
            raise ValueError("ledger was built without a per-slot trace")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "tx_cost", "holding_cost"])
        for t, (tx, hold) in enumerate(self.per_slot_trace, start=1):
            w.writerow([t, tx, hold])
        return buf.getvalue()


class Policy(Protocol):
    """Per-slot scheduling interface every policy in this package follows."""

    def decide(self, queues: RelayQueues, arrivals: tuple[int, int],
               slot: int) -> Decision: ...


def run_policy(pattern: ArrivalPattern, policy: Policy, cm: CostModel, *,
               record_trace: bool = False,
               extra_slots: int | None = None) -> CostLedger:
    """Drive a policy over a pattern and account every slot's cost.

    The run continues for a drain window past the horizon so packets the
    policy is still holding either leave or show up in ``final_queues``.
    Invalid decisions raised by the policy propagate to the caller.
    """
    if extra_slots is None:
        t_end = drain_horizon(pattern, cm)
    else:
        t_end = pattern.horizon + extra_slots
    ledger = CostLedger(per_slot_trace=[] if record_trace else None)
    q1 = q2 = 0
    for t in range(1, t_end + 1):
        a1, a2 = pattern.arrivals(t)
        q1 += a1
        q2 += a2
        queues = RelayQueues(q1, q2)
        d = policy.decide(queues, (a1, a2), t)
        d.validate(queues)
        total = d.total
        tx = cm.c * total
        hold = max(q1 - total, 0) + max(q2 - total, 0)
        ledger.tx_cost += tx
        ledger.holding_cost += hold
        ledger.coded += d.coded
        ledger.uncoded1 += d.uncoded1
        ledger.uncoded2 += d.uncoded2
        h1 = max(q1 - total, 0)
        h2 = max(q2 - total, 0)
        ledger.hold1 += h1
        ledger.hold2 += h2
        if record_trace:
            ledger.per_slot_trace.append((tx, hold))
        q1, q2 = h1, h2
    ledger.final_queues = RelayQueues(q1, q2)
    return ledger


class IdlePolicy:
    """Never transmits; useful as a degenerate baseline in tests."""

    def decide(self, queues, arrivals, slot):
        return Decision()


class AlwaysCodePolicy:
    """Codes whatever pairs exist each slot and never sends uncoded."""

    def decide(self, queues, arrivals, slot):
        return Decision(coded=min(queues.q1, queues.q2))
