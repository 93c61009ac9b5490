"""Randomized integral schedulers driven by the fractional trajectories.

A single uniform draw ``u`` is made up front.  Whenever the running
aggregate commitment crosses ``u`` plus an integer, the policy sends one
uncoded packet, so over the randomness of ``u`` the expected number of
uncoded transmissions in a slot equals that slot's commitment increment.
Coded transmissions are never randomized: any packet that can pair with an
opposite-side arrival pairs immediately.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, replace

from .core import ArrivalPattern, Cost, CostModel, Decision, RelayQueues
from .primaldual import TwoSidedPrimalDual, UpdateSchedule


@dataclass
class RoundingState:
    """Shared-threshold rounding: ``u`` plus the number of unit shifts."""

    u: Cost
    shifts: int = 0

    def __post_init__(self):
        if not 0 <= self.u < 1:
            raise ValueError("u must lie in [0, 1)")

    @property
    def threshold(self) -> Cost:
        return self.u + self.shifts

    def take_crossings(self, prev_total: Cost, new_total: Cost) -> int:
        """Count threshold crossings in [prev_total, new_total), shifting
        the threshold up by one per crossing."""
        n = 0
        while prev_total <= self.u + self.shifts < new_total:
            self.shifts += 1
            n += 1
        return n


class _DecisionTraceMixin:
    """Shared diagnostics and trace plumbing for the randomized policies."""

    def _init_diagnostics(self, record_trace: bool) -> None:
        self.wasted_crossings = 0          # crossings with no packet to send
        self.max_uncoded_in_slot = 0
        self.max_tx_in_slot = 0
        self._trace: list[tuple[int, int, int, int, int]] | None = (
            [] if record_trace else None
        )

    def _book(self, slot: int, d: Decision, shifts: int) -> Decision:
        self.max_uncoded_in_slot = max(self.max_uncoded_in_slot,
                                       d.uncoded1 + d.uncoded2)
        self.max_tx_in_slot = max(self.max_tx_in_slot, d.total)
        if self._trace is not None:
            self._trace.append((slot, d.coded, d.uncoded1, d.uncoded2, shifts))
        return d

    def decision_trace_csv(self) -> str:
        if self._trace is None:
            raise ValueError("policy was built without trace recording")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "coded", "uncoded_q1", "uncoded_q2", "u_shift"])
        for row in self._trace:
            w.writerow(row)
        return buf.getvalue()


class OneSidedRandomizedPolicy(_DecisionTraceMixin):
    """Randomized scheduler for the initial-burst model.

    Codes queue-2 arrivals against queue 1 first, then updates the
    commitments of packets not yet paired off and sends one uncoded packet
    per threshold crossing.  Commitment updates run only while queue 1 still
    holds packets after the slot's coding.
    """

    def __init__(self, n1: int, cm: CostModel, u: Cost,
                 record_trace: bool = False):
        if n1 > cm.c:
            raise ValueError(f"initial-burst model assumes n1 <= c, got {n1} > {cm.c}")
        self.n1 = n1
        self.cm = cm
        self.schedule = UpdateSchedule.for_cost(cm)
        self.counts = [0] * n1
        self.total: Cost = self.schedule.zero
        self.rounding = RoundingState(u)
        self.n2 = 0
        self._init_diagnostics(record_trace)

    def decide(self, queues: RelayQueues, arrivals: tuple[int, int],
               slot: int) -> Decision:
        a1, a2 = arrivals
        if slot == 1:
            if a1 != self.n1:
                raise ValueError(f"expected all {self.n1} queue-1 packets in slot 1")
        elif a1:
            raise ValueError("initial-burst model forbids queue-1 arrivals after slot 1")
        self.n2 += a2
        coded = min(queues.q1, a2)
        uncoded2 = a2 - coded
        avail = queues.q1 - coded
        uncoded1 = 0
        if avail > 0:
            prev = self.total
            sched = self.schedule
            for i in range(self.n2, self.n1):
                j = self.counts[i]
                if j < sched.steps:
                    self.total += sched.values[j + 1] - sched.values[j]
                    self.counts[i] = j + 1
            crossings = self.rounding.take_crossings(prev, self.total)
            uncoded1 = min(crossings, avail)
            self.wasted_crossings += crossings - uncoded1
        return self._book(slot, Decision(coded, uncoded1, uncoded2),
                          self.rounding.shifts)


class TwoSidedRandomizedPolicy(_DecisionTraceMixin):
    """Randomized scheduler for arbitrary queue-1 arrivals.

    Queue-2 packets are served the slot they arrive: coded against the most
    recently arrived waiting packet when one exists, uncoded otherwise.
    Threshold crossings send the waiting packet with the largest commitment
    (ties to the earliest arrival), which is always the oldest in the queue.
    In ``constrained`` mode at most one packet leaves per slot.
    """

    def __init__(self, cm: CostModel, u: Cost, constrained: bool = False,
                 record_trace: bool = False):
        self.cm = cm
        self.constrained = constrained
        self.pd = TwoSidedPrimalDual(cm, constrained=constrained)
        self.queue: deque[int] = deque()  # waiting packet indices, oldest left
        self.rounding = RoundingState(u)
        self._init_diagnostics(record_trace)

    def decide(self, queues: RelayQueues, arrivals: tuple[int, int],
               slot: int) -> Decision:
        a1, a2 = arrivals
        if self.constrained and (a1 > 1 or a2 > 1):
            raise ValueError("constrained mode expects spread arrivals (at most 1 per queue)")
        next_index = len(self.pd.packets) + 1
        for k in range(a1):
            self.queue.append(next_index + k)
        coded = min(a2, len(self.queue))
        for _ in range(coded):
            self.queue.pop()
        uncoded2 = a2 - coded
        before, after = self.pd.step(slot, a1, a2,
                                     skip_updates=not self.queue)
        crossings = self.rounding.take_crossings(before, after)
        uncoded1 = min(crossings, len(self.queue))
        for _ in range(uncoded1):
            self.queue.popleft()
        self.wasted_crossings += crossings - uncoded1
        d = Decision(coded, uncoded1, uncoded2)
        if self.constrained:
            assert d.total <= 1, "transmission constraint violated"
        return self._book(slot, d, self.rounding.shifts)


@dataclass(frozen=True)
class WaitingCodingQueues:
    """Reformulated queue pair: one waiting queue whose packets all belong
    to a single original side, plus the transient count of packets paired
    off this slot."""

    owner: int = 1
    count: int = 0
    qc: int = 0

    def __post_init__(self):
        if self.owner not in (1, 2):
            raise ValueError("owner side must be 1 or 2")
        if self.count < 0 or self.qc < 0:
            raise ValueError("queue counts must be non-negative")


def waiting_coding_route(wc: WaitingCodingQueues,
                         arrivals: tuple[int, int]
                         ) -> tuple[WaitingCodingQueues, int, bool]:
    """Route one slot's arrivals through the waiting/pairing split.

    Arrivals on the waiting side join the waiting queue; arrivals on the
    other side pair with waiting packets.  When other-side arrivals outnumber
    the waiting queue, the excess becomes the new waiting queue and the
    owning side flips.  Returns the new queue state, the number of pairs
    formed, and whether a non-empty waiting queue changed sides.
    """
    owner = wc.owner if wc.count else 1
    same = arrivals[owner - 1]
    other = arrivals[2 - owner]
    joined = wc.count + same
    coded = min(joined, other)
    if other > joined:
        new = WaitingCodingQueues(owner=3 - owner, count=other - joined, qc=coded)
        flip = wc.count > 0
    else:
        new = WaitingCodingQueues(owner=owner, count=joined - other, qc=coded)
        flip = False
    return new, coded, flip


class WaitingCodingPolicy(_DecisionTraceMixin):
    """Randomized scheduler where both original queues may wait.

    The waiting/pairing transform reduces the symmetric problem to the
    single-waiting-queue one, and the same fractional machinery drives the
    uncoded decisions for whichever side currently waits.  ``constrained``
    mode (the default) suppresses commitment updates in any slot that forms
    a coded pair, keeping the policy to one transmission per slot.
    """

    def __init__(self, cm: CostModel, u: Cost, constrained: bool = True,
                 record_trace: bool = False):
        self.cm = cm
        self.constrained = constrained
        self.pd = TwoSidedPrimalDual(cm)
        self.queue: deque[int] = deque()
        self.wc = WaitingCodingQueues()
        self.rounding = RoundingState(u)
        self._init_diagnostics(record_trace)

    def decide(self, queues: RelayQueues, arrivals: tuple[int, int],
               slot: int) -> Decision:
        a1, a2 = arrivals
        if self.constrained and (a1 > 1 or a2 > 1):
            raise ValueError("constrained mode expects spread arrivals (at most 1 per queue)")
        claimed = self.wc.owner if self.wc.count else 1
        joins = arrivals[claimed - 1]
        routed, coded, _flip = waiting_coding_route(self.wc, arrivals)
        post = routed.count if routed.owner != claimed else 0

        next_index = len(self.pd.packets) + 1
        for k in range(joins):
            self.queue.append(next_index + k)
        for _ in range(coded):
            self.queue.pop()
        for k in range(post):
            self.queue.append(next_index + joins + k)

        skip = (self.constrained and coded > 0) or not self.queue
        before, after = self.pd.step(slot, joins, coded, post_joins=post,
                                     skip_updates=skip)
        crossings = self.rounding.take_crossings(before, after)
        uncoded = min(crossings, len(self.queue))
        for _ in range(uncoded):
            self.queue.popleft()
        self.wasted_crossings += crossings - uncoded
        self.wc = replace(routed, count=routed.count - uncoded)

        if routed.owner == 1:
            d = Decision(coded=coded, uncoded1=uncoded)
        else:
            d = Decision(coded=coded, uncoded2=uncoded)
        if self.constrained:
            assert d.total <= 1, "transmission constraint violated"
        return self._book(slot, d, self.rounding.shifts)


def spread_arrivals(pattern: ArrivalPattern) -> ArrivalPattern:
    """Defer bursty arrivals so each queue receives at most one packet per
    slot, extending the horizon as needed; totals are preserved."""

    def spread(seq):
        out, carry = [], 0
        for v in seq:
            carry += v
            take = 1 if carry else 0
            out.append(take)
            carry -= take
        while carry:
            out.append(1)
            carry -= 1
        return out

    s1, s2 = spread(pattern.a1), spread(pattern.a2)
    width = max(len(s1), len(s2))
    s1 += [0] * (width - len(s1))
    s2 += [0] * (width - len(s2))
    return ArrivalPattern(tuple(s1), tuple(s2))
