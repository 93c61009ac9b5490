"""Online fractional solvers with primal and dual accounting.

Each waiting packet carries a fractional commitment toward being sent
uncoded.  While a packet stays eligible, its commitment grows geometrically
(multiply by ``1 + 1/c``, add a fixed base increment) and freezes once it
reaches one; the normalizer below is chosen so exactly ``floor(c)`` updates
land on one.  Every update also books a per-slot holding contribution on the
primal side and a 0/1 certificate on the dual side, so the gap between the
two objectives can be checked on any input.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .core import ArrivalPattern, Cost, CostModel, drain_horizon, is_exact

FLOAT_FREEZE_TOL = 1e-12


def _one_over(value: Cost) -> Cost:
    if isinstance(value, int):
        return Fraction(1, value)
    return 1 / value


@dataclass(frozen=True)
class Normalizer:
    """Constant that scales the geometric commitment updates so a packet
    freezes at exactly one after ``floor(c)`` updates."""

    value: Cost
    c: Cost


def compute_normalizer(cm: CostModel) -> Normalizer:
    """``(1 + 1/c) ** floor(c) - 1``, exact when the cost is rational."""
    if not cm.c > 1:
        raise ValueError("normalizer needs a transmission cost above 1")
    growth = 1 + _one_over(cm.c)
    return Normalizer(value=growth ** cm.floor_c - 1, c=cm.c)


def competitive_bound(cm: CostModel) -> Cost:
    """Worst-case ratio guarantee ``1 + 1/normalizer`` for this cost."""
    norm = compute_normalizer(cm)
    return 1 + _one_over(norm.value)


@dataclass(frozen=True)
class UpdateSchedule:
    """Precomputed commitment values by update count for one cost model."""

    cm: CostModel
    normalizer: Normalizer
    growth: Cost
    base_increment: Cost
    steps: int
    values: tuple[Cost, ...]  # values[j] = commitment after j updates

    @classmethod
    def for_cost(cls, cm: CostModel) -> "UpdateSchedule":
        return _schedule_for_cost(cm)

    @staticmethod
    def _zero_for(cm: CostModel) -> Cost:
        return Fraction(0) if cm.exact else 0.0

    @property
    def zero(self) -> Cost:
        return self.values[0]

    def below_one(self, x: Cost) -> bool:
        """The update guard: commitments at or past one are frozen."""
        if self.cm.exact:
            return x < 1
        return x < 1 - FLOAT_FREEZE_TOL


@lru_cache(maxsize=None)
def _schedule_for_cost(cm: CostModel) -> UpdateSchedule:
    norm = compute_normalizer(cm)
    growth = 1 + _one_over(cm.c)
    base = _one_over(norm.value * cm.c)
    steps = cm.floor_c
    values = [UpdateSchedule._zero_for(cm)]
    for _ in range(steps):
        values.append(values[-1] * growth + base)
    if cm.exact:
        assert values[-1] == 1, "schedule must land exactly on one"
    return UpdateSchedule(cm=cm, normalizer=norm, growth=growth,
                          base_increment=base, steps=steps, values=tuple(values))


class OneSidedPrimalDual:
    """Fractional solver for the initial-burst model.

    All ``n1`` queue-1 packets are present from slot 1 and the model assumes
    ``n1`` does not exceed the transmission cost.  Each slot updates every
    packet not yet paired off by cumulative queue-2 arrivals and not yet
    frozen; the dual certificate for the slot is worth one per still-needed
    packet.
    """

    def __init__(self, n1: int, cm: CostModel, record_trace: bool = False):
        if n1 < 0:
            raise ValueError("packet count must be non-negative")
        if n1 > cm.c:
            raise ValueError(f"initial-burst model assumes n1 <= c, got {n1} > {cm.c}")
        self.n1 = n1
        self.cm = cm
        self.schedule = UpdateSchedule.for_cost(cm)
        zero = self.schedule.zero
        self.frac = [zero] * n1
        self.update_counts = [0] * n1
        self.slot = 0
        self.n2_seen = 0
        self.hold_total: Cost = zero
        self.dual_total: int = 0
        self.w: list[int] = []
        self.slot_holds: list[Cost] = []
        self.primal_increments: list[Cost] = []
        self.dual_increments: list[int] = []
        self.trace: list[tuple[int, int, Cost, Cost, int]] | None = (
            [] if record_trace else None
        )

    def step(self, t: int, n2_t: int) -> None:
        """Advance one slot given the cumulative queue-2 arrivals through it."""
        if t != self.slot + 1:
            raise ValueError(f"slots must be stepped in order, expected {self.slot + 1}")
        if n2_t < self.n2_seen:
            raise ValueError("cumulative arrivals cannot decrease")
        self.slot = t
        self.n2_seen = n2_t
        sched = self.schedule
        z_t: Cost = sched.zero
        dx: Cost = sched.zero
        updated = 0
        for i in range(n2_t, self.n1):
            x = self.frac[i]
            if sched.below_one(x):
                z_i = 1 - x
                new = x * sched.growth + sched.base_increment
                self.frac[i] = new
                self.update_counts[i] += 1
                z_t += z_i
                dx += new - x
                updated += 1
                if self.trace is not None:
                    self.trace.append((t, i + 1, new, z_i, 1))
        w_t = 1 if updated else 0
        self.w.append(w_t)
        self.slot_holds.append(z_t)
        self.hold_total += z_t
        dual_inc = (self.n1 - n2_t) * w_t
        self.dual_total += dual_inc
        self.primal_increments.append(self.cm.c * dx + z_t)
        self.dual_increments.append(dual_inc)

    @property
    def total_frac(self) -> Cost:
        return sum(self.frac, start=self.schedule.zero)

    def objectives(self) -> tuple[Cost, Cost]:
        """Primal and dual objective values accumulated so far."""
        return self.cm.c * self.total_frac + self.hold_total, self.dual_total


@dataclass
class TrackedPacket:
    """One queue-1 packet's fractional state in the arbitrary-arrival model."""

    index: int
    arrival_slot: int
    frac: Cost
    updates: int = 0
    removal_slot: int | None = None


class TwoSidedPrimalDual:
    """Fractional solver for arbitrary queue-1 arrivals.

    Keeps the active packet set as a stack in arrival order: queue-1
    arrivals push, and each queue-2 arrival pops the most recent member.
    Updates run over the whole active set.  In ``constrained`` mode (at most
    one transmission per slot, one arrival per queue per slot) updates are
    suppressed in any slot with a queue-2 arrival, since that slot's
    transmission is already spoken for.
    """

    def __init__(self, cm: CostModel, constrained: bool = False,
                 record_trace: bool = False):
        self.cm = cm
        self.constrained = constrained
        self.schedule = UpdateSchedule.for_cost(cm)
        self.packets: list[TrackedPacket] = []
        self.stack: list[int] = []  # positions into self.packets, arrival order
        self._first_unfrozen = 0
        self.slot = 0
        self.total_frac: Cost = self.schedule.zero
        self.hold_total: Cost = self.schedule.zero
        self.dual_total: int = 0
        self.primal_increments: list[Cost] = []
        self.dual_increments: list[int] = []
        self.record_trace = record_trace
        self.trace: list[tuple[int, int, Cost, Cost, int]] | None = (
            [] if record_trace else None
        )
        self.set_snapshots: list[frozenset[int]] | None = [] if record_trace else None
        self.slot_packet_holds: dict[tuple[int, int], Cost] | None = (
            {} if record_trace else None
        )

    def _push(self, t: int) -> None:
        packet = TrackedPacket(index=len(self.packets) + 1, arrival_slot=t,
                               frac=self.schedule.zero)
        self.packets.append(packet)
        self.stack.append(len(self.packets) - 1)

    def step(self, t: int, a1: int, a2: int, *, post_joins: int = 0,
             skip_updates: bool = False) -> tuple[Cost, Cost]:
        """Advance one slot; returns the aggregate commitment before/after.

        ``post_joins`` registers extra packets that join the waiting side
        after this slot's pairings (used by the waiting-queue transform);
        they receive no update until the next slot.  ``skip_updates`` lets a
        caller suppress this slot's updates, e.g. while its physical queue
        is empty.
        """
        if t != self.slot + 1:
            raise ValueError(f"slots must be stepped in order, expected {self.slot + 1}")
        if self.constrained and (a1 > 1 or a2 > 1 or post_joins > 1):
            raise ValueError("constrained mode expects at most one arrival per queue per slot")
        self.slot = t
        for _ in range(a1):
            self._push(t)
        budget = a2
        while budget and self.stack:
            pos = self.stack.pop()
            self.packets[pos].removal_slot = t
            budget -= 1
        if self._first_unfrozen > len(self.stack):
            self._first_unfrozen = len(self.stack)

        before = self.total_frac
        sched = self.schedule
        z_t: Cost = sched.zero
        updated = 0
        if not skip_updates and not (self.constrained and a2 > 0):
            for sp in range(self._first_unfrozen, len(self.stack)):
                p = self.packets[self.stack[sp]]
                if not sched.below_one(p.frac):
                    continue
                z_i = 1 - p.frac
                new = p.frac * sched.growth + sched.base_increment
                self.total_frac += new - p.frac
                p.frac = new
                p.updates += 1
                z_t += z_i
                updated += 1
                if self.record_trace:
                    self.trace.append((t, p.index, new, z_i, 1))
                    self.slot_packet_holds[(t, p.index)] = z_i
            while (self._first_unfrozen < len(self.stack)
                   and not sched.below_one(self.packets[self.stack[self._first_unfrozen]].frac)):
                self._first_unfrozen += 1
        for _ in range(post_joins):
            self._push(t)
        self.hold_total += z_t
        self.dual_total += updated
        self.primal_increments.append(self.cm.c * (self.total_frac - before))
        self.primal_increments[-1] += z_t
        self.dual_increments.append(updated)
        if self.record_trace:
            self.set_snapshots.append(
                frozenset(self.packets[pos].index for pos in self.stack)
            )
        return before, self.total_frac

    def active_indices(self, slot: int) -> frozenset[int]:
        if not self.record_trace:
            raise ValueError("state was built without trace recording")
        if slot <= 0 or not self.set_snapshots:
            return frozenset()
        return self.set_snapshots[min(slot, len(self.set_snapshots)) - 1]

    def objectives(self) -> tuple[Cost, Cost]:
        """Primal and dual objective values accumulated so far."""
        return self.cm.c * self.total_frac + self.hold_total, self.dual_total


def run_one_sided(pattern: ArrivalPattern, cm: CostModel,
                  record_trace: bool = False) -> OneSidedPrimalDual:
    """Drive the initial-burst solver over a pattern's drain window."""
    if not pattern.one_sided:
        raise ValueError("pattern has queue-1 arrivals after slot 1")
    state = OneSidedPrimalDual(pattern.n1_total, cm, record_trace=record_trace)
    for t in range(1, drain_horizon(pattern, cm) + 1):
        state.step(t, pattern.cum2(t))
    return state


def run_two_sided(pattern: ArrivalPattern, cm: CostModel, *,
                  constrained: bool = False,
                  record_trace: bool = False) -> TwoSidedPrimalDual:
    """Drive the arbitrary-arrival solver over a pattern's drain window."""
    state = TwoSidedPrimalDual(cm, constrained=constrained, record_trace=record_trace)
    for t in range(1, drain_horizon(pattern, cm) + 1):
        a1, a2 = pattern.arrivals(t)
        state.step(t, a1, a2)
    return state


def one_sided_violations(state: OneSidedPrimalDual,
                         pattern: ArrivalPattern) -> list[str]:
    """Primal/dual constraint violations of a finished one-sided run."""
    tol = 0 if state.cm.exact else 1e-9
    out = []
    x_final = state.total_frac
    for t in range(1, len(state.slot_holds) + 1):
        need = pattern.n1_total - pattern.cum2(t)
        have = x_final + state.slot_holds[t - 1]
        if have < need - tol:
            out.append(f"primal slot {t}: {have} < {need}")
    if sum(state.w) > state.cm.c + tol:
        out.append(f"dual budget: {sum(state.w)} > {state.cm.c}")
    if any(w not in (0, 1) for w in state.w):
        out.append("dual certificate outside {0,1}")
    return out


def two_sided_violations(state: TwoSidedPrimalDual) -> list[str]:
    """Primal/dual constraint violations of a finished two-sided run.

    Requires a state built with ``record_trace=True`` so the per-slot active
    sets and holding contributions are available.
    """
    if not state.record_trace:
        raise ValueError("state was built without trace recording")
    tol = 0 if state.cm.exact else 1e-9
    out = []
    final = {p.index: p.frac for p in state.packets}
    for t, members in enumerate(state.set_snapshots, start=1):
        for idx in members:
            z = state.slot_packet_holds.get((t, idx), state.schedule.zero)
            if final[idx] + z < 1 - tol:
                out.append(f"primal packet {idx} slot {t}: {final[idx] + z} < 1")
    for p in state.packets:
        if p.updates > state.cm.c + tol:
            out.append(f"dual packet {p.index}: {p.updates} certificates > {state.cm.c}")
    return out


def state_dump_csv(state: OneSidedPrimalDual | TwoSidedPrimalDual) -> str:
    """Per-update dump of the fractional state, one row per packet update."""
    if state.trace is None:
        raise ValueError("state was built without trace recording")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot", "packet", "x_i", "z_i", "w_i"])
    for slot, packet, x, z, cert in state.trace:
        w.writerow([slot, packet, x, z, cert])
    return buf.getvalue()
