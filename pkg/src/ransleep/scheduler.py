"""Per-slot PRB scheduler with cell-level traffic gating.

Gating withholds normal-priority traffic: when new data arrives while the
cell is quiet, the gate closes and everything queues until the timer (tau,
anchored at that first withheld arrival) expires or a high-priority arrival
forces an early release. While the gate is closed no data PRB is allocated.
Once released, the backlog drains as contiguous full-rate bursts (FIFO across
sessions, oldest first) and arrivals that land mid-drain join the ongoing
burst; the gate re-arms only after the cell has gone quiet again, so a loaded
cell can never be starved by its own arrival stream. Worst-case added delay
is bounded by tau exactly.

Scheduling is slot-granular: any slot carrying data keeps the transmitter
active for the whole slot, and every idle-to-transmit transition first spends
`burst_setup_slots` on control/reference signaling (scheduling grant,
pipeline fill) before user data flows. Both effects make sparse small-burst
traffic disproportionately expensive and batching worthwhile.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .timegrid import TimeGrid
from .traffic import LinkModel, Session

GATE_TAUS_MS = (10.0, 30.0, 60.0)


@dataclass(frozen=True)
class GatingPolicy:
    """tau_ms == 0 disables gating entirely."""

    tau_ms: float = 0.0
    bypass_on_high_priority: bool = True

    def __post_init__(self) -> None:
        if self.tau_ms < 0:
            raise ConfigError("gating timer must be non-negative")

    @property
    def enabled(self) -> bool:
        return self.tau_ms > 0


@dataclass
class GateState:
    status: str = "open"  # "open" | "closed"
    timer_start_s: float | None = None

    @property
    def closed(self) -> bool:
        return self.status == "closed"


def gate_step(
    state: GateState,
    policy: GatingPolicy,
    now_s: float,
    arrivals: list[Session],
    queue_empty: bool = True,
) -> tuple[GateState, bool]:
    """Advance the gate by one slot; returns (new state, released).

    Release happens when the timer expires or (with bypass enabled) a
    high-priority arrival occurs. A normal-priority arrival closes an open
    gate only when the schedulable queue is empty: arrivals during an ongoing
    drain join it instead of stalling it, which keeps the gate from starving
    a loaded cell.
    """
    released = False
    status, timer = state.status, state.timer_start_s
    if status == "closed" and now_s - timer >= policy.tau_ms * 1e-3 - 1e-12:
        status, timer, released = "open", None, True
    if arrivals and policy.enabled:
        has_high = any(s.priority == "high" for s in arrivals)
        has_normal = any(s.priority == "normal" for s in arrivals)
        if status == "closed" and has_high and policy.bypass_on_high_priority:
            status, timer, released = "open", None, True
        elif status == "open" and has_normal and queue_empty:
            status, timer = "closed", now_s
    return GateState(status, timer), released


@dataclass(frozen=True)
class SlotAllocation:
    slot: int
    per_session: tuple[tuple[int, int, float], ...]  # (session idx, prbs, bits)
    signaling_prbs: int

    @property
    def data_prbs(self) -> int:
        return sum(p for _, p, _ in self.per_session)


def schedule_slot(
    active: list[int],
    avail_bits: np.ndarray,
    gate: GateState,
    link: LinkModel,
    slot: int,
    signaling_prbs: int = 0,
    reserved: bool = False,
) -> SlotAllocation:
    """Allocate one slot's PRBs to the schedulable backlog.

    Zero data PRBs while the gate is closed or the slot is reserved for
    signaling; otherwise sessions are served in arrival order, each taking as
    many PRBs as its released backlog needs until the slot is exhausted.
    """
    signaling_prbs = min(signaling_prbs, link.num_prbs)
    if gate.closed or reserved or not active:
        return SlotAllocation(slot, (), signaling_prbs)
    remaining = link.num_prbs - signaling_prbs
    bpp = link.bits_per_prb_per_slot
    grants: list[tuple[int, int, float]] = []
    for idx in active:
        if remaining <= 0:
            break
        need = int(np.ceil(avail_bits[idx] / bpp - 1e-12))
        if need <= 0:
            continue
        prbs = min(need, remaining)
        bits = min(prbs * bpp, avail_bits[idx])
        grants.append((idx, prbs, bits))
        remaining -= prbs
    return SlotAllocation(slot, tuple(grants), signaling_prbs)


@dataclass
class ScheduleResult:
    data_prbs_per_slot: np.ndarray
    dl_data_slots: np.ndarray
    burst_setup_slots: np.ndarray
    gate_closures: int
    gate_releases: int
    allocations: list[SlotAllocation] = field(default_factory=list)

    @property
    def total_data_prbs(self) -> int:
        return int(self.data_prbs_per_slot.sum())


def run_schedule(
    grid: TimeGrid,
    sessions: list[Session],
    link: LinkModel,
    policy: GatingPolicy,
    reserved_slots: np.ndarray | None = None,
    signaling_prbs: dict[int, int] | None = None,
    burst_setup_slots: int = 1,
    collect_allocations: bool = False,
) -> ScheduleResult:
    """Drive the gate + scheduler over the horizon (event-driven over slots).

    Mutates the sessions' delivered_bits / completion_s in place and returns
    the per-slot allocation record.
    """
    n_slots = grid.n_slots
    slot_s = grid.slot_s
    if reserved_slots is None:
        reserved_slots = np.zeros(n_slots, dtype=bool)
    signaling_prbs = signaling_prbs or {}
    tau_slots = grid.ms_to_slots(policy.tau_ms, "gating timer") if policy.enabled else 0

    # flatten chunk availability events, ordered by slot then session arrival
    ev_slot_l: list[int] = []
    ev_sess_l: list[int] = []
    ev_bits_l: list[float] = []
    for i, s in enumerate(sessions):
        times, sizes = s.chunk_schedule()
        for t, b in zip(times, sizes):
            if t >= grid.horizon_s:
                break
            ev_slot_l.append(grid.slot_of(t))
            ev_sess_l.append(i)
            ev_bits_l.append(float(b))
    result = ScheduleResult(
        data_prbs_per_slot=np.zeros(n_slots, dtype=np.int32),
        dl_data_slots=np.zeros(n_slots, dtype=bool),
        burst_setup_slots=np.zeros(n_slots, dtype=bool),
        gate_closures=0,
        gate_releases=0,
    )
    if not ev_slot_l:
        return result
    order = np.lexsort((np.array(ev_sess_l), np.array(ev_slot_l)))
    ev_slot = np.array(ev_slot_l, dtype=np.int64)[order]
    ev_sess = np.array(ev_sess_l, dtype=np.int64)[order]
    ev_bits = np.array(ev_bits_l, dtype=np.float64)[order]
    n_ev = ev_slot.size

    avail = np.zeros(len(sessions), dtype=np.float64)
    active: list[int] = []  # session indices with released backlog, arrival order
    gate_open = True
    anchor_slot = -1
    bpp = link.bits_per_prb_per_slot
    num_prbs = link.num_prbs
    is_high = np.array([s.priority == "high" for s in sessions])
    payloads = np.array([s.payload_bits for s in sessions])
    delivered = np.zeros(len(sessions), dtype=np.float64)
    completion = np.full(len(sessions), np.nan)

    ei = 0
    in_burst = False  # transmitter warmed up; survives signaling pauses
    setup_count = 0
    last_burst_slot = -2
    slot = int(ev_slot[0])
    while slot < n_slots:
        if in_burst and slot > last_burst_slot + 1:
            in_burst = False
            setup_count = 0
        if not gate_open and slot - anchor_slot >= tau_slots:
            gate_open = True
            anchor_slot = -1
            result.gate_releases += 1
        queue_empty_at_start = not active
        arrived_normal = False
        arrived_high = False
        while ei < n_ev and ev_slot[ei] == slot:
            i = int(ev_sess[ei])
            if avail[i] <= 0 and i not in active:
                insort(active, i)
            avail[i] += ev_bits[ei]
            if is_high[i]:
                arrived_high = True
            else:
                arrived_normal = True
            ei += 1
        if policy.enabled:
            if not gate_open and arrived_high and policy.bypass_on_high_priority:
                gate_open = True
                anchor_slot = -1
                result.gate_releases += 1
            elif gate_open and arrived_normal and queue_empty_at_start:
                gate_open = False
                anchor_slot = slot
                result.gate_closures += 1
        if gate_open and active and reserved_slots[slot]:
            if in_burst or setup_count:
                last_burst_slot = slot  # burst pauses for signaling, no re-setup
        elif gate_open and active:
            if not in_burst and setup_count < burst_setup_slots:
                result.burst_setup_slots[slot] = True
                setup_count += 1
                last_burst_slot = slot
                if setup_count >= burst_setup_slots:
                    in_burst = True
                    setup_count = 0
            else:
                in_burst = True
                last_burst_slot = slot
                remaining = num_prbs
                used = 0
                done: list[int] = []
                grants: list[tuple[int, int, float]] = []
                for i in active:
                    if remaining <= 0:
                        break
                    need = int(np.ceil(avail[i] / bpp - 1e-12))
                    prbs = min(need, remaining)
                    bits = min(prbs * bpp, avail[i])
                    avail[i] -= bits
                    delivered[i] += bits
                    remaining -= prbs
                    used += prbs
                    if collect_allocations:
                        grants.append((i, prbs, bits))
                    if avail[i] <= 1e-9:
                        done.append(i)
                        if delivered[i] >= payloads[i] - 1e-6:
                            completion[i] = (slot + 1) * slot_s
                for i in done:
                    active.remove(i)
                if used > 0:
                    result.data_prbs_per_slot[slot] = used
                    result.dl_data_slots[slot] = True
                if collect_allocations:
                    result.allocations.append(
                        SlotAllocation(
                            slot, tuple(grants), min(signaling_prbs.get(slot, 0), num_prbs)
                        )
                    )
        # jump to the next slot where anything can happen
        if gate_open and active:
            slot += 1
        else:
            nxt = ev_slot[ei] if ei < n_ev else n_slots
            if not gate_open:
                nxt = min(nxt, anchor_slot + tau_slots)
            if nxt <= slot:
                slot += 1
            else:
                slot = int(nxt)

    for i, s in enumerate(sessions):
        s.delivered_bits = float(delivered[i])
        s.completion_s = float(completion[i]) if np.isfinite(completion[i]) else None
    return result


def session_throughput(session: Session) -> float | None:
    """Per-session throughput in Mb/s (payload over sojourn); None until the
    session has completed, so unfinished sessions drop out of statistics."""
    if not session.completed:
        return None
    sojourn = session.completion_s - session.arrival_s
    if sojourn <= 0:
        raise ConfigError("completion precedes arrival")
    return session.payload_bits / sojourn / 1e6


def completed_throughputs(sessions: list[Session]) -> list[float]:
    return [t for t in (session_throughput(s) for s in sessions) if t is not None]
