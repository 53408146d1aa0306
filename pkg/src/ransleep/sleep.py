"""Power-state assignment: opportunistic micro sleep plus the offline
deep-sleep accounting rule.

Micro sleep is free to enter (negligible transition time/energy), so every
idle symbol defaults to it. Deep sleep is applied after the fact by an
idleness oracle: any maximal idle gap at least as long as the qualifying
threshold is re-billed as deep-sleep dwell plus one ramp pair. This is a
lower-bound accounting — it assumes perfect short-horizon idleness
prediction and imposes no wake-up delay on traffic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError
from .power import PowerState, RelativePowerModel, StateTimeline
from .timegrid import TimeGrid


class RuCapability(str, Enum):
    MICRO_ONLY = "MicroOnly"
    MICRO_PLUS_DEEP = "MicroPlusDeep"


@dataclass
class ActivityTimeline:
    """Per-symbol activity flags derived from allocations and signaling."""

    grid: TimeGrid
    dl_data: np.ndarray
    dl_signaling: np.ndarray
    ul_receive: np.ndarray

    def __post_init__(self) -> None:
        n = self.grid.n_symbols
        for name in ("dl_data", "dl_signaling", "ul_receive"):
            arr = np.asarray(getattr(self, name), dtype=bool)
            if arr.shape != (n,):
                raise ConfigError(f"{name} must have one flag per symbol")
            setattr(self, name, arr)

    @classmethod
    def empty(cls, grid: TimeGrid) -> "ActivityTimeline":
        z = np.zeros(grid.n_symbols, dtype=bool)
        return cls(grid, z.copy(), z.copy(), z.copy())

    def busy(self) -> np.ndarray:
        return self.dl_data | self.dl_signaling | self.ul_receive


@dataclass(frozen=True)
class IdleGap:
    start_s: float
    length_s: float
    start_symbol: int
    n_symbols: int


def _idle_runs(busy: np.ndarray) -> list[tuple[int, int]]:
    """Maximal (start, length) runs of False in `busy`."""
    if busy.size == 0:
        return []
    idle = ~busy
    change = np.flatnonzero(np.diff(idle.astype(np.int8)))
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change + 1, [idle.size]))
    return [(int(a), int(b - a)) for a, b in zip(starts, ends) if idle[a]]


def find_idle_gaps(activity: ActivityTimeline) -> list[IdleGap]:
    """Maximal fully-idle gaps in increasing start order (horizon edges count
    as gap borders)."""
    sym = activity.grid.symbol_s
    return [
        IdleGap(a * sym, n * sym, a, n) for a, n in _idle_runs(activity.busy())
    ]


def classify_symbols(
    activity: ActivityTimeline,
    capability: RuCapability,  # noqa: ARG001 - capability acts in the oracle stage
    sleep_enabled: bool = True,
    min_idle_symbols_for_micro: int = 1,
    ul_guard_idle_rx_symbols: int = 0,
) -> StateTimeline:
    """Per-symbol power states from activity flags.

    DL transmission (data or signaling) wins over simultaneous UL reception
    (max-power rule). Idle symbols go to micro sleep when sleep is enabled,
    idle-TX otherwise; idle runs shorter than min_idle_symbols_for_micro are
    too brief to enter micro sleep and are billed as idle-TX. With
    ul_guard_idle_rx_symbols > 0 and sleep disabled, idle symbols adjacent to
    UL occasions are kept in idle-RX (receiver held awake) — off by default.
    Deep sleep is never assigned here; only the oracle emits it.
    """
    grid = activity.grid
    idle_state = PowerState.MICRO_SLEEP if sleep_enabled else PowerState.IDLE_TX
    states = np.full(grid.n_symbols, int(idle_state), dtype=np.uint8)
    states[activity.ul_receive] = int(PowerState.ACTIVE_RX)
    states[activity.dl_data | activity.dl_signaling] = int(PowerState.ACTIVE_TX)
    if sleep_enabled and min_idle_symbols_for_micro > 1:
        for a, n in _idle_runs(activity.busy()):
            if n < min_idle_symbols_for_micro:
                states[a : a + n] = int(PowerState.IDLE_TX)
    if not sleep_enabled and ul_guard_idle_rx_symbols > 0:
        guard = ul_guard_idle_rx_symbols
        ul = np.flatnonzero(activity.ul_receive)
        busy = activity.busy()
        for s in ul:
            for j in range(max(0, s - guard), min(grid.n_symbols, s + guard + 1)):
                if not busy[j]:
                    states[j] = int(PowerState.IDLE_RX)
    return StateTimeline(grid, states)


def apply_deep_sleep_oracle(
    timeline: StateTimeline,
    gaps: list[IdleGap],
    model: RelativePowerModel,
    capability: RuCapability,
) -> StateTimeline:
    """Re-bill qualifying idle gaps as deep sleep (offline lower bound).

    Identity under MICRO_ONLY. Each gap whose length reaches the qualifying
    threshold (inclusive; edge-truncated gaps count by their in-horizon
    length) becomes deep-sleep dwell plus a ramp-down/ramp-up event pair.
    Shorter gaps keep their micro-sleep billing.
    """
    if capability is RuCapability.MICRO_ONLY:
        return timeline
    grid = timeline.grid
    threshold = model.qualifying_gap_symbols(grid)
    states = timeline.states.copy()
    transitions = list(timeline.transitions)
    for gap in gaps:
        if gap.n_symbols >= threshold:
            a, b = gap.start_symbol, gap.start_symbol + gap.n_symbols
            states[a:b] = int(PowerState.DEEP_SLEEP)
            transitions.append((a, "down"))
            transitions.append((b, "up"))
    return StateTimeline(grid, states, transitions)
