"""Always-on signaling schedule (SSB / SIB1 / CSI-RS downlink, PRACH uplink).

The schedule is fully deterministic: every kind fires at phase + k * period.
Slots carrying any signaling are reserved whole for signaling (no downlink
data is scheduled in them), which keeps the lean-vs-default signaling energy
difference independent of traffic load; activity flags are still painted at
symbol granularity from each kind's footprint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError
from .timegrid import SYMBOLS_PER_SLOT, TimeGrid


class SignalKind(str, Enum):
    SSB = "SSB"
    SIB1 = "SIB1"
    CSIRS = "CSIRS"
    PRACH = "PRACH"


DL_KINDS = (SignalKind.SSB, SignalKind.SIB1, SignalKind.CSIRS)
UL_KINDS = (SignalKind.PRACH,)

# (symbols, prbs) occupied per occasion; NR-plausible defaults, configurable.
DEFAULT_FOOTPRINTS: dict[SignalKind, tuple[int, int]] = {
    SignalKind.SSB: (4, 20),
    SignalKind.SIB1: (2, 48),
    SignalKind.CSIRS: (1, 51),
    SignalKind.PRACH: (SYMBOLS_PER_SLOT, 12),
}

BASELINE_PERIODS_MS: dict[SignalKind, float] = {
    SignalKind.PRACH: 5.0,
    SignalKind.SSB: 20.0,
    SignalKind.CSIRS: 5.0,
    SignalKind.SIB1: 50.0,
}

LEAN_PERIOD_MS = 160.0


@dataclass(frozen=True)
class SignalingEvent:
    time_s: float
    slot: int
    kind: SignalKind
    direction: str  # "DL-transmit" | "UL-receive"
    symbols: int
    prbs: int


@dataclass(frozen=True)
class SignalingConfig:
    """Periodicities, phases and footprints of the four always-on signals."""

    periods_ms: dict[SignalKind, float] = field(
        default_factory=lambda: dict(BASELINE_PERIODS_MS)
    )
    phases_ms: dict[SignalKind, float] = field(
        default_factory=lambda: {k: 0.0 for k in SignalKind}
    )
    footprints: dict[SignalKind, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_FOOTPRINTS)
    )

    @classmethod
    def baseline(cls) -> "SignalingConfig":
        return cls()

    @classmethod
    def lean160(cls) -> "SignalingConfig":
        return cls(periods_ms={k: LEAN_PERIOD_MS for k in SignalKind})

    def validate(self, grid: TimeGrid) -> None:
        for kind in SignalKind:
            if kind not in self.periods_ms:
                raise ConfigError(f"missing period for {kind.value}")
            grid.ms_to_slots(self.periods_ms[kind], f"{kind.value} period")
            grid.ms_to_slots(self.phases_ms.get(kind, 0.0), f"{kind.value} phase")
            symbols, prbs = self.footprints[kind]
            if symbols < 1 or prbs < 1:
                raise ConfigError(f"{kind.value} footprint must be positive")


def direction_of(kind: SignalKind) -> str:
    return "UL-receive" if kind in UL_KINDS else "DL-transmit"


def build_schedule(config: SignalingConfig, grid: TimeGrid) -> list[SignalingEvent]:
    """All signaling occasions in [0, horizon), sorted by time then kind."""
    config.validate(grid)
    events: list[SignalingEvent] = []
    for kind in SignalKind:
        period_slots = grid.ms_to_slots(config.periods_ms[kind], f"{kind.value} period")
        phase_slots = grid.ms_to_slots(config.phases_ms.get(kind, 0.0), f"{kind.value} phase")
        symbols, prbs = config.footprints[kind]
        for slot in range(phase_slots, grid.n_slots, period_slots):
            events.append(
                SignalingEvent(
                    time_s=grid.start_time(slot),
                    slot=slot,
                    kind=kind,
                    direction=direction_of(kind),
                    symbols=symbols,
                    prbs=prbs,
                )
            )
    events.sort(key=lambda e: (e.slot, e.kind.value))
    return events


def paint_activity(
    events: list[SignalingEvent], grid: TimeGrid
) -> tuple[np.ndarray, np.ndarray]:
    """Per-symbol (dl_signaling, ul_receive) boolean flags.

    Each occasion occupies the first `symbols` symbols of its slot; events
    wider than one slot spill into following slots.
    """
    dl = np.zeros(grid.n_symbols, dtype=bool)
    ul = np.zeros(grid.n_symbols, dtype=bool)
    for ev in events:
        a = ev.slot * grid.symbols_per_slot
        b = min(a + ev.symbols, grid.n_symbols)
        if ev.direction == "DL-transmit":
            dl[a:b] = True
        else:
            ul[a:b] = True
    return dl, ul


def reserved_slots(events: list[SignalingEvent], grid: TimeGrid) -> np.ndarray:
    """Boolean mask of slots reserved for signaling (data-blocked)."""
    mask = np.zeros(grid.n_slots, dtype=bool)
    for ev in events:
        last = ev.slot + (ev.symbols - 1) // grid.symbols_per_slot
        mask[ev.slot : min(last + 1, grid.n_slots)] = True
    return mask


def signaling_prbs_per_slot(events: list[SignalingEvent], grid: TimeGrid) -> dict[int, int]:
    """Summed footprint PRBs of the events touching each slot (for logging)."""
    out: dict[int, int] = {}
    for ev in events:
        out[ev.slot] = out.get(ev.slot, 0) + ev.prbs
    return out


def max_idle_gap(config: SignalingConfig, grid: TimeGrid) -> float:
    """Longest signaling-free interval (seconds) under zero traffic.

    Requires a horizon of at least two of the longest periods, so the steady
    periodic pattern is observed rather than an edge artifact.
    """
    longest = max(config.periods_ms.values())
    if grid.horizon_s < 2 * longest * 1e-3:
        raise ConfigError("horizon too short to measure the steady idle gap")
    events = build_schedule(config, grid)
    dl, ul = paint_activity(events, grid)
    busy = dl | ul
    idle = ~busy
    if not idle.any():
        return 0.0
    # maximal interior run of idle symbols (edges excluded: the pattern wraps)
    change = np.flatnonzero(np.diff(idle.astype(np.int8)))
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change + 1, [idle.size]))
    best = 0
    for a, b in zip(starts, ends):
        if idle[a] and a > 0 and b < idle.size:
            best = max(best, b - a)
    return best * grid.symbol_s
