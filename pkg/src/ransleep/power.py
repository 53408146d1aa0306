"""Relative power-state model and energy integration.

All power levels are dimensionless, normalized so that deep sleep == 1;
energy is therefore measured in relative-power-seconds. Deep-sleep ramps are
energy-only events (they do not occupy timeline duration): one fixed charge
per ramp, two ramps per sleep cycle, and a cycle is only admitted for idle
gaps at or above the qualifying length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ConfigError, IneligibleGapError, MalformedTimelineError
from .timegrid import TimeGrid


class PowerState(IntEnum):
    DEEP_SLEEP = 0
    MICRO_SLEEP = 1
    ACTIVE_TX = 2
    IDLE_TX = 3
    ACTIVE_RX = 4
    IDLE_RX = 5


N_STATES = len(PowerState)

DEFAULT_RELATIVE_POWER: dict[PowerState, float] = {
    PowerState.DEEP_SLEEP: 1.0,
    PowerState.MICRO_SLEEP: 55.0,
    PowerState.ACTIVE_TX: 119.3,
    PowerState.IDLE_TX: 71.3,
    PowerState.ACTIVE_RX: 80.33,
    PowerState.IDLE_RX: 70.2,
}


@dataclass(frozen=True)
class RelativePowerModel:
    """Six-state relative power model plus deep-sleep transition accounting."""

    relative_power: dict[PowerState, float] = field(
        default_factory=lambda: dict(DEFAULT_RELATIVE_POWER)
    )
    deep_sleep_transition_energy: float = 1.0  # relative-power-seconds per ramp
    deep_sleep_ramps_per_cycle: int = 2
    deep_sleep_qualifying_gap_s: float = 0.050

    def __post_init__(self) -> None:
        p = self.relative_power
        missing = [s for s in PowerState if s not in p]
        if missing:
            raise ConfigError(f"power model missing states: {missing}")
        if any(v <= 0 for v in p.values()):
            raise ConfigError("all relative powers must be strictly positive")
        if p[PowerState.ACTIVE_TX] < p[PowerState.IDLE_TX]:
            raise ConfigError("active TX power must be >= idle TX power")
        if p[PowerState.ACTIVE_RX] < p[PowerState.IDLE_RX]:
            raise ConfigError("active RX power must be >= idle RX power")
        if p[PowerState.MICRO_SLEEP] >= min(p[PowerState.IDLE_TX], p[PowerState.IDLE_RX]):
            raise ConfigError("micro sleep must undercut both idle states")
        if self.deep_sleep_qualifying_gap_s <= 0:
            raise ConfigError("qualifying gap must be positive")

    def power_vector(self) -> np.ndarray:
        return np.array([self.relative_power[PowerState(i)] for i in range(N_STATES)])

    def qualifying_gap_symbols(self, grid: TimeGrid) -> int:
        return int(np.ceil(self.deep_sleep_qualifying_gap_s / grid.symbol_s - 1e-9))

    def break_even_gap_s(self) -> float:
        """Gap length at which deep-sleep accounting equals micro-sleep
        accounting: micro * L = deep * L + ramps."""
        p = self.relative_power
        ramps = self.deep_sleep_ramps_per_cycle * self.deep_sleep_transition_energy
        return ramps / (p[PowerState.MICRO_SLEEP] - p[PowerState.DEEP_SLEEP])


@dataclass
class StateTimeline:
    """Per-symbol power-state assignment over the whole horizon.

    `states` holds one PowerState value per symbol; `transitions` lists
    (symbol_index, direction) deep-sleep ramp events ("down"/"up").
    """

    grid: TimeGrid
    states: np.ndarray
    transitions: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=np.uint8)
        if self.states.shape != (self.grid.n_symbols,):
            raise MalformedTimelineError(
                f"timeline has {self.states.shape[0]} symbols, "
                f"horizon needs {self.grid.n_symbols}"
            )

    @classmethod
    def from_segments(
        cls,
        grid: TimeGrid,
        segments: list[tuple[float, float, PowerState]],
        transitions: list[tuple[int, str]] | None = None,
    ) -> "StateTimeline":
        """Build from (start_s, duration_s, state) segments.

        Segments must tile [0, horizon) exactly on symbol boundaries; any gap
        or overlap raises MalformedTimelineError.
        """
        states = np.full(grid.n_symbols, 255, dtype=np.uint8)
        for start, dur, state in segments:
            a = start / grid.symbol_s
            b = (start + dur) / grid.symbol_s
            ia, ib = int(round(a)), int(round(b))
            if abs(a - ia) > 1e-6 or abs(b - ib) > 1e-6:
                raise MalformedTimelineError(f"segment ({start}, {dur}) not symbol-aligned")
            if ia < 0 or ib > grid.n_symbols:
                raise MalformedTimelineError(f"segment ({start}, {dur}) outside horizon")
            if np.any(states[ia:ib] != 255):
                raise MalformedTimelineError("overlapping segments")
            states[ia:ib] = int(state)
        if np.any(states == 255):
            raise MalformedTimelineError("segments leave a gap in the horizon")
        return cls(grid, states, list(transitions or []))

    def segments(self) -> list[tuple[float, float, PowerState]]:
        """Collapse the per-symbol assignment into maximal runs."""
        if self.states.size == 0:
            return []
        change = np.flatnonzero(np.diff(self.states)) + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change, [self.states.size]))
        sym = self.grid.symbol_s
        return [
            (int(a) * sym, (int(b) - int(a)) * sym, PowerState(int(self.states[a])))
            for a, b in zip(starts, ends)
        ]

    @property
    def deep_sleep_cycles(self) -> int:
        return len(self.transitions) // 2


@dataclass(frozen=True)
class EnergyLedger:
    """Integrated energy split by state plus ramp overhead (rel-power-seconds)."""

    per_state_energy: dict[PowerState, float]
    per_state_time: dict[PowerState, float]
    transition_energy: float
    total_energy: float
    mean_power: float
    deep_sleep_cycles: int

    def state_energy(self, state: PowerState) -> float:
        return self.per_state_energy[state]


def integrate_energy(timeline: StateTimeline, model: RelativePowerModel) -> EnergyLedger:
    """Integrate a state timeline into an energy ledger.

    Dwell energies come from exact integer symbol counts (no running float
    accumulation), so the ledger decomposition identity holds to fp rounding
    of a handful of products.
    """
    grid = timeline.grid
    counts = np.bincount(timeline.states, minlength=N_STATES)
    if counts.sum() != grid.n_symbols:
        raise MalformedTimelineError("timeline does not cover the horizon exactly")
    powers = model.power_vector()
    dwell_s = counts * grid.symbol_s
    energies = dwell_s * powers
    n_ramps = len(timeline.transitions)
    transition_energy = n_ramps * model.deep_sleep_transition_energy
    total = float(energies.sum() + transition_energy)
    horizon = grid.horizon_s
    mean_power = total / horizon if horizon > 0 else 0.0
    return EnergyLedger(
        per_state_energy={PowerState(i): float(energies[i]) for i in range(N_STATES)},
        per_state_time={PowerState(i): float(dwell_s[i]) for i in range(N_STATES)},
        transition_energy=float(transition_energy),
        total_energy=total,
        mean_power=mean_power,
        deep_sleep_cycles=n_ramps // 2,
    )


def deep_sleep_gap_energy(gap_s: float, model: RelativePowerModel) -> float:
    """Energy billed for one qualifying idle gap spent in deep sleep.

    The full gap dwells at deep-sleep power and both ramps are charged inside
    the gap. Gaps below the qualifying length raise IneligibleGapError; the
    caller falls back to micro-sleep accounting.
    """
    if gap_s < model.deep_sleep_qualifying_gap_s:
        raise IneligibleGapError(
            f"gap {gap_s * 1e3:.3f} ms below qualifying "
            f"{model.deep_sleep_qualifying_gap_s * 1e3:.1f} ms"
        )
    ramps = model.deep_sleep_ramps_per_cycle * model.deep_sleep_transition_energy
    return model.relative_power[PowerState.DEEP_SLEEP] * gap_s + ramps


def micro_sleep_gap_energy(gap_s: float, model: RelativePowerModel) -> float:
    """Energy for the same gap spent entirely in micro sleep."""
    return model.relative_power[PowerState.MICRO_SLEEP] * gap_s
