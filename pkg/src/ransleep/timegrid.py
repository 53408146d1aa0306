"""Simulated time grid (slots / OFDM symbols) and deterministic seeded RNG streams.

Time is kept internally as an integer symbol counter so that periodic
schedules stay drift-free over multi-million-symbol horizons; floating-point
seconds only appear at the API boundary.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OutOfRangeError

SYMBOLS_PER_SLOT = 14  # normal cyclic prefix


@dataclass(frozen=True)
class TimeGrid:
    """Slot/symbol grid of one carrier.

    subcarrier_spacing_khz fixes the slot duration (15 kHz -> 1 ms, 30 kHz ->
    0.5 ms); the horizon must be a whole number of slots.
    """

    subcarrier_spacing_khz: float = 30.0
    horizon_s: float = 10.0
    symbols_per_slot: int = SYMBOLS_PER_SLOT

    def __post_init__(self) -> None:
        if self.subcarrier_spacing_khz <= 0:
            raise ConfigError("subcarrier spacing must be positive")
        if self.symbols_per_slot != SYMBOLS_PER_SLOT:
            raise ConfigError("only normal cyclic prefix (14 symbols/slot) is supported")
        if self.horizon_s < 0:
            raise ConfigError("horizon must be non-negative")
        if abs(self.horizon_s / self.slot_s - round(self.horizon_s / self.slot_s)) > 1e-9:
            raise ConfigError(
                f"horizon {self.horizon_s} s is not an integer number of "
                f"{self.slot_s * 1e3} ms slots"
            )

    @property
    def slot_s(self) -> float:
        """Slot duration in seconds (1 ms scaled by SCS/15 kHz)."""
        return 1e-3 / (self.subcarrier_spacing_khz / 15.0)

    @property
    def symbol_s(self) -> float:
        return self.slot_s / self.symbols_per_slot

    @property
    def slots_per_second(self) -> float:
        return 1.0 / self.slot_s

    @property
    def n_slots(self) -> int:
        return int(round(self.horizon_s / self.slot_s))

    @property
    def n_symbols(self) -> int:
        return self.n_slots * self.symbols_per_slot

    def symbol_index(self, t_s: float) -> tuple[int, int]:
        """Map a time in [0, horizon) to its (slot, symbol) cell."""
        if t_s < 0 or t_s >= self.horizon_s:
            raise OutOfRangeError(f"t={t_s} s outside horizon [0, {self.horizon_s})")
        sym = int(t_s / self.symbol_s)
        sym = min(sym, self.n_symbols - 1)
        # guard against float round-down right at a grid point
        if t_s >= (sym + 1) * self.symbol_s:
            sym += 1
        return divmod(sym, self.symbols_per_slot)

    def start_time(self, slot: int, symbol: int = 0) -> float:
        """Inverse of symbol_index on grid points."""
        return (slot * self.symbols_per_slot + symbol) * self.symbol_s

    def slot_of(self, t_s: float) -> int:
        """Slot whose start is the first grid point >= t (events are processed
        at the boundary following their occurrence; t exactly on a boundary
        belongs to that slot)."""
        return int(np.ceil(t_s / self.slot_s - 1e-12))

    def ms_to_slots(self, period_ms: float, what: str = "period") -> int:
        """Convert a millisecond period to slots, requiring exact alignment."""
        slots = period_ms * 1e-3 / self.slot_s
        if abs(slots - round(slots)) > 1e-9:
            raise ConfigError(f"{what} {period_ms} ms is not slot-aligned")
        return int(round(slots))


def _stream_key(stream_id: str) -> int:
    """Stable 64-bit key for a stream label (hashlib, not hash(), so the
    mapping is identical across platforms and interpreter runs)."""
    digest = hashlib.sha256(stream_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class SeededRng:
    """One independent, reproducible random stream.

    Identical (seed, stream_id) pairs yield identical draw sequences on any
    platform: the stream label is folded into the SeedSequence entropy via a
    cryptographic hash.
    """

    seed: int
    stream_id: str = "default"
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ss = np.random.SeedSequence([int(self.seed) & (2**64 - 1), _stream_key(self.stream_id)])
        object.__setattr__(self, "_gen", np.random.default_rng(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


def stream_rng(seed: int, stream_id: str) -> np.random.Generator:
    """Shorthand for SeededRng(seed, stream_id).generator."""
    return SeededRng(seed, stream_id).generator
