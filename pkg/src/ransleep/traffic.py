"""Downlink traffic generation calibrated to a target mean PRB utilization.

Sessions arrive as a Poisson process; each session is one DL payload for one
UE, delivered to the scheduler as a paced train of fixed-size chunks (a
streaming-style source: the application releases data gradually rather than
dumping the whole object at arrival). Chunk pacing is what gives sessions a
multi-second lifetime at realistic per-session rates while the cell itself
transmits in short full-rate bursts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, ConfigError, InfeasibleLoadError

PROFILE_PRESETS = {"Low": 0.065, "Light": 0.25, "Medium": 0.42}


@dataclass(frozen=True)
class TrafficProfile:
    """Named load level expressed as target time-averaged PRB utilization."""

    name: str
    target_mean_prb_utilization: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.target_mean_prb_utilization < 1.0:
            raise InfeasibleLoadError(
                f"target utilization {self.target_mean_prb_utilization} not in [0, 1)"
            )

    @classmethod
    def preset(cls, name: str) -> "TrafficProfile":
        if name not in PROFILE_PRESETS:
            raise ConfigError(f"unknown traffic profile {name!r}")
        return cls(name, PROFILE_PRESETS[name])

    @classmethod
    def custom(cls, target: float) -> "TrafficProfile":
        return cls("custom", target)


@dataclass(frozen=True)
class LinkModel:
    """Fixed spectral-efficiency link abstraction: every allocated PRB in a
    slot carries the same number of bits (no fading, no MCS adaptation)."""

    num_prbs: int = 51
    bits_per_prb_per_slot: float = 980.0

    def __post_init__(self) -> None:
        if self.num_prbs < 1 or self.bits_per_prb_per_slot <= 0:
            raise ConfigError("link model fields must be positive")

    def capacity_bps(self, slots_per_second: float) -> float:
        return self.num_prbs * self.bits_per_prb_per_slot * slots_per_second

    @classmethod
    def from_capacity(
        cls, capacity_bps: float, num_prbs: int, slots_per_second: float
    ) -> "LinkModel":
        return cls(num_prbs, capacity_bps / (num_prbs * slots_per_second))


@dataclass
class Session:
    """One DL payload for one UE, delivered as a paced chunk train."""

    ue_id: int
    arrival_s: float
    payload_bits: float
    priority: str = "normal"  # "high" | "normal"
    chunk_bits: float = 0.0  # 0 -> whole payload available at arrival
    chunk_period_s: float = 0.0
    # result fields, filled by the scheduler
    delivered_bits: float = 0.0
    completion_s: float | None = None

    def __post_init__(self) -> None:
        if self.payload_bits <= 0:
            raise ConfigError("session payload must be positive")
        if self.priority not in ("high", "normal"):
            raise ConfigError(f"bad priority {self.priority!r}")

    @property
    def completed(self) -> bool:
        return self.completion_s is not None

    def chunk_schedule(self) -> tuple[np.ndarray, np.ndarray]:
        """(availability times, chunk sizes); one whole-payload chunk when
        pacing is disabled."""
        if self.chunk_bits <= 0 or self.chunk_bits >= self.payload_bits:
            return np.array([self.arrival_s]), np.array([self.payload_bits])
        n_full = int(self.payload_bits // self.chunk_bits)
        rem = self.payload_bits - n_full * self.chunk_bits
        sizes = [self.chunk_bits] * n_full + ([rem] if rem > 1e-9 else [])
        times = self.arrival_s + self.chunk_period_s * np.arange(len(sizes))
        return times, np.array(sizes)


@dataclass(frozen=True)
class PayloadModel:
    """Per-session payload size and pacing parameters.

    `classes` is a list of (probability, payload_bits) choices; a single
    class gives the default fixed-size object. Chunk pacing applies to every
    class.
    """

    classes: list[tuple[float, float]] = field(
        default_factory=lambda: [(1.0, 3.5e6)]
    )
    chunk_bits: float = 0.35e6
    chunk_period_s: float = 0.130

    def __post_init__(self) -> None:
        total = sum(p for p, _ in self.classes)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError("payload class probabilities must sum to 1")
        if any(bits <= 0 for _, bits in self.classes):
            raise ConfigError("payload sizes must be positive")

    @property
    def mean_payload_bits(self) -> float:
        return sum(p * bits for p, bits in self.classes)

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        if len(self.classes) == 1:
            return np.full(n, self.classes[0][1])
        probs = np.array([p for p, _ in self.classes])
        sizes = np.array([b for _, b in self.classes])
        return sizes[gen.choice(len(sizes), size=n, p=probs)]

    @classmethod
    def session_class_mix(
        cls, chunk_bits: float = 0.35e6, chunk_period_s: float = 0.130
    ) -> "PayloadModel":
        """Desk-scale small/medium/large session mix (95 / 3 / 2 percent)."""
        return cls(
            classes=[(0.95, 0.35e6), (0.03, 3.5e6), (0.02, 14.0e6)],
            chunk_bits=chunk_bits,
            chunk_period_s=chunk_period_s,
        )


def generate_sessions(
    gen: np.random.Generator,
    rate_per_s: float,
    horizon_s: float,
    num_ues: int,
    payload: PayloadModel,
    priority_fraction: float = 0.0,
) -> list[Session]:
    """Poisson session process over [0, horizon), sorted by arrival time.

    UEs are assigned uniformly, so the process is exchangeable in the UE
    enumeration; priorities are iid Bernoulli(priority_fraction).
    """
    if rate_per_s < 0:
        raise ConfigError("arrival rate must be non-negative")
    if not 0.0 <= priority_fraction <= 1.0:
        raise ConfigError("priority fraction must be in [0, 1]")
    n = int(gen.poisson(rate_per_s * horizon_s)) if rate_per_s > 0 else 0
    if n == 0:
        return []
    times = np.sort(gen.uniform(0.0, horizon_s, n))
    ues = gen.integers(0, num_ues, n)
    sizes = payload.sample(gen, n)
    high = gen.random(n) < priority_fraction
    return [
        Session(
            ue_id=int(ues[i]),
            arrival_s=float(times[i]),
            payload_bits=float(sizes[i]),
            priority="high" if high[i] else "normal",
            chunk_bits=payload.chunk_bits,
            chunk_period_s=payload.chunk_period_s,
        )
        for i in range(n)
    ]


def analytic_arrival_rate(
    profile: TrafficProfile,
    link: LinkModel,
    mean_payload_bits: float,
    slots_per_second: float,
) -> float:
    """Open-loop seed rate: offered bits/s equal the utilization target times
    full-PRB cell capacity."""
    if profile.target_mean_prb_utilization >= 1.0:
        raise InfeasibleLoadError("target utilization must be < 1")
    if mean_payload_bits <= 0:
        raise ConfigError("mean payload must be positive")
    if profile.target_mean_prb_utilization == 0.0:
        return 0.0
    capacity = link.capacity_bps(slots_per_second)
    return profile.target_mean_prb_utilization * capacity / mean_payload_bits


def calibrate_arrival_rate(
    profile: TrafficProfile,
    link: LinkModel,
    mean_payload_bits: float,
    slots_per_second: float = 2000.0,
    measure=None,
    tol: float = 0.005,
    max_iter: int = 20,
) -> float:
    """Session rate hitting the profile's utilization target.

    Starts from the analytic seed; when `measure` (rate -> measured
    utilization on the calibration seed) is given, expands a bracket around
    the target and bisects until the measurement lands within +-tol. Budget
    is max_iter measurements in total.
    """
    lam = analytic_arrival_rate(profile, link, mean_payload_bits, slots_per_second)
    target = profile.target_mean_prb_utilization
    if measure is None or lam == 0.0:
        return lam
    lo = hi = None  # rates bracketing the target from below / above
    cur = lam
    for _ in range(max_iter):
        measured = measure(cur)
        if abs(measured - target) <= tol:
            return cur
        if measured < target:
            lo = cur
        else:
            hi = cur
        if lo is None:
            cur = cur / 2.0
        elif hi is None:
            cur = cur * 2.0
        else:
            cur = (lo + hi) / 2.0
    raise CalibrationError(
        f"utilization calibration for {profile.name} did not converge in {max_iter} steps"
    )


def measured_prb_utilization(
    data_prbs_per_slot: np.ndarray, link: LinkModel, n_slots: int
) -> float:
    """Time-averaged data PRB utilization (signaling excluded)."""
    data_prbs_per_slot = np.asarray(data_prbs_per_slot)
    if data_prbs_per_slot.shape[0] != n_slots:
        raise ConfigError("allocation log does not cover the horizon")
    total = float(data_prbs_per_slot.sum())
    return total / (link.num_prbs * n_slots) if n_slots else 0.0
