"""Per-seed KPI records and cross-seed distribution statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .power import EnergyLedger

# gap histogram bucket upper edges in ms (last bucket open-ended)
GAP_BUCKETS_MS = (10.0, 20.0, 50.0, 100.0, 160.0, float("inf"))


@dataclass
class RunResult:
    """KPIs of one (benchmark, traffic, variant, seed) simulation."""

    seed: int
    benchmark_id: str
    traffic: str
    energy: EnergyLedger
    mean_power: float
    throughputs: list[float]
    measured_utilization: float
    deep_sleep_cycles: int
    gap_histogram: list[tuple[str, int]]
    n_sessions: int = 0
    n_completed: int = 0
    completion_times: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if any(t < 0 for t in self.throughputs):
            raise ConfigError("throughputs must be non-negative")
        if not 0.0 <= self.measured_utilization <= 1.0:
            raise ConfigError("utilization must lie in [0, 1]")


def gap_histogram(gap_lengths_s: list[float]) -> list[tuple[str, int]]:
    """Bucketed count of idle-gap lengths."""
    edges = [0.0] + [b for b in GAP_BUCKETS_MS]
    counts = [0] * (len(edges) - 1)
    for g in gap_lengths_s:
        ms = g * 1e3
        for i in range(len(counts)):
            if edges[i] <= ms < edges[i + 1]:
                counts[i] += 1
                break
    labels = []
    for i in range(len(counts)):
        hi = edges[i + 1]
        labels.append(f"{edges[i]:g}-{hi:g}ms" if np.isfinite(hi) else f">={edges[i]:g}ms")
    return list(zip(labels, counts))


@dataclass(frozen=True)
class SummaryStats:
    """Box-plot style summary: mean, quartiles, median, extremes."""

    mean: float
    p25: float
    median: float
    p75: float
    min: float
    max: float
    n: int

    def as_row(self) -> dict[str, float | int]:
        return {
            "n": self.n,
            "mean": self.mean,
            "p25": self.p25,
            "median": self.median,
            "p75": self.p75,
            "min": self.min,
            "max": self.max,
        }


PERCENTILE_METHOD = "inclusive-linear"  # linear interpolation between order stats


def summarize(values) -> SummaryStats:
    """Distribution summary with inclusive linear-interpolation percentiles."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ConfigError("cannot summarize an empty sample")
    p25, p50, p75 = np.percentile(arr, [25.0, 50.0, 75.0], method="linear")
    return SummaryStats(
        mean=float(arr.mean()),
        p25=float(p25),
        median=float(p50),
        p75=float(p75),
        min=float(arr.min()),
        max=float(arr.max()),
        n=int(arr.size),
    )


def relative_saving(benchmark: SummaryStats, baseline: SummaryStats) -> float:
    """Fractional mean reduction of `benchmark` against `baseline`."""
    if baseline.mean <= 0:
        raise ConfigError("baseline mean must be positive")
    return (baseline.mean - benchmark.mean) / baseline.mean
