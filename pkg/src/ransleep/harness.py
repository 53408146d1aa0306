"""Benchmark harness: calibration, single runs, the benchmark matrix, and
closed-loop orchestration, with deterministic CSV/JSON outputs.

A run is a pure function of (benchmark config, seed, resolved settings):
sessions and signaling are generated, slots are scheduled, symbols are
classified, the deep-sleep oracle is applied for the capable variant, and the
state timeline is integrated into an energy ledger. Identical inputs produce
byte-identical output rows regardless of execution order or parallelism.
"""

from __future__ import annotations

import dataclasses
import json
import multiprocessing
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_digest, load_config
from .errors import ConfigError
from .orchestrator import (
    AuditLog,
    LoadEstimate,
    OperatorPolicy,
    Plan,
    default_registry,
    estimate_load,
    execute,
    minimal_plan,
    monitor,
    prepare,
    relax_plan,
)
from .power import PowerState, RelativePowerModel, integrate_energy
from .scheduler import GatingPolicy, completed_throughputs, run_schedule
from .signaling import (
    SignalingConfig,
    SignalKind,
    build_schedule,
    paint_activity,
    reserved_slots,
    signaling_prbs_per_slot,
)
from .sleep import ActivityTimeline, RuCapability, apply_deep_sleep_oracle, classify_symbols, find_idle_gaps
from .stats import RunResult, SummaryStats, gap_histogram, summarize
from .timegrid import TimeGrid, stream_rng
from .traffic import (
    LinkModel,
    PayloadModel,
    TrafficProfile,
    calibrate_arrival_rate,
    generate_sessions,
    measured_prb_utilization,
)

BENCHMARK_NAMES = ("Baseline", "Lean160", "TG10", "TG30", "TG60")
VARIANTS = ("mu", "muDS")
TRAFFIC_NAMES = ("Low", "Light", "Medium")

VARIANT_CAPABILITY = {
    "mu": RuCapability.MICRO_ONLY,
    "muDS": RuCapability.MICRO_PLUS_DEEP,
}


@dataclass(frozen=True)
class BenchmarkConfig:
    """One cell of the benchmark matrix."""

    id: str
    signaling: SignalingConfig
    gating: GatingPolicy
    capability: RuCapability
    traffic: TrafficProfile
    seeds: int = 500
    horizon_s: float = 10.0

    def __post_init__(self) -> None:
        if self.gating.enabled and self.id.startswith("TG"):
            if self.signaling.periods_ms != SignalingConfig.lean160().periods_ms and all(
                p != 160.0 for p in self.signaling.periods_ms.values()
            ):
                raise ConfigError("TG benchmarks build on lean signaling")
        if self.seeds < 1:
            raise ConfigError("benchmark needs at least one seed")

    @property
    def variant(self) -> str:
        return "muDS" if self.capability is RuCapability.MICRO_PLUS_DEEP else "mu"

    @property
    def cell_id(self) -> str:
        return f"{self.id}-{self.variant}"

    @classmethod
    def named(
        cls,
        name: str,
        traffic: TrafficProfile | str = "Low",
        capability: RuCapability = RuCapability.MICRO_ONLY,
        signaling: SignalingConfig | None = None,
        seeds: int = 500,
        horizon_s: float = 10.0,
    ) -> "BenchmarkConfig":
        if isinstance(traffic, str):
            traffic = TrafficProfile.preset(traffic)
        if name == "Baseline":
            sig, tau = SignalingConfig.baseline(), 0.0
        elif name == "Lean160":
            sig, tau = SignalingConfig.lean160(), 0.0
        elif name.startswith("TG"):
            try:
                tau = float(name[2:])
            except ValueError:
                raise ConfigError(f"unknown benchmark {name!r}") from None
            sig = SignalingConfig.lean160()
        else:
            raise ConfigError(f"unknown benchmark {name!r}")
        return cls(
            id=name,
            signaling=signaling or sig,
            gating=GatingPolicy(tau_ms=tau),
            capability=capability,
            traffic=traffic,
            seeds=seeds,
            horizon_s=horizon_s,
        )


@dataclass(frozen=True)
class RunMatrix:
    benchmarks: tuple[str, ...] = BENCHMARK_NAMES
    variants: tuple[str, ...] = VARIANTS
    traffics: tuple[str, ...] = TRAFFIC_NAMES
    seeds: int = 500

    def __post_init__(self) -> None:
        if not self.benchmarks or not self.variants or not self.traffics or self.seeds < 1:
            raise ConfigError("run matrix has an empty dimension")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}")


# ---------------------------------------------------------------------------
# resolved settings


@dataclass(frozen=True)
class Settings:
    """Objects resolved once from the flat config mapping."""

    cfg: dict
    grid: TimeGrid
    link: LinkModel
    power: RelativePowerModel
    payload: PayloadModel
    num_ues: int
    priority_fraction: float
    min_idle_symbols: int
    burst_setup_slots: int

    @classmethod
    def from_config(cls, cfg: dict, horizon_s: float | None = None) -> "Settings":
        cfg = dict(cfg)
        if horizon_s is not None:
            cfg["grid.horizon_s"] = float(horizon_s)  # keep digests/caches honest
        grid = TimeGrid(
            subcarrier_spacing_khz=float(cfg["grid.subcarrier_spacing_khz"]),
            horizon_s=float(cfg["grid.horizon_s"]),
        )
        link = LinkModel(
            num_prbs=int(cfg["link.num_prbs"]),
            bits_per_prb_per_slot=float(cfg["link.bits_per_prb_per_slot"]),
        )
        power = RelativePowerModel(
            relative_power={
                PowerState.DEEP_SLEEP: float(cfg["power.deep_sleep"]),
                PowerState.MICRO_SLEEP: float(cfg["power.micro_sleep"]),
                PowerState.ACTIVE_TX: float(cfg["power.active_tx"]),
                PowerState.IDLE_TX: float(cfg["power.idle_tx"]),
                PowerState.ACTIVE_RX: float(cfg["power.active_rx"]),
                PowerState.IDLE_RX: float(cfg["power.idle_rx"]),
            },
            deep_sleep_transition_energy=float(cfg["power.ds_transition_energy"]),
            deep_sleep_qualifying_gap_s=float(cfg["power.ds_qualifying_gap_ms"]) * 1e-3,
        )
        if bool(cfg["traffic.session_class_mix"]):
            payload = PayloadModel.session_class_mix(
                chunk_bits=float(cfg["traffic.chunk_mbit"]) * 1e6,
                chunk_period_s=float(cfg["traffic.chunk_period_ms"]) * 1e-3,
            )
        else:
            payload = PayloadModel(
                classes=[(1.0, float(cfg["traffic.payload_mbit"]) * 1e6)],
                chunk_bits=float(cfg["traffic.chunk_mbit"]) * 1e6,
                chunk_period_s=float(cfg["traffic.chunk_period_ms"]) * 1e-3,
            )
        return cls(
            cfg=cfg,
            grid=grid,
            link=link,
            power=power,
            payload=payload,
            num_ues=int(cfg["traffic.num_ues"]),
            priority_fraction=float(cfg["traffic.priority_fraction"]),
            min_idle_symbols=int(cfg["sleep.min_idle_symbols_for_micro"]),
            burst_setup_slots=int(cfg["scheduler.burst_setup_slots"]),
        )

    def signaling_config(self, flavor: str) -> SignalingConfig:
        cfg = self.cfg
        footprints = {
            SignalKind.SSB: (int(cfg["signaling.ssb_symbols"]), int(cfg["signaling.ssb_prbs"])),
            SignalKind.SIB1: (int(cfg["signaling.sib1_symbols"]), int(cfg["signaling.sib1_prbs"])),
            SignalKind.CSIRS: (int(cfg["signaling.csirs_symbols"]), int(cfg["signaling.csirs_prbs"])),
            SignalKind.PRACH: (int(cfg["signaling.prach_symbols"]), int(cfg["signaling.prach_prbs"])),
        }
        if flavor == "baseline":
            periods = {
                SignalKind.PRACH: float(cfg["signaling.baseline.prach_ms"]),
                SignalKind.SSB: float(cfg["signaling.baseline.ssb_ms"]),
                SignalKind.CSIRS: float(cfg["signaling.baseline.csirs_ms"]),
                SignalKind.SIB1: float(cfg["signaling.baseline.sib1_ms"]),
            }
        elif flavor == "lean160":
            periods = {k: float(cfg["signaling.lean_ms"]) for k in SignalKind}
        else:
            raise ConfigError(f"unknown signaling flavor {flavor!r}")
        return SignalingConfig(periods_ms=periods, footprints=footprints)

    def benchmark(
        self,
        name: str,
        traffic: str,
        variant: str,
        seeds: int = 500,
    ) -> BenchmarkConfig:
        flavor = "baseline" if name == "Baseline" else "lean160"
        return BenchmarkConfig.named(
            name,
            traffic=TrafficProfile.preset(traffic) if traffic in TRAFFIC_NAMES
            else TrafficProfile.custom(float(traffic)),
            capability=VARIANT_CAPABILITY[variant],
            signaling=self.signaling_config(flavor),
            seeds=seeds,
            horizon_s=self.grid.horizon_s,
        )


# ---------------------------------------------------------------------------
# calibration


def _measured_utilization_for_rate(settings: Settings, rate: float, seed: int) -> float:
    """Reference measurement: baseline signaling, gating off."""
    sessions = generate_sessions(
        stream_rng(seed, "arrivals"),
        rate,
        settings.grid.horizon_s,
        settings.num_ues,
        settings.payload,
        settings.priority_fraction,
    )
    events = build_schedule(settings.signaling_config("baseline"), settings.grid)
    sched = run_schedule(
        settings.grid,
        sessions,
        settings.link,
        GatingPolicy(0.0),
        reserved_slots(events, settings.grid),
        signaling_prbs_per_slot(events, settings.grid),
        burst_setup_slots=settings.burst_setup_slots,
    )
    return measured_prb_utilization(
        sched.data_prbs_per_slot, settings.link, settings.grid.n_slots
    )


def calibrate_traffic(settings: Settings, traffic: str) -> float:
    """Calibrated session arrival rate for one profile (sessions/second)."""
    profile = (
        TrafficProfile.preset(traffic)
        if traffic in TRAFFIC_NAMES
        else TrafficProfile.custom(float(traffic))
    )
    seed = int(settings.cfg["harness.calibration_seed"])
    return calibrate_arrival_rate(
        profile,
        settings.link,
        settings.payload.mean_payload_bits,
        slots_per_second=settings.grid.slots_per_second,
        measure=lambda lam: _measured_utilization_for_rate(settings, lam, seed),
        tol=float(settings.cfg["harness.calibration_tol"]),
    )


def calibration_cache_key(settings: Settings, traffic: str) -> str:
    relevant = {
        k: v
        for k, v in settings.cfg.items()
        if k.startswith(("grid.", "link.", "traffic.", "signaling.", "harness.calibration"))
    }
    relevant["traffic.profile"] = traffic
    return config_digest(relevant)


def calibrated_rates(
    settings: Settings, traffics, cache_dir: Path | None = None
) -> dict[str, float]:
    """Rates per profile, cached on disk per (traffic, link, ...) digest."""
    cache: dict[str, float] = {}
    cache_path = Path(cache_dir) / "calibration.json" if cache_dir else None
    if cache_path and cache_path.exists():
        cache = json.loads(cache_path.read_text(encoding="utf-8"))
    rates: dict[str, float] = {}
    for traffic in traffics:
        key = calibration_cache_key(settings, traffic)
        if key not in cache:
            cache[key] = calibrate_traffic(settings, traffic)
        rates[traffic] = float(cache[key])
    if cache_path:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        cache_path.write_text(json.dumps(cache, sort_keys=True, indent=2), encoding="utf-8")
    return rates


# ---------------------------------------------------------------------------
# single run


def run_single(
    bench: BenchmarkConfig,
    seed: int,
    settings: Settings,
    rate: float,
    keep_sessions: bool = False,
):
    """Deterministic pipeline for one (benchmark, seed) cell."""
    grid = settings.grid
    sessions = generate_sessions(
        stream_rng(seed, "arrivals"),
        rate,
        grid.horizon_s,
        settings.num_ues,
        settings.payload,
        settings.priority_fraction,
    )
    events = build_schedule(bench.signaling, grid)
    sched = run_schedule(
        grid,
        sessions,
        settings.link,
        bench.gating,
        reserved_slots(events, grid),
        signaling_prbs_per_slot(events, grid),
        burst_setup_slots=settings.burst_setup_slots,
    )
    dl_sig, ul_rx = paint_activity(events, grid)
    dl_sig = dl_sig | np.repeat(sched.burst_setup_slots, grid.symbols_per_slot)
    dl_data = np.repeat(sched.dl_data_slots, grid.symbols_per_slot)
    activity = ActivityTimeline(grid, dl_data, dl_sig, ul_rx)
    timeline = classify_symbols(
        activity,
        bench.capability,
        sleep_enabled=True,
        min_idle_symbols_for_micro=settings.min_idle_symbols,
    )
    gaps = find_idle_gaps(activity)
    timeline = apply_deep_sleep_oracle(timeline, gaps, settings.power, bench.capability)
    ledger = integrate_energy(timeline, settings.power)
    throughputs = completed_throughputs(sessions)
    result = RunResult(
        seed=seed,
        benchmark_id=bench.cell_id,
        traffic=bench.traffic.name,
        energy=ledger,
        mean_power=ledger.mean_power,
        throughputs=throughputs,
        measured_utilization=measured_prb_utilization(
            sched.data_prbs_per_slot, settings.link, grid.n_slots
        ),
        deep_sleep_cycles=ledger.deep_sleep_cycles,
        gap_histogram=gap_histogram([g.length_s for g in gaps]),
        n_sessions=len(sessions),
        n_completed=len(throughputs),
        completion_times={
            i: s.completion_s for i, s in enumerate(sessions) if s.completed
        },
    )
    return (result, sessions) if keep_sessions else result


# ---------------------------------------------------------------------------
# CSV / manifest helpers


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


RAW_HEADER = (
    "benchmark_id,traffic,seed,mean_power,total_energy,transition_energy,"
    "deep_sleep_cycles,utilization,n_sessions,n_completed,"
    "tput_mean,tput_min,tput_p25,tput_median,tput_p75,tput_max"
)


def raw_row(result: RunResult) -> str:
    if result.throughputs:
        t = summarize(result.throughputs)
        tput = [t.mean, t.min, t.p25, t.median, t.p75, t.max]
    else:
        tput = ["", "", "", "", "", ""]
    fields = [
        result.benchmark_id,
        result.traffic,
        result.seed,
        result.mean_power,
        result.energy.total_energy,
        result.energy.transition_energy,
        result.deep_sleep_cycles,
        result.measured_utilization,
        result.n_sessions,
        result.n_completed,
        *tput,
    ]
    return ",".join(_fmt(f) for f in fields)


SUMMARY_HEADER = "benchmark_id,traffic,metric,n,mean,p25,median,p75,min,max"


def summary_row(benchmark_id: str, traffic: str, metric: str, stats: SummaryStats) -> str:
    fields = [
        benchmark_id, traffic, metric, stats.n,
        stats.mean, stats.p25, stats.median, stats.p75, stats.min, stats.max,
    ]
    return ",".join(_fmt(f) for f in fields)


# ---------------------------------------------------------------------------
# matrix execution

_WORKER_STATE: dict = {}


def _init_worker(cfg: dict, horizon_s: float) -> None:
    _WORKER_STATE["settings"] = Settings.from_config(cfg, horizon_s)


def _run_cell(item) -> tuple:
    name, variant, traffic, seed, seeds_total, rate = item
    settings: Settings = _WORKER_STATE["settings"]
    bench = settings.benchmark(name, traffic, variant, seeds=seeds_total)
    result = run_single(bench, seed, settings, rate)
    return (name, variant, traffic, seed, raw_row(result), result.mean_power,
            result.measured_utilization, tuple(result.throughputs))


def run_matrix(
    matrix: RunMatrix,
    out_dir: Path,
    cfg: dict | None = None,
    parallel: int = 1,
    horizon_s: float | None = None,
) -> dict:
    """Run every matrix cell x seed, then write raw.csv / results.csv /
    manifest.json. Output bytes are independent of `parallel`."""
    cfg = cfg if cfg is not None else load_config()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    settings = Settings.from_config(cfg, horizon_s)
    rates = calibrated_rates(settings, matrix.traffics, cache_dir=out_dir)
    items = [
        (name, variant, traffic, seed, matrix.seeds, rates[traffic])
        for name in matrix.benchmarks
        for variant in matrix.variants
        for traffic in matrix.traffics
        for seed in range(matrix.seeds)
    ]
    try:
        if parallel > 1:
            with multiprocessing.get_context("spawn").Pool(
                parallel, initializer=_init_worker, initargs=(cfg, settings.grid.horizon_s)
            ) as pool:
                outputs = pool.map(_run_cell, items, chunksize=8)
        else:
            _init_worker(cfg, settings.grid.horizon_s)
            outputs = [_run_cell(item) for item in items]
    except Exception as exc:  # flush a marker so partial output is never mistaken for complete
        (out_dir / "_FAILED").write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        raise
    outputs.sort(key=lambda r: (r[0], r[1], r[2], r[3]))

    raw_lines = [RAW_HEADER] + [row for *_head, row, _mp, _u, _t in
                                [(o[0], o[1], o[2], o[3], o[4], o[5], o[6], o[7]) for o in outputs]]
    (out_dir / "raw.csv").write_text("\n".join(raw_lines) + "\n", encoding="utf-8")

    summary_lines = [SUMMARY_HEADER]
    cells = sorted({(o[0], o[1], o[2]) for o in outputs})
    for name, variant, traffic in cells:
        rows = [o for o in outputs if (o[0], o[1], o[2]) == (name, variant, traffic)]
        cell_id = f"{name}-{variant}"
        powers = [o[5] for o in rows]
        utils = [o[6] for o in rows]
        tputs = [t for o in rows for t in o[7]]
        summary_lines.append(summary_row(cell_id, traffic, "power", summarize(powers)))
        summary_lines.append(summary_row(cell_id, traffic, "utilization", summarize(utils)))
        if tputs:
            summary_lines.append(summary_row(cell_id, traffic, "throughput", summarize(tputs)))
    (out_dir / "results.csv").write_text("\n".join(summary_lines) + "\n", encoding="utf-8")

    manifest = {
        "tool": "ransleep",
        "version": __version__,
        "config": cfg,
        "config_digest": config_digest(cfg),
        "horizon_s": settings.grid.horizon_s,
        "calibration_rates_per_s": rates,
        "percentile_method": "inclusive-linear",
        "matrix": {
            "benchmarks": list(matrix.benchmarks),
            "variants": list(matrix.variants),
            "traffics": list(matrix.traffics),
            "seeds": matrix.seeds,
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def write_session_log(sessions, path: Path) -> None:
    """Per-session completion log (debugging aid)."""
    lines = ["session,ue_id,arrival_s,payload_bits,priority,delivered_bits,completion_s"]
    for i, s in enumerate(sessions):
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    i, s.ue_id, s.arrival_s, s.payload_bits, s.priority,
                    s.delivered_bits, "" if s.completion_s is None else s.completion_s,
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# closed-loop orchestration


def utilization_history(settings: Settings, rate: float, seed: int, window_s: float = 1.0):
    """Per-window utilization of a reference (ungated, baseline) run."""
    sessions = generate_sessions(
        stream_rng(seed, "arrivals"),
        rate,
        settings.grid.horizon_s,
        settings.num_ues,
        settings.payload,
        settings.priority_fraction,
    )
    events = build_schedule(settings.signaling_config("baseline"), settings.grid)
    sched = run_schedule(
        settings.grid, sessions, settings.link, GatingPolicy(0.0),
        reserved_slots(events, settings.grid),
        signaling_prbs_per_slot(events, settings.grid),
        burst_setup_slots=settings.burst_setup_slots,
    )
    slots_per_window = settings.grid.ms_to_slots(window_s * 1e3, "estimator window")
    prbs = sched.data_prbs_per_slot
    n_windows = prbs.size // slots_per_window
    trimmed = prbs[: n_windows * slots_per_window].reshape(n_windows, slots_per_window)
    denom = settings.link.num_prbs * slots_per_window
    return [float(w.sum()) / denom for w in trimmed]


def closed_loop(
    settings: Settings,
    traffic: str,
    seed: int,
    rate: float,
    capability: RuCapability = RuCapability.MICRO_PLUS_DEEP,
    policy: OperatorPolicy | None = None,
    registry=None,
    audit: AuditLog | None = None,
    max_iterations: int | None = None,
) -> list[dict]:
    """prepare -> execute -> simulate -> monitor loop; stops on 'keep'.

    Returns one record per iteration with the plan, the monitor action and
    the run result.
    """
    cfg = settings.cfg
    registry = registry if registry is not None else default_registry()
    margin = float(cfg["orch.confidence_margin"])
    window = int(cfg["orch.estimator_window"])
    max_iterations = max_iterations or int(cfg["orch.max_iterations"])
    if policy is None:
        policy = OperatorPolicy(
            kpi_constraints=(
                ("min_throughput_mbps", float(cfg["orch.throughput_floor_mbps"])),
                ("max_added_delay_ms", float(cfg["orch.delay_bound_ms"])),
            )
        )
    history = utilization_history(settings, rate, seed)
    estimate: LoadEstimate = estimate_load(history, window=window, margin=margin)
    plan: Plan = prepare(policy, estimate, registry, capability)
    if audit:
        audit.append("prepare", (policy, estimate), "+".join(sorted(plan.active_features)))
    records: list[dict] = []
    for iteration in range(1, max_iterations + 1):
        bench = execute(plan, registry)
        bench = dataclasses.replace(
            bench,
            traffic=TrafficProfile.preset(traffic),
            horizon_s=settings.grid.horizon_s,
            signaling=settings.signaling_config(
                "baseline" if bench.id == "Baseline" else "lean160"
            ),
        )
        result = run_single(bench, seed, settings, rate)
        action = monitor(result, plan.guardrails, margin=margin)
        if audit:
            audit.append(
                "monitor",
                (bench.cell_id, seed),
                action,
                iteration=iteration,
                features=sorted(plan.active_features),
            )
        records.append(
            {"iteration": iteration, "plan": plan, "bench": bench, "result": result,
             "action": action}
        )
        if action == "keep":
            break
        plan = relax_plan(plan) if action == "relax" else minimal_plan(plan)
    return records
