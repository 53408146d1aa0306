"""Policy-driven feature orchestration: select a conflict-free energy-saving
feature set, translate it into simulator settings, and guard KPIs with
relax/rollback decisions.

The registry mirrors the capability/feature taxonomy: hardware capabilities
(enablers), features that create idle windows, and features that utilize
them. Taxonomy entries without a quantitative model (carrier shutdown,
massive-MIMO sleep, power pooling, ...) exist for dependency/conflict
validation only and are rejected at execution time.
"""

from __future__ import annotations

import hashlib
import json
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, NotSimulatableError, UnknownFeatureError
from .sleep import RuCapability

CATEGORIES = ("capability", "creates-idle-windows", "utilizes-idle-windows")


@dataclass(frozen=True)
class FeatureDescriptor:
    id: str
    category: str
    layer: str
    timescale_s: tuple[float, float]
    depends_on: tuple[str, ...] = ()
    soft_depends_on: tuple[str, ...] = ()
    conflicts_with: tuple[str, ...] = ()
    requires_capability: str | None = None  # A-row enabler id, if any
    simulatable: bool = False
    tunables: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ConfigError(f"bad category {self.category!r} for {self.id}")
        overlap = set(self.depends_on) & set(self.conflicts_with)
        if overlap:
            raise ConfigError(f"{self.id} both depends on and conflicts with {overlap}")


def default_registry() -> list[FeatureDescriptor]:
    """Taxonomy rows plus the concrete configurations the simulator can run."""
    us, ms, s = 1e-6, 1e-3, 1.0
    rows = [
        # A. hardware capabilities (enablers)
        FeatureDescriptor("radio-sleep", "capability", "RF/PHY", (71 * us, 100 * ms)),
        FeatureDescriptor("multiband-pa", "capability", "RF FE", (10 * us, 1 * ms)),
        FeatureDescriptor("dvfs-drs", "capability", "BB/Edge", (1 * us, 1 * ms)),
        FeatureDescriptor("smart-cooling", "capability", "Site", (1 * s, 60 * s)),
        # B. features creating idle windows
        FeatureDescriptor(
            "lean-nr", "creates-idle-windows", "PHY", (10 * ms, 160 * ms)
        ),
        FeatureDescriptor(
            "arch-split", "creates-idle-windows", "Arch", (1 * s, 60 * s)
        ),
        FeatureDescriptor(
            "scheduling", "creates-idle-windows", "MAC/RRC", (1 * us, 100 * ms),
            soft_depends_on=("lean-nr",),
        ),
        FeatureDescriptor(
            "traffic-steering", "creates-idle-windows", "RRM", (1 * s, 60 * s)
        ),
        FeatureDescriptor(
            "dss", "creates-idle-windows", "PHY/RRM", (1 * ms, 30 * ms),
            conflicts_with=("carrier-shutdown",),
        ),
        # C. features utilizing idle windows
        FeatureDescriptor(
            "asm", "utilizes-idle-windows", "RF/RRM", (1 * ms, 50 * ms),
            requires_capability="radio-sleep",
        ),
        FeatureDescriptor(
            "carrier-shutdown", "utilizes-idle-windows", "RF/RRM", (1 * ms, 60 * s),
            depends_on=("traffic-steering",),
            conflicts_with=("dss",),
            requires_capability="radio-sleep",
        ),
        FeatureDescriptor(
            "mimo-sleep", "utilizes-idle-windows", "RF/MAC", (1 * ms, 60 * s),
            requires_capability="radio-sleep",
        ),
        FeatureDescriptor(
            "power-pooling", "utilizes-idle-windows", "RF FE", (10 * us, 1 * ms),
            requires_capability="multiband-pa",
        ),
        FeatureDescriptor(
            "cudu-pooling", "utilizes-idle-windows", "Arch", (1 * s, 60 * s),
            requires_capability="dvfs-drs",
        ),
        # concrete simulator configurations
        FeatureDescriptor(
            "lean160", "creates-idle-windows", "PHY", (160 * ms, 160 * ms),
            soft_depends_on=("lean-nr",), simulatable=True,
        ),
        FeatureDescriptor(
            "micro-sleep", "utilizes-idle-windows", "RF/RRM", (35e-6, 1 * ms),
            requires_capability="radio-sleep", simulatable=True,
        ),
        FeatureDescriptor(
            "deep-sleep", "utilizes-idle-windows", "RF/RRM", (50 * ms, 1 * s),
            requires_capability="radio-sleep", simulatable=True,
            soft_depends_on=("lean160",),
        ),
    ]
    for tau in (10, 30, 60):
        rows.append(
            FeatureDescriptor(
                f"tg-{tau}", "creates-idle-windows", "MAC/RRC",
                (tau * ms, tau * ms),
                depends_on=("lean160",),
                simulatable=True,
                tunables={"tau_ms": (float(tau), float(tau))},
            )
        )
    return rows


def registry_index(registry: list[FeatureDescriptor]) -> dict[str, FeatureDescriptor]:
    return {f.id: f for f in registry}


@dataclass(frozen=True)
class Violation:
    kind: str  # "dependency" | "conflict"
    feature: str
    other: str

    def __str__(self) -> str:
        if self.kind == "dependency":
            return f"{self.feature} requires {self.other}, which is not active"
        return f"{self.feature} conflicts with {self.other}"


def validate_feature_set(
    features: set[str], registry: list[FeatureDescriptor]
) -> list[Violation]:
    """Unmet hard dependencies and conflicting pairs; empty list means valid."""
    index = registry_index(registry)
    unknown = [f for f in features if f not in index]
    if unknown:
        raise UnknownFeatureError(f"unknown feature ids: {sorted(unknown)}")
    violations: list[Violation] = []
    for f in sorted(features):
        desc = index[f]
        for dep in desc.depends_on:
            if dep not in features:
                violations.append(Violation("dependency", f, dep))
        for other in desc.conflicts_with:
            if other in features and f < other:
                violations.append(Violation("conflict", f, other))
    return violations


@dataclass(frozen=True)
class OperatorPolicy:
    """Energy minimization subject to KPI constraints.

    Constraints are (metric, bound) pairs; known metrics:
      min_throughput_mbps  (floor, violated below the bound)
      max_added_delay_ms   (ceiling on scheduler-added delay)
      neighbor_load        (ceiling on a neighbor-cell load indicator)
    """

    objective: str = "minimize-energy"
    kpi_constraints: tuple[tuple[str, float], ...] = ()
    unconstrained: bool = False

    def __post_init__(self) -> None:
        if not self.kpi_constraints and not self.unconstrained:
            raise ConfigError("policy needs constraints or the explicit unconstrained flag")

    def bound(self, metric: str) -> float | None:
        for m, b in self.kpi_constraints:
            if m == metric:
                return b
        return None


FLOOR_METRICS = {"min_throughput_mbps"}
CEILING_METRICS = {"max_added_delay_ms", "neighbor_load", "mean_power"}


@dataclass(frozen=True)
class LoadEstimate:
    predicted_utilization: float
    confidence_margin: float

    def __post_init__(self) -> None:
        for v in (self.predicted_utilization, self.confidence_margin):
            if not 0.0 <= v <= 1.0:
                raise ConfigError("load estimate fields must lie in [0, 1]")


def estimate_load(history, window: int = 5, margin: float = 0.1) -> LoadEstimate:
    """Moving average of the trailing `window` utilization samples."""
    hist = list(history)
    if not hist:
        raise ConfigError("cannot estimate load from an empty history")
    tail = hist[-window:]
    return LoadEstimate(
        predicted_utilization=float(sum(tail) / len(tail)),
        confidence_margin=margin,
    )


@dataclass(frozen=True)
class Plan:
    active_features: frozenset[str]
    configuration: dict[tuple[str, str], float]
    guardrails: tuple[tuple[str, float, str], ...]  # (metric, threshold, action)
    diagnostic: str | None = None

    def tau_ms(self) -> float:
        for fid in self.active_features:
            if fid.startswith("tg-"):
                return self.configuration.get((fid, "tau_ms"), float(fid.split("-")[1]))
        return 0.0


GATING_TAUS_MS = (10.0, 30.0, 60.0)


def prepare(
    policy: OperatorPolicy,
    estimate: LoadEstimate,
    registry: list[FeatureDescriptor],
    capability: RuCapability,
    lean_idle_window_s: float = 0.1595,
    deep_sleep_qualifying_gap_s: float = 0.050,
) -> Plan:
    """Rule-based preparation: pick the feature set, timers, and guardrails.

    Lean signaling is always selected. Gating takes the largest tau whose
    worst-case added delay fits the delay constraint. Deep-sleep accounting
    joins only when the RU supports it and the predicted idle window —
    the lean signaling gap shrunk by predicted load widened with the
    confidence margin — still clears the qualifying gap.
    """
    features: set[str] = {"lean160"}
    config: dict[tuple[str, str], float] = {}
    delay_bound = policy.bound("max_added_delay_ms")
    chosen_tau: float | None = None
    for tau in sorted(GATING_TAUS_MS, reverse=True):
        if delay_bound is None or tau <= delay_bound:
            chosen_tau = tau
            break
    if chosen_tau is not None:
        fid = f"tg-{int(chosen_tau)}"
        features.add(fid)
        config[(fid, "tau_ms")] = chosen_tau
    pessimistic_load = min(1.0, estimate.predicted_utilization + estimate.confidence_margin)
    predicted_gap = lean_idle_window_s * (1.0 - pessimistic_load)
    if capability is RuCapability.MICRO_PLUS_DEEP and predicted_gap >= deep_sleep_qualifying_gap_s:
        features.add("deep-sleep")
    violations = validate_feature_set(features, registry)
    if violations:
        return Plan(
            frozenset(),
            {},
            tuple((m, b, "rollback") for m, b in policy.kpi_constraints),
            diagnostic="no feasible feature set: " + "; ".join(map(str, violations)),
        )
    guardrails = tuple(
        (m, b, "rollback" if m in FLOOR_METRICS else "relax")
        for m, b in policy.kpi_constraints
    )
    return Plan(frozenset(features), config, guardrails)


def execute(plan: Plan, registry: list[FeatureDescriptor] | None = None):
    """Translate a plan into a simulator benchmark configuration.

    The orchestrator only sets boundaries (signaling periods, gating timer,
    sleep capability); per-slot and per-symbol actuation stays in the
    scheduler and sleep controller. Plans containing taxonomy entries with no
    quantitative model are rejected.
    """
    from .harness import BenchmarkConfig  # local import to avoid a cycle

    registry = registry if registry is not None else default_registry()
    index = registry_index(registry)
    for fid in plan.active_features:
        if fid not in index:
            raise UnknownFeatureError(fid)
        if not index[fid].simulatable:
            raise NotSimulatableError(
                f"feature {fid!r} has no quantitative model and cannot be activated "
                "in simulation"
            )
    tau = plan.tau_ms()
    lean = "lean160" in plan.active_features
    deep = "deep-sleep" in plan.active_features
    capability = RuCapability.MICRO_PLUS_DEEP if deep else RuCapability.MICRO_ONLY
    if tau > 0:
        bench_id = f"TG{int(tau)}"
    elif lean:
        bench_id = "Lean160"
    else:
        bench_id = "Baseline"
    return BenchmarkConfig.named(bench_id, capability=capability)


def _observed_metrics(kpis) -> dict[str, float]:
    if isinstance(kpis, dict):
        return dict(kpis)
    out: dict[str, float] = {"mean_power": kpis.mean_power}
    if kpis.throughputs:
        out["min_throughput_mbps"] = min(kpis.throughputs)
        out["mean_throughput_mbps"] = sum(kpis.throughputs) / len(kpis.throughputs)
    return out


def monitor(kpis, guardrails, margin: float = 0.1) -> str:
    """Guardrail check: 'rollback' on a hard violation, 'relax' when an
    indicator is inside the confidence margin of its threshold, else 'keep'.

    `kpis` is a RunResult or a {metric: observed} mapping; guardrails whose
    metric was not observed are skipped. Deterministic in its inputs.
    """
    if not guardrails:
        return "keep"
    observed = _observed_metrics(kpis)
    decision = "keep"
    for metric, threshold, action in guardrails:
        if metric not in observed:
            continue
        value = observed[metric]
        if metric in FLOOR_METRICS:
            violated = value < threshold
            near = value < threshold * (1.0 + margin)
        else:
            violated = value > threshold
            near = value > threshold * (1.0 - margin)
        if violated:
            return "rollback" if action == "rollback" else "relax"
        if near:
            decision = "relax"
    return decision


def relax_plan(plan: Plan) -> Plan:
    """One relaxation step: shorten the gate, then drop deep sleep."""
    features = set(plan.active_features)
    config = dict(plan.configuration)
    taus = sorted(
        (fid for fid in features if fid.startswith("tg-")),
        key=lambda f: float(f.split("-")[1]),
    )
    if taus:
        fid = taus[-1]
        current = float(fid.split("-")[1])
        lower = [t for t in GATING_TAUS_MS if t < current]
        features.remove(fid)
        config.pop((fid, "tau_ms"), None)
        if lower:
            nfid = f"tg-{int(lower[-1])}"
            features.add(nfid)
            config[(nfid, "tau_ms")] = lower[-1]
        return Plan(frozenset(features), config, plan.guardrails)
    if "deep-sleep" in features:
        features.remove("deep-sleep")
        return Plan(frozenset(features), config, plan.guardrails)
    return plan


def minimal_plan(plan: Plan) -> Plan:
    """Rollback target: every savings feature off."""
    return Plan(frozenset(), {}, plan.guardrails, diagnostic="rolled back")


# ---------------------------------------------------------------------------
# registry file I/O and audit log

_REGISTRY_HEADER = (
    "# id | category | layer | timescale_s(min..max) | depends | soft | "
    "conflicts | capability | simulatable"
)


def save_registry(registry: list[FeatureDescriptor], path: Path) -> None:
    lines = [_REGISTRY_HEADER]
    for f in registry:
        lines.append(
            " | ".join(
                [
                    f.id,
                    f.category,
                    f.layer,
                    f"{f.timescale_s[0]:g}..{f.timescale_s[1]:g}",
                    ",".join(f.depends_on) or "-",
                    ",".join(f.soft_depends_on) or "-",
                    ",".join(f.conflicts_with) or "-",
                    f.requires_capability or "-",
                    "yes" if f.simulatable else "no",
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_registry(path: Path) -> list[FeatureDescriptor]:
    rows: list[FeatureDescriptor] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 9:
            raise ConfigError(f"bad registry line: {raw!r}")
        lo, hi = parts[3].split("..")
        csv = lambda s: tuple(x for x in s.split(",") if x and x != "-")  # noqa: E731
        rows.append(
            FeatureDescriptor(
                id=parts[0],
                category=parts[1],
                layer=parts[2],
                timescale_s=(float(lo), float(hi)),
                depends_on=csv(parts[4]),
                soft_depends_on=csv(parts[5]),
                conflicts_with=csv(parts[6]),
                requires_capability=None if parts[7] == "-" else parts[7],
                simulatable=parts[8] == "yes",
            )
        )
    return rows


class AuditLog:
    """Append-only decision log: one JSON record per orchestration decision."""

    def __init__(self, path: Path):
        self.path = Path(path)

    def append(self, kind: str, inputs, decision: str, **extra) -> None:
        digest = hashlib.sha256(repr(inputs).encode("utf-8")).hexdigest()[:16]
        record = {
            "ts": _time.time(),
            "kind": kind,
            "inputs_digest": digest,
            "decision": decision,
        }
        record.update(extra)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
