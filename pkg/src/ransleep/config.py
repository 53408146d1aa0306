"""Flat key = value configuration (dotted sections), defaults, and digests.

Every tunable that affects simulation results lives here with a documented
default; the harness folds the resolved mapping into the output manifest so
any two runs can be compared by digest.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import ConfigError

# fmt: off
DEFAULTS: dict[str, float | int | str | bool] = {
    # time grid
    "grid.subcarrier_spacing_khz": 30.0,   # NR FR1 numerology 1 -> 0.5 ms slots
    "grid.horizon_s": 10.0,                # simulated seconds per seed

    # link abstraction
    "link.num_prbs": 51,                   # 20 MHz carrier at 30 kHz SCS
    "link.bits_per_prb_per_slot": 980.0,   # ~100 Mb/s cell capacity at full PRB use

    # power model (relative to deep sleep = 1)
    "power.deep_sleep": 1.0,
    "power.micro_sleep": 55.0,
    "power.active_tx": 119.3,
    "power.idle_tx": 71.3,
    "power.active_rx": 80.33,
    "power.idle_rx": 70.2,
    "power.ds_transition_energy": 1.0,     # rel-power-seconds per ramp
    "power.ds_qualifying_gap_ms": 50.0,

    # traffic (paced chunk streams; see traffic module)
    "traffic.num_ues": 20,
    "traffic.payload_mbit": 3.5,           # per-session object size
    "traffic.chunk_mbit": 0.35,            # pacing chunk size
    "traffic.chunk_period_ms": 130.0,      # pacing interval
    "traffic.priority_fraction": 0.0,
    "traffic.session_class_mix": False,    # small/medium/large mix preset

    # signaling periodicities (ms) and footprints (symbols x prbs)
    "signaling.baseline.prach_ms": 5.0,
    "signaling.baseline.ssb_ms": 20.0,
    "signaling.baseline.csirs_ms": 5.0,
    "signaling.baseline.sib1_ms": 50.0,
    "signaling.lean_ms": 160.0,
    "signaling.ssb_symbols": 4,
    "signaling.ssb_prbs": 20,
    "signaling.sib1_symbols": 2,
    "signaling.sib1_prbs": 48,
    "signaling.csirs_symbols": 1,
    "signaling.csirs_prbs": 51,
    "signaling.prach_symbols": 14,
    "signaling.prach_prbs": 12,

    # scheduler
    "scheduler.burst_setup_slots": 2,      # control/ref overhead per idle->TX transition

    # sleep controller
    "sleep.min_idle_symbols_for_micro": 1,

    # harness
    "harness.seeds": 500,
    "harness.calibration_seed": 999_983,   # dedicated seed, outside run range
    "harness.calibration_tol": 0.005,
    "harness.per_session_csv": False,

    # orchestrator defaults
    "orch.confidence_margin": 0.1,
    "orch.estimator_window": 5,
    "orch.throughput_floor_mbps": 0.1,
    "orch.delay_bound_ms": 100.0,
    "orch.max_iterations": 5,
}
# fmt: on


def _parse_value(raw: str) -> float | int | str | bool:
    text = raw.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str) -> dict:
    """Parse `section.key = value` lines; '#' starts a comment."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = _parse_value(value)
    return out


def load_config(path: Path | None = None, overrides: dict | None = None) -> dict:
    """Defaults, overlaid with a config file and then explicit overrides.

    Unknown keys are rejected so typos cannot silently fall back to defaults.
    """
    merged = dict(DEFAULTS)
    for source in (
        parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {},
        overrides or {},
    ):
        for key, value in source.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    return merged


def config_digest(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
