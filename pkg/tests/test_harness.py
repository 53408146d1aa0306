import json

import numpy as np
import pytest

from ransleep.config import DEFAULTS, config_digest, load_config, parse_config_text
from ransleep.errors import ConfigError
from ransleep.harness import (
    BenchmarkConfig,
    RunMatrix,
    Settings,
    calibrated_rates,
    closed_loop,
    raw_row,
    run_matrix,
    run_single,
    write_session_log,
)
from ransleep.power import PowerState
from ransleep.sleep import RuCapability
from ransleep.traffic import TrafficProfile

FAST = {"grid.horizon_s": 5.0}


@pytest.fixture(scope="module")
def settings():
    return Settings.from_config(load_config(overrides=FAST))


@pytest.fixture(scope="module")
def low_rate(settings):
    return calibrated_rates(settings, ["Low"])["Low"]


def test_benchmark_named_shapes():
    b = BenchmarkConfig.named("TG30", traffic="Light")
    assert b.gating.tau_ms == 30.0
    assert all(p == 160.0 for p in b.signaling.periods_ms.values())
    base = BenchmarkConfig.named("Baseline")
    assert not base.gating.enabled
    assert base.seeds == 500
    with pytest.raises(ConfigError):
        BenchmarkConfig.named("TG15x")


def test_run_matrix_validation():
    with pytest.raises(ConfigError):
        RunMatrix(benchmarks=())
    with pytest.raises(ConfigError):
        RunMatrix(variants=("mu", "bogus"))
    with pytest.raises(ConfigError):
        RunMatrix(seeds=0)


def test_run_single_deterministic(settings, low_rate):
    bench = settings.benchmark("TG60", "Low", "muDS", seeds=2)
    a = run_single(bench, 3, settings, low_rate)
    b = run_single(bench, 3, settings, low_rate)
    assert raw_row(a) == raw_row(b)
    assert a.energy.total_energy == b.energy.total_energy


def test_baseline_variants_identical_energy(settings, low_rate):
    for seed in range(4):
        mu = run_single(settings.benchmark("Baseline", "Low", "mu", 4), seed, settings, low_rate)
        ds = run_single(settings.benchmark("Baseline", "Low", "muDS", 4), seed, settings, low_rate)
        assert mu.energy.total_energy == ds.energy.total_energy
        assert ds.deep_sleep_cycles == 0
        assert mu.throughputs == ds.throughputs


def test_zero_traffic_lean_deep_sleep_dwell(settings):
    bench = BenchmarkConfig.named(
        "Lean160",
        traffic=TrafficProfile.custom(0.0),
        capability=RuCapability.MICRO_PLUS_DEEP,
        signaling=settings.signaling_config("lean160"),
        seeds=1,
        horizon_s=settings.grid.horizon_s,
    )
    result = run_single(bench, 0, settings, rate=0.0)
    dwell = result.energy.per_state_time[PowerState.DEEP_SLEEP]
    assert dwell / settings.grid.horizon_s > 0.9
    assert result.n_sessions == 0


def test_run_matrix_outputs(tmp_path):
    matrix = RunMatrix(benchmarks=("Baseline", "Lean160"), variants=("mu",),
                       traffics=("Low",), seeds=10)
    cfg = load_config(overrides=FAST)
    run_matrix(matrix, tmp_path, cfg=cfg)
    raw = (tmp_path / "raw.csv").read_text().strip().splitlines()
    assert len(raw) == 1 + 20  # header + 2 benchmarks x 10 seeds
    results = (tmp_path / "results.csv").read_text().strip().splitlines()
    per_metric = {}
    for line in results[1:]:
        metric = line.split(",")[2]
        per_metric[metric] = per_metric.get(metric, 0) + 1
    assert per_metric["power"] == 2
    assert per_metric["utilization"] == 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_digest"] == config_digest(cfg)
    assert manifest["percentile_method"] == "inclusive-linear"
    assert "Low" in manifest["calibration_rates_per_s"]


def test_run_matrix_rerun_byte_identical(tmp_path):
    matrix = RunMatrix(benchmarks=("Baseline",), variants=("mu",), traffics=("Low",), seeds=4)
    cfg = load_config(overrides=FAST)
    run_matrix(matrix, tmp_path / "a", cfg=cfg)
    run_matrix(matrix, tmp_path / "b", cfg=cfg)
    for name in ("raw.csv", "results.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_calibration_cache_reused(tmp_path, settings):
    r1 = calibrated_rates(settings, ["Low"], cache_dir=tmp_path)
    cache = json.loads((tmp_path / "calibration.json").read_text())
    r2 = calibrated_rates(settings, ["Low"], cache_dir=tmp_path)
    assert r1 == r2 and len(cache) == 1


def test_session_log_export(tmp_path, settings, low_rate):
    bench = settings.benchmark("Baseline", "Low", "mu", 1)
    _, sessions = run_single(bench, 0, settings, low_rate, keep_sessions=True)
    path = tmp_path / "sessions.csv"
    write_session_log(sessions, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1 + len(sessions)
    assert lines[0].startswith("session,ue_id,arrival_s")


def test_config_parsing():
    cfg = parse_config_text("grid.horizon_s = 4.0\n# comment\ntraffic.num_ues = 10\n")
    assert cfg == {"grid.horizon_s": 4.0, "traffic.num_ues": 10}
    with pytest.raises(ConfigError):
        parse_config_text("not a key value line\n")
    with pytest.raises(ConfigError):
        load_config(overrides={"grid.typo": 1})


def test_config_defaults_documented():
    cfg = load_config()
    assert cfg == DEFAULTS
    assert cfg["traffic.num_ues"] == 20
    assert cfg["harness.seeds"] == 500


def test_closed_loop_reaches_keep(settings, low_rate):
    records = closed_loop(settings, "Low", seed=0, rate=low_rate)
    assert records[-1]["action"] == "keep"
    assert records[-1]["iteration"] <= 3
    assert records[0]["plan"].active_features == {"lean160", "tg-60", "deep-sleep"}
