import numpy as np
import pytest

from ransleep.errors import ConfigError, IneligibleGapError, MalformedTimelineError
from ransleep.power import (
    DEFAULT_RELATIVE_POWER,
    PowerState,
    RelativePowerModel,
    StateTimeline,
    deep_sleep_gap_energy,
    integrate_energy,
    micro_sleep_gap_energy,
)
from ransleep.timegrid import TimeGrid

MODEL = RelativePowerModel()


def test_default_levels_normalized_to_deep_sleep():
    assert DEFAULT_RELATIVE_POWER[PowerState.DEEP_SLEEP] == 1.0
    assert DEFAULT_RELATIVE_POWER[PowerState.MICRO_SLEEP] == 55.0
    assert DEFAULT_RELATIVE_POWER[PowerState.ACTIVE_TX] == 119.3
    assert DEFAULT_RELATIVE_POWER[PowerState.IDLE_TX] == 71.3
    assert DEFAULT_RELATIVE_POWER[PowerState.ACTIVE_RX] == 80.33
    assert DEFAULT_RELATIVE_POWER[PowerState.IDLE_RX] == 70.2


def test_model_validation():
    bad = dict(DEFAULT_RELATIVE_POWER)
    bad[PowerState.MICRO_SLEEP] = 75.0  # no longer undercuts idle
    with pytest.raises(ConfigError):
        RelativePowerModel(relative_power=bad)
    bad = dict(DEFAULT_RELATIVE_POWER)
    bad[PowerState.ACTIVE_TX] = 10.0
    with pytest.raises(ConfigError):
        RelativePowerModel(relative_power=bad)


def test_one_second_idle_tx():
    grid = TimeGrid(horizon_s=1.0)
    tl = StateTimeline(grid, np.full(grid.n_symbols, int(PowerState.IDLE_TX), np.uint8))
    ledger = integrate_energy(tl, MODEL)
    assert ledger.total_energy == pytest.approx(71.3, rel=1e-12)
    assert ledger.mean_power == pytest.approx(71.3, rel=1e-12)


def test_one_second_deep_sleep_single_cycle():
    grid = TimeGrid(horizon_s=1.0)
    tl = StateTimeline(
        grid,
        np.full(grid.n_symbols, int(PowerState.DEEP_SLEEP), np.uint8),
        transitions=[(0, "down"), (grid.n_symbols, "up")],
    )
    ledger = integrate_energy(tl, MODEL)
    # 1 s of dwell at relative power 1 plus two ramps of 1 each
    assert ledger.total_energy == pytest.approx(3.0, rel=1e-12)
    assert ledger.deep_sleep_cycles == 1


def test_empty_horizon():
    grid = TimeGrid(horizon_s=0.0)
    ledger = integrate_energy(StateTimeline(grid, np.zeros(0, np.uint8)), MODEL)
    assert ledger.total_energy == 0.0
    assert ledger.mean_power == 0.0


def test_from_segments_and_overlap_gap_detection():
    grid = TimeGrid(horizon_s=0.001)  # 2 slots, 28 symbols
    sym = grid.symbol_s
    good = StateTimeline.from_segments(
        grid,
        [(0.0, 14 * sym, PowerState.ACTIVE_TX), (14 * sym, 14 * sym, PowerState.MICRO_SLEEP)],
    )
    ledger = integrate_energy(good, MODEL)
    assert ledger.per_state_time[PowerState.ACTIVE_TX] == pytest.approx(14 * sym)
    with pytest.raises(MalformedTimelineError):
        StateTimeline.from_segments(grid, [(0.0, 14 * sym, PowerState.ACTIVE_TX)])
    with pytest.raises(MalformedTimelineError):
        StateTimeline.from_segments(
            grid,
            [
                (0.0, 20 * sym, PowerState.ACTIVE_TX),
                (14 * sym, 14 * sym, PowerState.MICRO_SLEEP),
            ],
        )


def test_deep_sleep_gap_energy_at_threshold():
    # 50 ms gap: 0.05 dwell + 2 ramps, cheaper than micro sleep's 2.75
    assert deep_sleep_gap_energy(0.050, MODEL) == pytest.approx(2.05)
    assert micro_sleep_gap_energy(0.050, MODEL) == pytest.approx(2.75)


def test_deep_sleep_gap_below_threshold_rejected():
    with pytest.raises(IneligibleGapError):
        deep_sleep_gap_energy(0.04999, MODEL)


def test_break_even_gap():
    # deep == micro accounting at 2 / (55 - 1) s ~= 37.04 ms, below the
    # 50 ms eligibility threshold (so deep accounting always wins when legal)
    L = MODEL.break_even_gap_s()
    assert L == pytest.approx(2.0 / 54.0)
    assert L * 1e3 == pytest.approx(37.04, abs=0.01)
    assert L < MODEL.deep_sleep_qualifying_gap_s
    assert micro_sleep_gap_energy(L, MODEL) == pytest.approx(
        MODEL.relative_power[PowerState.DEEP_SLEEP] * L + 2.0
    )
    with pytest.raises(IneligibleGapError):
        deep_sleep_gap_energy(L, MODEL)


def test_deep_always_cheaper_above_threshold():
    for gap in (0.05, 0.0501, 0.1, 0.5, 2.0):
        assert deep_sleep_gap_energy(gap, MODEL) < micro_sleep_gap_energy(gap, MODEL)


def test_ledger_decomposition_identity_randomized():
    grid = TimeGrid(horizon_s=1.0)
    rng = np.random.default_rng(42)
    for _ in range(50):
        states = rng.integers(0, 6, grid.n_symbols).astype(np.uint8)
        n_cycles = int(rng.integers(0, 5))
        transitions = [(0, "down")] * n_cycles + [(1, "up")] * n_cycles
        tl = StateTimeline(grid, states, transitions)
        ledger = integrate_energy(tl, MODEL)
        parts = sum(ledger.per_state_energy.values()) + ledger.transition_energy
        assert abs(ledger.total_energy - parts) <= 1e-9 * max(ledger.total_energy, 1.0)
        # removing all transitions changes the total by exactly 2 * cycles
        bare = integrate_energy(StateTimeline(grid, states), MODEL)
        assert ledger.total_energy - bare.total_energy == pytest.approx(
            2.0 * n_cycles, rel=1e-12
        )


def test_time_conservation():
    grid = TimeGrid(horizon_s=2.0)
    rng = np.random.default_rng(3)
    states = rng.integers(0, 6, grid.n_symbols).astype(np.uint8)
    ledger = integrate_energy(StateTimeline(grid, states), MODEL)
    assert sum(ledger.per_state_time.values()) == pytest.approx(2.0, rel=1e-12)


def test_segments_round_trip():
    grid = TimeGrid(horizon_s=0.002)
    states = np.zeros(grid.n_symbols, np.uint8)
    states[14:28] = int(PowerState.ACTIVE_TX)
    tl = StateTimeline(grid, states)
    rebuilt = StateTimeline.from_segments(grid, tl.segments())
    assert np.array_equal(rebuilt.states, tl.states)
