import numpy as np
import pytest
from hypothesis import given, strategies as st

from ransleep.errors import ConfigError
from ransleep.stats import gap_histogram, relative_saving, summarize


def test_summarize_basic():
    s = summarize([1, 2, 3, 4, 5])
    assert s.mean == 3 and s.median == 3 and s.min == 1 and s.max == 5 and s.n == 5


def test_summarize_interpolated_quartiles():
    s = summarize([1, 2, 3, 4])
    assert s.p25 == pytest.approx(1.75)
    assert s.p75 == pytest.approx(3.25)


def test_summarize_empty_rejected():
    with pytest.raises(ConfigError):
        summarize([])


def test_summarize_single_value():
    s = summarize([7.0])
    assert s.min == s.p25 == s.median == s.p75 == s.max == 7.0


values = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=60
)


@given(values)
def test_summarize_order_invariants(xs):
    s = summarize(xs)
    assert s.min <= s.p25 <= s.median <= s.p75 <= s.max


@given(values, st.randoms())
def test_summarize_permutation_invariant(xs, rnd):
    shuffled = list(xs)
    rnd.shuffle(shuffled)
    assert summarize(shuffled) == summarize(xs)


@given(values, st.floats(min_value=0.01, max_value=100), st.floats(min_value=-100, max_value=100))
def test_summarize_affine_equivariant(xs, a, b):
    s = summarize(xs)
    t = summarize([a * x + b for x in xs])
    for field in ("mean", "p25", "median", "p75", "min", "max"):
        assert getattr(t, field) == pytest.approx(a * getattr(s, field) + b, abs=1e-6)


def test_relative_saving():
    base = summarize([100.0])
    assert relative_saving(summarize([100.0]), base) == 0.0
    assert relative_saving(summarize([42.0]), base) == pytest.approx(0.58)
    assert relative_saving(summarize([98.0]), base) == pytest.approx(0.02)


def test_relative_saving_zero_baseline_rejected():
    with pytest.raises(ConfigError):
        relative_saving(summarize([1.0]), summarize([0.0]))


def test_gap_histogram_buckets():
    hist = dict(gap_histogram([0.005, 0.015, 0.03, 0.06, 0.12, 0.2]))
    assert hist["0-10ms"] == 1
    assert hist["10-20ms"] == 1
    assert hist["20-50ms"] == 1
    assert hist["50-100ms"] == 1
    assert hist["100-160ms"] == 1
    assert hist[">=160ms"] == 1
