import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyest import (GapExceedsDeltaMax, LengthMismatch, NonPositiveGap,
                     ObservationSet, draw_uniform_gaps, read_scheme_csv,
                     scheme_from_gaps, write_scheme_csv)


def test_times_are_cumulative_sums():
    s = scheme_from_gaps([1, 1, 1], delta_max=1)
    assert s.times.tolist() == [0.0, 1.0, 2.0, 3.0]
    assert s.horizon == 3.0


def test_fractional_gaps():
    s = scheme_from_gaps([0.5, 2.0], delta_max=6)
    assert s.times.tolist() == [0.0, 0.5, 2.5]
    assert s.horizon == 2.5


def test_gap_above_bound_rejected():
    with pytest.raises(GapExceedsDeltaMax):
        scheme_from_gaps([1, 7], delta_max=6)


@pytest.mark.parametrize("gaps", [[0.0, 1.0], [-1.0], []])
def test_bad_gaps_rejected(gaps):
    with pytest.raises(NonPositiveGap):
        scheme_from_gaps(gaps, delta_max=6)


def test_delta_max_bar_floors_at_one():
    assert scheme_from_gaps([0.1], 0.5).delta_max_bar == 1.0
    assert scheme_from_gaps([2.0], 3.0).delta_max_bar == 3.0


def test_increment_length_checked():
    s = scheme_from_gaps([1.0, 1.0], 2.0)
    with pytest.raises(LengthMismatch):
        ObservationSet(s, [1.0])


gap_lists = st.lists(
    st.floats(min_value=1e-6, max_value=6.0, allow_nan=False), min_size=1,
    max_size=50,
)


@given(gap_lists)
@settings(max_examples=100, deadline=None)
def test_round_trip_reproduces_times(gaps):
    s = scheme_from_gaps(gaps, delta_max=6.0)
    again = scheme_from_gaps(s.deltas, s.delta_max)
    assert np.array_equal(again.times, s.times)


def test_uniform_gaps_support_and_count():
    s = draw_uniform_gaps(1000, 6.0, rng_seed=1)
    assert s.n == 1000
    assert s.delta_max == 6.0
    assert np.all(s.deltas > 0) and np.all(s.deltas <= 6.0)
    # sample mean of U(0,6) draws within 4 standard errors of 3
    se = 6.0 / np.sqrt(12.0) / np.sqrt(1000)
    assert abs(s.deltas.mean() - 3.0) < 4 * se


def test_uniform_single_gap_in_support():
    s = draw_uniform_gaps(1, 2.0, rng_seed=7)
    assert 0 < s.deltas[0] <= 2.0


def test_uniform_gaps_deterministic():
    a = draw_uniform_gaps(100, 6.0, rng_seed=42)
    b = draw_uniform_gaps(100, 6.0, rng_seed=42)
    assert np.array_equal(a.deltas, b.deltas)


def test_uniform_gap_mean_large_sample():
    s = draw_uniform_gaps(10**5, 2.0, rng_seed=3)
    se = 2.0 / np.sqrt(12.0) / np.sqrt(10**5)
    assert abs(s.deltas.mean() - 1.0) < 4 * se


def test_scheme_csv_round_trip(tmp_path):
    s = draw_uniform_gaps(30, 6.0, rng_seed=5)
    path = tmp_path / "scheme.csv"
    write_scheme_csv(s, path)
    header = path.read_text().splitlines()[0]
    assert header == "index,t,delta"
    back = read_scheme_csv(path, delta_max=6.0)
    assert np.array_equal(back.deltas, s.deltas)
    assert back.delta_max == 6.0
