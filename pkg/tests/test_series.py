import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from succex.errors import DataError, EmptySeriesError, InvalidArgumentError, WindowError
from succex.series import (
    TimeSeries,
    autocorrelation,
    block_maxima,
    drop_zeros,
    moving_minimum,
    moving_quantile,
)

values = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60)


def test_rejects_bad_input():
    with pytest.raises(EmptySeriesError):
        TimeSeries([], [])
    with pytest.raises(DataError):
        TimeSeries([0, 1], [1.0])
    with pytest.raises(DataError):
        TimeSeries([1, 0], [1.0, 2.0])
    with pytest.raises(DataError):
        TimeSeries([0, 1], [1.0, np.nan])


def test_ties_allowed_and_immutable():
    s = TimeSeries([0, 0, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


@given(values, st.integers(1, 10))
def test_moving_minimum_matches_bruteforce(xs, k):
    s = TimeSeries.from_values(xs)
    if k > len(xs):
        with pytest.raises(WindowError):
            moving_minimum(s, k)
        return
    out = moving_minimum(s, k)
    expect = [min(xs[j:j + k]) for j in range(len(xs) - k + 1)]
    np.testing.assert_array_equal(out.values, expect)
    np.testing.assert_array_equal(out.covariates, s.covariates[: len(expect)])


@given(values, st.integers(1, 8))
def test_moving_minimum_is_nonincreasing_in_k(xs, k):
    s = TimeSeries.from_values(xs)
    if k + 1 > len(xs):
        return
    a, b = moving_minimum(s, k).values, moving_minimum(s, k + 1).values
    assert np.all(b <= a[: len(b)])


def test_block_maxima_drops_tail_and_labels_midpoints():
    s = TimeSeries.from_values(np.arange(23.0))
    bm = block_maxima(s, 5)
    np.testing.assert_array_equal(bm.maxima, [4, 9, 14, 19])
    np.testing.assert_array_equal(bm.block_covariates, [2, 7, 12, 17])
    with pytest.raises(WindowError):
        block_maxima(s, 24)
    with pytest.raises(WindowError):
        block_maxima(s, 0)


@settings(max_examples=50)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=40),
       st.floats(0.5, 20), st.floats(0.01, 0.99))
def test_moving_quantile_matches_numpy(xs, span, q):
    s = TimeSeries.from_values(xs)
    out = moving_quantile(s, span, q).values
    t = s.covariates
    for i in range(len(xs)):
        w = np.asarray(xs)[(t >= t[i] - span / 2) & (t <= t[i] + span / 2)]
        assert out[i] == pytest.approx(np.quantile(w, q), abs=1e-9)


def test_moving_quantile_arguments():
    s = TimeSeries.from_values([1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        moving_quantile(s, 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        moving_quantile(s, 0.0, 0.5)


def test_autocorrelation():
    x = np.sin(np.arange(200) / 3.0)
    acf = autocorrelation(TimeSeries.from_values(x), 5)
    assert acf[0] == 1.0
    d = x - x.mean()
    assert acf[2] == pytest.approx(d[:-2] @ d[2:] / (d @ d))
    with pytest.raises(DataError):
        autocorrelation(TimeSeries.from_values([1.0, 1.0, 1.0]), 1)
    with pytest.raises(InvalidArgumentError):
        autocorrelation(TimeSeries.from_values(x), 200)


def test_drop_zeros():
    s = TimeSeries.from_values([0.0, 1.0, 0.0, 2.0])
    out = drop_zeros(s)
    np.testing.assert_array_equal(out.values, [1, 2])
    np.testing.assert_array_equal(out.covariates, [1, 3])
    with pytest.raises(EmptySeriesError):
        drop_zeros(TimeSeries.from_values([0.0]))
