import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cganlab.prep import (
    PanelData,
    ScaleParams,
    dummy_decode,
    dummy_encode,
    flatten_panel,
    inverse_standardize,
    lag_conditions,
    make_stationary,
    sliding_window,
    split_condition_target,
    standardize,
    unflatten_panel,
)


def test_sliding_window_layout():
    x = np.arange(10.0).reshape(5, 2)
    panel = sliding_window(x, 3, ["a", "b"])
    assert panel.values.shape == (3, 3, 2)
    np.testing.assert_array_equal(panel.values[1], x[1:4])
    assert panel.series_names == ["a", "b"]
    # time-major flattening: all series at t=0, then t=1
    assert panel.flatten()[0].tolist() == [0, 1, 2, 3, 4, 5]


def test_sliding_window_rejects_bad_window():
    with pytest.raises(ValueError):
        sliding_window(np.zeros(4), 5)
    with pytest.raises(ValueError):
        sliding_window(np.zeros(4), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20), st.integers(1, 4), st.data())
def test_window_flatten_round_trip(length, n_series, data):
    window = data.draw(st.integers(1, length))
    x = np.random.default_rng(length * 7 + n_series).normal(size=(length, n_series))
    panel = sliding_window(x, window)
    assert panel.n_samples == length - window + 1
    back = unflatten_panel(flatten_panel(panel.values), window, n_series)
    np.testing.assert_array_equal(back, panel.values)
    for s in range(panel.n_samples):
        np.testing.assert_array_equal(panel.values[s], x[s : s + window])


def test_unflatten_checks_width():
    with pytest.raises(ValueError):
        unflatten_panel(np.zeros((2, 5)), 2, 2)


def test_panel_validation():
    with pytest.raises(ValueError):
        PanelData(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        PanelData(np.zeros((2, 3, 2)), ["only one"])


def test_split_condition_target():
    panel = sliding_window(np.arange(12.0).reshape(6, 2), 3)
    head, tail = split_condition_target(panel, 2)
    assert head.window == 2 and tail.window == 1
    np.testing.assert_array_equal(np.concatenate((head.values, tail.values), axis=1), panel.values)
    with pytest.raises(ValueError):
        split_condition_target(panel, 3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=30))
def test_dummy_round_trip(labels):
    codes = dummy_encode(labels, 7)
    assert codes.sum(axis=1).tolist() == [1.0] * len(labels)
    assert dummy_decode(codes).tolist() == labels


def test_dummy_rejects_out_of_range():
    with pytest.raises(ValueError):
        dummy_encode([0, 3], 3)


def test_standardize_uses_population_std():
    x = np.array([[1.0], [3.0]])
    z, params = standardize(x)
    assert params.std.tolist() == [1.0]
    assert z.ravel().tolist() == [-1.0, 1.0]


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (12, 3), elements=st.floats(-1e3, 1e3)))
def test_standardize_round_trip(x):
    if np.any(x.std(axis=0) < 1e-3):
        return
    z, params = standardize(x)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(z.std(axis=0), 1, atol=1e-9)
    np.testing.assert_allclose(inverse_standardize(z, params), x, rtol=1e-10, atol=1e-9)


def test_standardize_rejects_constant_and_reuses_params():
    with pytest.raises(ValueError):
        standardize(np.ones((4, 1)))
    with pytest.raises(ValueError):
        ScaleParams([0.0], [0.0])
    _, params = standardize(np.array([[0.0], [2.0]]))
    z, same = standardize(np.array([[4.0]]), params)
    assert same is params and z.tolist() == [[3.0]]


def test_lag_conditions_alignment():
    x = np.arange(5.0)
    tgt, cond = lag_conditions(x, 2)
    assert tgt.ravel().tolist() == [2.0, 3.0, 4.0]
    assert cond.ravel().tolist() == [0.0, 1.0, 2.0]
    with pytest.raises(ValueError):
        lag_conditions(x, 5)


def test_make_stationary_modes():
    x = np.array([[1.0, 10.0, 5.0], [2.0, 20.0, 6.0], [4.0, 40.0, 8.0]])
    out = make_stationary(x, ["diff", "logdiff", "level"])
    np.testing.assert_allclose(out[:, 0], [1.0, 2.0])
    np.testing.assert_allclose(out[:, 1], [np.log(2.0)] * 2)
    np.testing.assert_allclose(out[:, 2], [6.0, 8.0])
    assert make_stationary(x, ["level"] * 3).shape == (3, 3)
    with pytest.raises(ValueError):
        make_stationary(-x, ["logdiff"] * 3)
    with pytest.raises(ValueError):
        make_stationary(x, ["diff"])
    with pytest.raises(ValueError):
        make_stationary(x, ["diff", "diff", "cube"])
