import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cganlab.gan import build_gan
from cganlab.risk import (
    Portfolio,
    RiskReport,
    backtest,
    cgan_var_es,
    fan_quantiles,
    forecast_paths,
    hs_var_es,
    pnl_from_returns,
    shock_analysis,
    write_risk_table,
)

# 100-point fixtures: PnL -50..49 in shuffled order, and a tail with ties.
LADDER = np.random.default_rng(0).permutation(np.arange(-50.0, 50.0))
TIES = np.concatenate(([-10.0, -5.0, -5.0], np.zeros(97)))


@pytest.mark.parametrize(
    "pnl, level, var, es",
    [
        (LADDER, 0.99, -50.0, -50.0),
        (LADDER, 0.95, -46.0, -48.0),
        (LADDER, 0.90, -41.0, -45.5),
        (TIES, 0.99, -10.0, -10.0),
        (TIES, 0.98, -5.0, -20.0 / 3.0),
        (TIES, 0.97, -5.0, -20.0 / 3.0),
        (TIES, 0.96, 0.0, -0.2),
    ],
)
def test_hs_fixtures_exact(pnl, level, var, es):
    r = hs_var_es(pnl, level)
    assert r.var == var
    assert r.es == es
    assert r.sample_size == 100


def test_hs_errors():
    with pytest.raises(ValueError):
        hs_var_es([], 0.99)
    with pytest.raises(ValueError):
        hs_var_es([1.0, 2.0], 1.0)


@settings(max_examples=80, deadline=None)
@given(arrays(np.float64, st.integers(5, 200), elements=st.floats(-1e4, 1e4)), st.floats(0.5, 0.99), st.floats(0.5, 0.99))
def test_hs_monotone_and_es_below_var(pnl, l1, l2):
    lo, hi = sorted((l1, l2))
    a, b = hs_var_es(pnl, lo), hs_var_es(pnl, hi)
    assert b.var <= a.var
    assert a.es <= a.var and b.es <= b.var


def test_backtest_planted_breaches():
    rng = np.random.default_rng(1)
    realized = rng.uniform(-2.0, 5.0, size=1000)
    realized[:50] = -2.0  # sitting exactly at VaR is not a breach
    planted = rng.choice(np.arange(50, 1000), size=8, replace=False)
    realized[planted] = -3.0 - rng.random(8)
    res = backtest(RiskReport(-2.0, -2.5, 0.99, 1000), realized)
    assert res.breaches == 8
    assert res.expected_breaches == 10
    assert res.days == 1000 and res.model_es == -2.5


def test_backtest_no_breaches_and_calibration_consistency():
    x = np.random.default_rng(2).normal(size=1000)
    assert backtest(RiskReport(-100.0, -100.0, 0.99, 1), x).breaches == 0
    # scoring the calibration sample against itself: strictly below the 10th smallest is 9 days
    r = hs_var_es(x, 0.99)
    res = backtest(r, x)
    assert res.breaches == 9
    assert res.realized_es == r.es


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 50, elements=st.integers(-100, 100).map(float)), st.integers(-100, 100))
def test_breaches_invariant_under_increasing_transform(pnl, k):
    # integer PnL and a half-integer VaR keep the cubic map exact in floating point
    var = k + 0.5
    f = lambda v: np.asarray(v) ** 3 + 2.0 * np.asarray(v)
    a = backtest(RiskReport(var, var, 0.99, 1), pnl).breaches
    b = backtest(RiskReport(float(f(var)), float(f(var)), 0.99, 1), f(pnl)).breaches
    assert a == b


def test_pnl_from_returns():
    r = np.array([[1.0, 2.0], [-1.0, 0.5]])
    assert pnl_from_returns(r, Portfolio([1.0, 2.0])).tolist() == [5.0, 0.0]
    with pytest.raises(ValueError):
        pnl_from_returns(r, Portfolio([1.0]))


def small_cgan(data_dim=2, cdim=2, seed=0):
    spec = build_gan("cgan", data_dim, noise_dim=3, condition_dim=cdim, g_hidden=(8,), d_hidden=(8,), seed=seed)
    for layer in spec.generator.layers:
        layer.bias[:] = np.random.default_rng(seed).normal(0, 0.5, layer.bias.shape)
    return spec


def test_cgan_var_es_sample_size_and_mapping():
    gan = small_cgan()
    r = cgan_var_es(gan, [0.1, 0.2], 5, 0.99, np.random.default_rng(0), n_original=40, portfolio=Portfolio([1.0, 1.0]))
    assert r.sample_size == 200
    doubled = cgan_var_es(
        gan, [0.1, 0.2], 5, 0.99, np.random.default_rng(0), n_original=40,
        portfolio=Portfolio([1.0, 1.0]), to_returns=lambda d: 2.0 * d,
    )
    assert doubled.var == pytest.approx(2.0 * r.var)
    with pytest.raises(ValueError):
        cgan_var_es(gan, [0.0, 0.0], 0, 0.99, np.random.default_rng(0), n_original=40, portfolio=Portfolio([1, 1]))


def test_forecast_paths_shape_and_checks():
    gan = small_cgan(data_dim=6, cdim=4)
    paths = forecast_paths(gan, np.zeros((2, 2)), 11, np.random.default_rng(0), horizon=3, n_series=2)
    assert paths.shape == (11, 3, 2)
    bands = fan_quantiles(paths)
    assert bands.shape == (3, 3, 2)
    assert np.all(bands[0] <= bands[1]) and np.all(bands[1] <= bands[2])
    with pytest.raises(ValueError):
        forecast_paths(gan, np.zeros(3), 2, np.random.default_rng(0), horizon=3, n_series=2)
    with pytest.raises(ValueError):
        forecast_paths(gan, np.zeros(4), 2, np.random.default_rng(0), horizon=2, n_series=2)


def test_shock_null_and_unit_shock():
    gan = small_cgan(data_dim=6, cdim=4, seed=3)
    cond = np.random.default_rng(1).normal(size=(2, 2))
    null = shock_analysis(gan, cond, 1, 0.0, 50, np.random.default_rng(7), horizon=3, n_series=2)
    assert np.array_equal(null.baseline, null.shocked)
    unit = shock_analysis(gan, cond, 1, 1.0, 50, np.random.default_rng(7), horizon=3, n_series=2)
    assert np.array_equal(unit.baseline, null.baseline)
    assert not np.array_equal(unit.shocked, unit.baseline)
    assert unit.quarter == 1
    with pytest.raises(ValueError):
        shock_analysis(gan, cond, 2, 1.0, 5, np.random.default_rng(0), horizon=3, n_series=2)


def test_risk_table_csv(tmp_path):
    path = tmp_path / "risk.csv"
    write_risk_table(
        [
            {"method": "hs", "period": "stressed", "var": -1.5, "es": -2.25},
            {"method": "cgan", "period": "backtest", "var": 0.1, "es": float("nan"), "breaches": 3, "expected": 10.0},
        ],
        path,
    )
    assert path.read_text().splitlines() == [
        "method,period,var,es,breaches,expected",
        "hs,stressed,-1.5,-2.25,,",
        "cgan,backtest,0.10000000000000001,,3,10",
    ]
    assert b"\r" not in path.read_bytes()
