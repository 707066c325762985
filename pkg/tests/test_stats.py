import numpy as np
import pytest
import scipy.stats as ss
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.model_selection import GridSearchCV, KFold
from sklearn.neighbors import KernelDensity

from cganlab.stats import (
    STAT_NAMES,
    default_bandwidth_grid,
    dependency_from_pairs,
    dependency_stats,
    empirical_quantile,
    empirical_quantiles,
    kde_fit_cv,
    kde_log_likelihood,
    kde_sample,
    ks_statistic,
    lag_autocorrelation,
    linear_fit,
    moments,
    normal_cdf,
    panel_dependency_stats,
    qq_compare,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_moments_match_scipy():
    x = np.random.default_rng(0).gamma(2.0, size=5000)
    m = moments(x)
    assert m.mean == pytest.approx(x.mean())
    assert m.variance == pytest.approx(x.var())
    assert m.skewness == pytest.approx(ss.skew(x), rel=1e-10)
    assert m.excess_kurtosis == pytest.approx(ss.kurtosis(x), rel=1e-10)


def test_moments_errors():
    with pytest.raises(ValueError):
        moments([1.0, 2.0])
    with pytest.raises(ValueError):
        moments([1.0] * 10)


def test_dependency_hand_values():
    x = np.array([[1.0, 2.0], [2.0, 1.0], [4.0, 3.0], [3.0, 5.0]])
    d = dependency_stats(x)
    cur, prev = x[1:], x[:-1]
    assert d.cor_t == pytest.approx(np.corrcoef(cur[:, 0], prev[:, 0])[0, 1])
    assert d.cor_s == pytest.approx(np.corrcoef(cur[:, 0], cur[:, 1])[0, 1])
    assert d.cor_st == pytest.approx(np.corrcoef(cur[:, 0], prev[:, 1])[0, 1])
    assert d.vol_t == pytest.approx(np.corrcoef(cur[:, 0] ** 2, prev[:, 0] ** 2)[0, 1])
    assert list(d.as_dict("p_")) == [f"p_{n}" for n in STAT_NAMES]


def test_panel_dependency_matches_pairs():
    v = np.random.default_rng(1).normal(size=(50, 3, 2))
    a = panel_dependency_stats(v)
    cur = v[:, 1:].reshape(-1, 2)
    prev = v[:, :-1].reshape(-1, 2)
    assert a == dependency_from_pairs(cur, prev)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (20, 2), elements=finite))
def test_correlations_bounded(x):
    if np.any(x.std(axis=0) < 1e-6) or np.any((x * x).std(axis=0) < 1e-6):
        return
    try:
        d = dependency_stats(x)
    except ValueError:
        return
    for name in STAT_NAMES:
        assert -1.0 <= getattr(d, name) <= 1.0


def test_lag_autocorrelation_alternating():
    assert lag_autocorrelation([1.0, -1.0] * 10, 1) == pytest.approx(-1.0)
    assert lag_autocorrelation([1.0, -1.0] * 10, 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        lag_autocorrelation([1.0, 2.0, 3.0], 2)


def test_quantile_ceil_rank_frozen():
    x = np.arange(1.0, 101.0)
    assert empirical_quantile(x, 0.07) == 7.0
    assert empirical_quantile(x, 0.071) == 8.0
    assert empirical_quantile(x, 0.001) == 1.0
    assert empirical_quantile(x[::-1], 0.99) == 99.0
    np.testing.assert_array_equal(empirical_quantiles(x, [0.01, 0.5]), [1.0, 50.0])
    with pytest.raises(ValueError):
        empirical_quantile(x, 1.0)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=finite), st.floats(0.001, 0.999))
def test_quantile_matches_inverted_cdf(x, p):
    # numpy's inverted_cdf is the same ceil-rank definition, away from exact rank ties
    k = p * x.size
    if abs(k - round(k)) < 1e-6:
        return
    assert empirical_quantile(x, p) == np.quantile(x, p, method="inverted_cdf")


def test_linear_fit_exact_line():
    slope, icpt, r2 = linear_fit([0.0, 1.0, 2.0], [1.0, 3.0, 5.0])
    assert (slope, icpt, r2) == pytest.approx((2.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        linear_fit([1.0, 1.0], [0.0, 1.0])


def test_qq_identity_and_scale():
    x = np.random.default_rng(2).normal(size=1000)
    same = qq_compare(x, x)
    assert same.slope == pytest.approx(1.0) and same.r_squared == pytest.approx(1.0)
    scaled = qq_compare(x, 2.0 * x + 1.0)
    assert scaled.slope == pytest.approx(2.0) and scaled.intercept == pytest.approx(1.0)
    assert scaled.probs[0] == pytest.approx(1 / 101)
    with pytest.raises(ValueError):
        qq_compare(x, x, n_q=2000)
    with pytest.raises(ValueError):
        qq_compare(np.ones(200), x)


def test_ks_matches_scipy_two_sample():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=700), rng.normal(0.2, 1.1, size=500)
    assert ks_statistic(a, b) == pytest.approx(ss.ks_2samp(a, b).statistic, abs=1e-12)


def test_ks_matches_scipy_one_sample():
    x = np.random.default_rng(4).normal(0.1, 1.0, size=900)
    assert ks_statistic(x, normal_cdf) == pytest.approx(ss.kstest(x, "norm").statistic, abs=1e-12)
    assert ks_statistic(x, ss.expon.cdf) == pytest.approx(ss.kstest(x, "expon").statistic, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=finite), arrays(np.float64, st.integers(1, 30), elements=finite))
def test_ks_symmetric_and_bounded(a, b):
    d = ks_statistic(a, b)
    assert 0.0 <= d <= 1.0
    assert d == pytest.approx(ks_statistic(b, a))


def test_kde_likelihood_matches_sklearn():
    rng = np.random.default_rng(5)
    tr, te = rng.normal(size=(300, 2)), rng.normal(size=(50, 2))
    kd = KernelDensity(bandwidth=0.4).fit(tr)
    assert kde_log_likelihood(tr, te, 0.4) == pytest.approx(kd.score_samples(te).mean(), abs=1e-9)


def test_kde_cv_picks_same_bandwidth_as_sklearn():
    x = np.random.default_rng(6).normal(size=(400, 2)) * [1.0, 0.5]
    grid = default_bandwidth_grid(x, 15)
    folds = 5
    # interleaved folds: row i is held out in fold i % folds
    splits = [(np.flatnonzero(np.arange(400) % folds != f), np.flatnonzero(np.arange(400) % folds == f)) for f in range(folds)]
    search = GridSearchCV(KernelDensity(), {"bandwidth": grid}, cv=splits).fit(x)
    mine = kde_fit_cv(x, grid, folds)
    # sklearn scores the summed log-likelihood; equal fold sizes make the argmax identical
    assert mine == pytest.approx(search.best_params_["bandwidth"])


def test_kde_cv_validation():
    with pytest.raises(ValueError):
        kde_fit_cv(np.zeros((3, 1)), [0.1, 0.2], folds=5)
    with pytest.raises(ValueError):
        kde_fit_cv(np.zeros((10, 1)), [])
    assert kde_fit_cv(np.zeros((10, 1)), [0.3]) == 0.3


def test_kde_sample_moments():
    x = np.random.default_rng(7).normal(size=2000)
    s = kde_sample(x, 0.5, 200_000, np.random.default_rng(8))
    assert s.shape == (200_000,)
    assert s.var() == pytest.approx(x.var() + 0.25, rel=0.03)
