"""Diagnostics: moments, lag/cross dependence, QQ fits, KS distance, Gaussian KDE."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp


@dataclass
class MomentSummary:
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float


def moments(samples) -> MomentSummary:
    """Population-normalised central moments of a 1-D sample."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 4:
        raise ValueError("need at least 4 observations")
    mu = x.mean()
    d = x - mu
    m2 = np.mean(d * d)
    if m2 <= 0:
        raise ValueError("zero variance: skewness and kurtosis are undefined")
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return MomentSummary(float(mu), float(m2), float(m3 / m2**1.5), float(m4 / m2**2 - 3.0))


@dataclass
class DependencyStats:
    cor_t: float
    cor_s: float
    cor_st: float
    vol_t: float
    vol_s: float
    vol_st: float

    def as_dict(self, prefix: str = "") -> dict[str, float]:
        return {prefix + f.name: getattr(self, f.name) for f in fields(self)}


STAT_NAMES = tuple(f.name for f in fields(DependencyStats))


def _corr(u: np.ndarray, v: np.ndarray) -> float:
    du, dv = u - u.mean(), v - v.mean()
    den = math.sqrt(float(np.dot(du, du)) * float(np.dot(dv, dv)))
    if den == 0:
        raise ValueError("correlation of a constant series is undefined")
    return float(np.clip(np.dot(du, dv) / den, -1.0, 1.0))


def dependency_from_pairs(current: np.ndarray, previous: np.ndarray, i: int = 0, j: int = 1) -> DependencyStats:
    """The six statistics from aligned (x_t, x_{t-1}) rows.

    ``cor_t`` is series ``i`` against its own lag, ``cor_s`` is ``i`` against
    ``j`` at the same time, ``cor_st`` is ``i`` at t against ``j`` at t-1. The
    ``vol_*`` versions repeat this on the squared (not demeaned) values.
    """
    cur = np.asarray(current, dtype=np.float64)
    prev = np.asarray(previous, dtype=np.float64)
    if cur.shape != prev.shape or cur.ndim != 2 or cur.shape[0] < 2:
        raise ValueError("current/previous must be matching (n >= 2, k) arrays")

    def six(c, p):
        return (_corr(c[:, i], p[:, i]), _corr(c[:, i], c[:, j]), _corr(c[:, i], p[:, j]))

    lin = six(cur, prev)
    sq = six(cur * cur, prev * prev)
    return DependencyStats(*lin, *sq)


def dependency_stats(series, i: int = 0, j: int = 1) -> DependencyStats:
    """Dependence statistics of a Time x Series matrix (lag 1)."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3 or x.shape[1] < 2:
        raise ValueError("need a Time x Series matrix with at least 3 rows and 2 series")
    return dependency_from_pairs(x[1:], x[:-1], i, j)


def panel_dependency_stats(panel: np.ndarray, i: int = 0, j: int = 1) -> DependencyStats:
    """Same statistics computed across samples of a (S, T>=2, N) panel."""
    v = np.asarray(panel, dtype=np.float64)
    if v.ndim != 3 or v.shape[1] < 2:
        raise ValueError("need a panel with at least two time steps")
    cur = v[:, 1:, :].reshape(-1, v.shape[2])
    prev = v[:, :-1, :].reshape(-1, v.shape[2])
    return dependency_from_pairs(cur, prev, i, j)


def lag_autocorrelation(x, lag: int) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    if lag < 1 or lag >= x.size - 1:
        raise ValueError("lag out of range")
    return _corr(x[lag:], x[:-lag])


def _ceil_rank(p: float, n: int) -> int:
    # round first so 0.07 * 100 = 7.000000000000001 still maps to rank 7
    return min(max(math.ceil(round(p * n, 9)), 1), n)


def empirical_quantile(sample, p: float) -> float:
    """The ceil(p*n)-th smallest value (1-indexed)."""
    x = np.asarray(sample, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    k = _ceil_rank(p, x.size)
    return float(np.partition(x, k - 1)[k - 1])


def empirical_quantiles(sample, probs: Sequence[float]) -> np.ndarray:
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("empty sample")
    return np.array([x[_ceil_rank(p, x.size) - 1] for p in probs])


@dataclass
class QqResult:
    probs: np.ndarray
    q_a: np.ndarray
    q_b: np.ndarray
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x, y) -> tuple[float, float, float]:
    """OLS slope, intercept and R^2 (squared correlation) of y on x."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size or x.size < 2:
        raise ValueError("need two equal-length vectors with at least 2 points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, sxy, syy = float(dx @ dx), float(dx @ dy), float(dy @ dy)
    if sxx == 0:
        raise ValueError("x is constant; slope undefined")
    slope = sxy / sxx
    r2 = sxy * sxy / (sxx * syy) if syy > 0 else 0.0
    return slope, float(y.mean() - slope * x.mean()), r2


def qq_compare(a, b, n_q: int = 100) -> QqResult:
    """Matched quantiles at ``k / (n_q + 1)`` and the OLS line of b on a."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    if n_q < 2:
        raise ValueError("n_q must be at least 2")
    if n_q > min(a.size, b.size):
        raise ValueError(f"n_q={n_q} exceeds the smaller sample size {min(a.size, b.size)}")
    probs = np.arange(1, n_q + 1) / (n_q + 1)
    qa = empirical_quantiles(a, probs)
    qb = empirical_quantiles(b, probs)
    if np.all(qa == qa[0]):
        raise ValueError("reference quantiles are constant; slope undefined")
    slope, intercept, r2 = linear_fit(qa, qb)
    return QqResult(probs, qa, qb, slope, intercept, r2)


def ks_statistic(sample, reference) -> float:
    """Sup distance between the sample's ECDF and a reference.

    ``reference`` is either another sample (two-sample statistic) or a
    vectorised CDF callable.
    """
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    if callable(reference):
        cdf = np.asarray(reference(x), dtype=np.float64)
        upper = np.arange(1, n + 1) / n - cdf
        lower = cdf - np.arange(n) / n
        return float(max(upper.max(), lower.max(), 0.0))
    y = np.sort(np.asarray(reference, dtype=np.float64).ravel())
    if y.size == 0:
        raise ValueError("empty reference sample")
    grid = np.concatenate((x, y))
    fx = np.searchsorted(x, grid, side="right") / n
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def normal_cdf(x):
    from scipy.special import ndtr

    return ndtr(x)


# -- Gaussian KDE --------------------------------------------------------------


def default_bandwidth_grid(data, n: int = 20) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    scale = float(np.mean(x.std(axis=0)))
    return np.logspace(-2, 0, n) * scale


def kde_log_likelihood(train, test, bandwidth: float) -> float:
    """Mean log-density of ``test`` rows under an isotropic Gaussian KDE on ``train``."""
    tr = np.atleast_2d(np.asarray(train, dtype=np.float64))
    te = np.atleast_2d(np.asarray(test, dtype=np.float64))
    d = tr.shape[1]
    sq = (te * te).sum(1)[:, None] - 2.0 * te @ tr.T + (tr * tr).sum(1)[None, :]
    np.maximum(sq, 0.0, out=sq)
    log_k = -0.5 * sq / bandwidth**2
    log_norm = math.log(tr.shape[0]) + 0.5 * d * math.log(2.0 * math.pi * bandwidth**2)
    return float(np.mean(logsumexp(log_k, axis=1) - log_norm))


def kde_fit_cv(data, bandwidth_grid=None, folds: int = 5) -> float:
    """Bandwidth with the best mean held-out log-likelihood over interleaved folds."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    grid = default_bandwidth_grid(x) if bandwidth_grid is None else np.asarray(bandwidth_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("empty bandwidth grid")
    if folds < 2 or x.shape[0] < folds:
        raise ValueError("need folds >= 2 and at least one row per fold")
    if grid.size == 1:
        return float(grid[0])
    fold_of = np.arange(x.shape[0]) % folds
    scores = []
    for h in grid:
        ll = [kde_log_likelihood(x[fold_of != f], x[fold_of == f], h) for f in range(folds)]
        scores.append(np.mean(ll))
    scores = np.asarray(scores)
    if not np.any(np.isfinite(scores)):
        raise ValueError("every bandwidth produced a degenerate likelihood")
    return float(grid[int(np.nanargmax(np.where(np.isfinite(scores), scores, -np.inf)))])


def kde_sample(data, bandwidth: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Resample rows uniformly and add isotropic N(0, bandwidth^2) noise."""
    x = np.asarray(data, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    idx = rng.integers(0, x.shape[0], size=n)
    out = x[idx] + bandwidth * rng.standard_normal((n, x.shape[1]))
    return out[:, 0] if squeeze else out


Cdf = Callable[[np.ndarray], np.ndarray]
