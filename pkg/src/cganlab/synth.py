"""Synthetic data for the simulation studies, plus exact conditional oracles.

``cov`` arguments are always the target covariance of the noise. A
Student-t with ``df`` degrees of freedom has covariance ``scale * df/(df-2)``,
so the scale matrix used for sampling is ``cov * (df - 2) / df``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def cholesky(cov) -> np.ndarray:
    c = np.asarray(cov, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"covariance must be square, got shape {c.shape}")
    if not np.allclose(c, c.T, rtol=0, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite") from exc


def psd_factor(cov) -> np.ndarray:
    """A factor ``F`` with ``F @ F.T == cov`` that also accepts singular PSD input."""
    c = np.asarray(cov, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or not np.allclose(c, c.T, atol=1e-12):
        raise ValueError("covariance must be a symmetric square matrix")
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(c)
        if vals.min() < -1e-10 * max(1.0, abs(vals).max()):
            raise ValueError("covariance is not positive semi-definite") from None
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


@dataclass
class MvTSpec:
    mean: np.ndarray
    cov: np.ndarray
    df: float = math.inf

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64).ravel()
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("mean and covariance dimensions disagree")
        if not self.df > 2:
            raise ValueError("df must exceed 2 for the covariance to exist")

    @property
    def dim(self) -> int:
        return self.mean.size


def _unit_t_draws(n: int, factor: np.ndarray, df: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean t draws whose covariance is ``factor @ factor.T``."""
    g = rng.standard_normal((n, factor.shape[0])) @ factor.T
    if math.isinf(df):
        return g
    w = rng.chisquare(df, size=n)
    return g * np.sqrt((df - 2.0) / w)[:, None]


def sample_mvt(spec: MvTSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    return spec.mean + _unit_t_draws(n, cholesky(spec.cov), spec.df, rng)


class NoiseMode(enum.Enum):
    CONSTANT = "constant"
    SUM_ABS = "sum_abs"  # cov scaled by sum_i |x_{i,t-1}|
    PER_SERIES_ABS = "per_series_abs"  # series i scaled by |x_{i,t-1}|


@dataclass
class VarSpec:
    c: np.ndarray
    a: np.ndarray
    noise: MvTSpec
    noise_mode: NoiseMode = NoiseMode.CONSTANT

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        self.a = np.asarray(self.a, dtype=np.float64).ravel()
        self.noise_mode = NoiseMode(self.noise_mode)
        if not (self.c.size == self.a.size == self.noise.dim):
            raise ValueError("c, a and noise dimensions disagree")

    @property
    def dim(self) -> int:
        return self.a.size


def _noise_scale(spec: VarSpec, prev: np.ndarray) -> np.ndarray:
    """Per-series multiplier applied to the unit noise (sqrt of the variance scale)."""
    if spec.noise_mode is NoiseMode.CONSTANT:
        return np.ones(spec.dim)
    if spec.noise_mode is NoiseMode.SUM_ABS:
        return np.full(spec.dim, math.sqrt(np.abs(prev).sum()))
    return np.sqrt(np.abs(prev))


def simulate_var1(spec: VarSpec, n: int, rng: np.random.Generator, burn_in: int = 100) -> np.ndarray:
    """``X_t = c + a * X_{t-1} + eps_t`` with the noise scaled per ``noise_mode``.

    Constant mode starts from the stationary mean. The scaled modes would
    never leave ``X = 0`` (zero noise there), so they start from one unit
    noise draw around ``c / (1 - a)`` instead.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if spec.noise_mode is NoiseMode.CONSTANT and np.any(np.abs(spec.a) >= 1):
        raise ValueError("|a| must be below 1 for a stationary process")
    factor = cholesky(spec.noise.cov)
    total = n + burn_in
    eps = _unit_t_draws(total + 1, factor, spec.noise.df, rng)
    mean = spec.c / (1.0 - spec.a) if np.all(spec.a != 1) else np.zeros(spec.dim)
    x = mean.copy()
    if spec.noise_mode is not NoiseMode.CONSTANT:
        x = x + eps[total]
    out = np.empty((total, spec.dim))
    c, a = spec.c, spec.a
    scaled = spec.noise_mode is not NoiseMode.CONSTANT
    for t in range(total):
        if scaled:
            x = c + a * x + _noise_scale(spec, x) * eps[t]
        else:
            x = c + a * x + eps[t]
        out[t] = x
    return out[burn_in:]


@dataclass
class RegionSpec:
    regions: list[tuple[VarSpec, int]]

    def __post_init__(self) -> None:
        if not self.regions:
            raise ValueError("need at least one region")
        if any(count < 1 for _, count in self.regions):
            raise ValueError("region sample counts must be positive")


def simulate_region_switching(
    spec: RegionSpec, rng: np.random.Generator, burn_in: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate independently burned-in VAR(1) segments; labels are region indices."""
    parts, labels = [], []
    for k, (var, count) in enumerate(spec.regions):
        parts.append(simulate_var1(var, count, rng, burn_in))
        labels.append(np.full(count, k, dtype=np.int64))
    return np.vstack(parts), np.concatenate(labels)


@dataclass
class GarchSpec:
    c: np.ndarray
    a: np.ndarray
    b: np.ndarray
    df: float = math.inf

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        self.a = np.asarray(self.a, dtype=np.float64).ravel()
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        if not (self.c.size == self.a.size == self.b.size):
            raise ValueError("c, a and b dimensions disagree")
        if np.any(self.c <= 0) or np.any(self.a < 0) or np.any(self.b < 0):
            raise ValueError("GARCH needs c > 0 and a, b >= 0")
        if np.any(self.a + self.b >= 1):
            raise ValueError("a + b must be below 1")
        if not self.df > 2:
            raise ValueError("df must exceed 2")

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def unconditional_variance(self) -> np.ndarray:
        return self.c / (1.0 - self.a - self.b)

    def next_variance(self, x_prev, sigma2_prev) -> np.ndarray:
        return self.c + self.a * np.asarray(x_prev) ** 2 + self.b * np.asarray(sigma2_prev)


def simulate_garch(
    spec: GarchSpec, n: int, rng: np.random.Generator, burn_in: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal GARCH(1,1) with t noise.

    Returns ``(x, sigma2)`` where ``sigma2[t]`` is the variance ``x[t]`` was
    drawn with; it depends only on information up to ``t - 1``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    total = n + burn_in
    e = _unit_t_draws(total, np.eye(spec.dim), spec.df, rng)
    x = np.empty((total, spec.dim))
    s2 = np.empty((total, spec.dim))
    s2[0] = spec.unconditional_variance
    x[0] = np.sqrt(s2[0]) * e[0]
    for t in range(1, total):
        s2[t] = spec.c + spec.a * x[t - 1] ** 2 + spec.b * s2[t - 1]
        x[t] = np.sqrt(s2[t]) * e[t]
    return x[burn_in:], s2[burn_in:]


@dataclass
class MixtureCluster:
    mean: np.ndarray
    cov: np.ndarray
    count: int
    label: int


@dataclass
class MixtureSpec:
    clusters: list[MixtureCluster] = field(default_factory=list)


def default_mixture(count: int = 1000) -> MixtureSpec:
    """Four 2-D clusters with distinct means, spreads and correlations."""
    return MixtureSpec(
        [
            MixtureCluster(np.array([-3.0, -3.0]), np.array([[0.5, 0.2], [0.2, 0.5]]), count, 0),
            MixtureCluster(np.array([3.0, -3.0]), np.array([[1.0, -0.4], [-0.4, 0.6]]), count, 1),
            MixtureCluster(np.array([-3.0, 3.0]), np.array([[0.3, 0.0], [0.0, 1.2]]), count, 2),
            MixtureCluster(np.array([3.0, 3.0]), np.array([[1.5, 0.6], [0.6, 1.0]]), count, 3),
        ]
    )


def gaussian_mixture_clusters(spec: MixtureSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    samples, labels = [], []
    for cl in spec.clusters:
        mean = np.asarray(cl.mean, dtype=np.float64)
        factor = psd_factor(cl.cov)
        g = rng.standard_normal((cl.count, mean.size))
        samples.append(mean + g @ factor.T)
        labels.append(np.full(cl.count, cl.label, dtype=np.int64))
    return np.vstack(samples), np.concatenate(labels)


def circle_variance_dataset(
    n_points: int = 1000,
    radius: float = 2.0,
    var_lo: float = 0.05,
    var_hi: float = 0.5,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussians centred on a circle, variance rising anticlockwise."""
    if n_points < 2:
        raise ValueError("need at least two points")
    if not 0 < var_lo <= var_hi:
        raise ValueError("need 0 < var_lo <= var_hi")
    rng = rng or np.random.default_rng()
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    means = radius * np.column_stack((np.cos(theta), np.sin(theta)))
    var = var_lo + (var_hi - var_lo) * np.arange(n_points) / (n_points - 1)
    samples = means + rng.standard_normal((n_points, 2)) * np.sqrt(var)[:, None]
    return samples, means


def line_variance_dataset(
    n_points: int = 1000,
    x_range: tuple[float, float] = (-5.0, 5.0),
    var_slope: float = 0.1,
    rng: np.random.Generator | None = None,
    base_var: float = 0.01,
) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussians centred along the x-axis with variance ``base + slope * |x|``."""
    if not var_slope > 0:
        raise ValueError("var_slope must be positive")
    lo, hi = x_range
    if not hi > lo or n_points < 2:
        raise ValueError("invalid range or point count")
    rng = rng or np.random.default_rng()
    xs = np.linspace(lo, hi, n_points)
    means = np.column_stack((xs, np.zeros(n_points)))
    var = base_var + var_slope * np.abs(xs)
    samples = means + rng.standard_normal((n_points, 2)) * np.sqrt(var)[:, None]
    return samples, means


def central_slice(n: int, clip_fraction: float) -> slice:
    """Rows left after dropping ``clip_fraction`` of ``n`` from each end."""
    if not 0 <= clip_fraction < 0.5:
        raise ValueError("clip_fraction must lie in [0, 0.5)")
    k = int(round(n * clip_fraction))
    return slice(k, n - k)


def true_conditional_distribution(spec, condition, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact one-step draws given the previous value (VAR) or the current variance (GARCH)."""
    cond = np.asarray(condition, dtype=np.float64).ravel()
    if isinstance(spec, VarSpec):
        if cond.size != spec.dim:
            raise ValueError(f"condition has {cond.size} entries, expected {spec.dim}")
        eps = _unit_t_draws(n, cholesky(spec.noise.cov), spec.noise.df, rng)
        return spec.c + spec.a * cond + _noise_scale(spec, cond) * eps
    if isinstance(spec, GarchSpec):
        if cond.size != spec.dim:
            raise ValueError(f"condition has {cond.size} entries, expected {spec.dim}")
        if np.any(cond < 0):
            raise ValueError("a variance condition cannot be negative")
        e = _unit_t_draws(n, np.eye(spec.dim), spec.df, rng)
        return np.sqrt(cond) * e
    raise TypeError(f"no conditional oracle for {type(spec).__name__}")


# -- study parameter sets ----------------------------------------------------

CORR_HALF = np.array([[1.0, 0.5], [0.5, 1.0]])


def var_constant_spec() -> VarSpec:
    return VarSpec([0.0, 0.0], [0.8, 0.6], MvTSpec([0.0, 0.0], CORR_HALF, 6.0))


def var_sum_abs_spec() -> VarSpec:
    return VarSpec([0.0, 0.0], [0.8, 0.6], MvTSpec([0.0, 0.0], np.eye(2), 20.0), NoiseMode.SUM_ABS)


def var_per_series_spec() -> VarSpec:
    return VarSpec([0.0, 0.0], [0.8, 0.6], MvTSpec([0.0, 0.0], np.eye(2), 20.0), NoiseMode.PER_SERIES_ABS)


def region_spec(count: int = 10_000) -> RegionSpec:
    r1 = VarSpec([-1.0, 0.0], [0.8, 0.8], MvTSpec([0.0, 0.0], CORR_HALF, 6.0))
    r2 = VarSpec([1.0, 0.0], [0.5, 0.5], MvTSpec([0.0, 0.0], [[1.0, 0.3], [0.3, 1.0]], 12.0))
    return RegionSpec([(r1, count), (r2, count)])


def garch_spec() -> GarchSpec:
    return GarchSpec([0.3, 0.3], [0.3, 0.3], [0.6, 0.6], 20.0)


# -- stand-ins for the real-data studies ---------------------------------------


def synthetic_prices(
    dates: Sequence, boundary_index: int, rng: np.random.Generator, start=(30.0, 35.0)
) -> np.ndarray:
    """Two correlated price paths, turbulent before ``boundary_index`` and calm after.

    Daily price changes follow a GARCH-like variance with t noise; the
    turbulent block has larger variance, heavier tails and higher
    correlation. Prices are floored at 1.
    """
    n = len(dates)
    out = np.empty((n, 2))
    p = np.array(start, dtype=np.float64)
    s2 = np.array([1.0, 1.2])
    for t in range(n):
        stressed = t < boundary_index
        rho, df, base = (0.75, 4.0, 0.25) if stressed else (0.55, 8.0, 0.06)
        factor = np.linalg.cholesky(np.array([[1.0, rho], [rho, 1.0]]))
        e = _unit_t_draws(1, factor, df, rng)[0]
        move = np.sqrt(s2) * e
        s2 = base + 0.08 * move**2 + 0.85 * s2
        p = np.maximum(p + move, 1.0)
        out[t] = p
    return out


MACRO_SERIES = ("gdp", "unemp", "fedfunds", "cpi", "treasury10y")


def synthetic_macro(n_quarters: int, rng: np.random.Generator) -> np.ndarray:
    """Five quarterly level series driven by a stable VAR(1) in growth terms.

    Columns follow ``MACRO_SERIES``; GDP and CPI are positive index levels,
    the other three are rates. A rate shock feeds into unemployment with a
    lag so shock experiments have something to find.
    """
    a = np.array(
        [
            [0.35, -0.10, -0.08, 0.00, 0.00],
            [-0.25, 0.55, 0.12, 0.00, 0.00],
            [0.10, -0.05, 0.60, 0.10, 0.05],
            [0.05, 0.00, 0.05, 0.50, 0.00],
            [0.05, 0.00, 0.30, 0.05, 0.45],
        ]
    )
    cov = np.diag([0.6, 0.3, 0.4, 0.3, 0.3]) ** 2
    g = np.zeros(5)
    levels = np.empty((n_quarters, 5))
    lvl = np.array([100.0, 5.5, 4.0, 30.0, 5.0])
    drift = np.array([0.75, 0.0, 0.0, 0.9, 0.0])
    f = np.linalg.cholesky(cov)
    for t in range(n_quarters):
        g = a @ g + f @ rng.standard_normal(5)
        step = drift + g
        lvl = lvl.copy()
        lvl[0] *= math.exp(step[0] / 100.0)
        lvl[3] *= math.exp(step[3] / 100.0)
        lvl[1] = max(lvl[1] + 0.5 * step[1] - 0.02 * (lvl[1] - 5.5), 0.5)
        lvl[2] = max(lvl[2] + 0.5 * step[2] - 0.02 * (lvl[2] - 4.0), 0.05)
        lvl[4] = max(lvl[4] + 0.4 * step[4] - 0.02 * (lvl[4] - 5.0), 0.2)
        levels[t] = lvl
    return levels
