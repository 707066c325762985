"""Historical-simulation and generator-based VaR/ES, backtests, forecast fans, shocks.

VaR is reported as a signed PnL quantile, so a loss shows up as a negative
number and ``es <= var``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .gan import GanSpec, generate_from_noise, sample_noise
from .stats import empirical_quantile


@dataclass
class Portfolio:
    positions: np.ndarray

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=np.float64).ravel()


@dataclass
class RiskReport:
    var: float
    es: float
    level: float
    sample_size: int


@dataclass
class BacktestResult:
    breaches: int
    expected_breaches: float
    realized_es: float
    model_es: float
    days: int


@dataclass
class ShockReport:
    baseline: np.ndarray  # Quarters x Series mean path
    shocked: np.ndarray
    variable: int
    shock_sd: float
    quarter: int  # index of the shocked condition quarter


def pnl_from_returns(returns, portfolio: Portfolio) -> np.ndarray:
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim == 1:
        r = r[:, None]
    if r.shape[1] != portfolio.positions.size:
        raise ValueError(f"{r.shape[1]} return columns for {portfolio.positions.size} positions")
    return r @ portfolio.positions


def hs_var_es(pnl, level: float = 0.99) -> RiskReport:
    """VaR is the (1 - level) empirical quantile; ES averages every PnL at or below it."""
    x = np.asarray(pnl, dtype=np.float64).ravel()
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if x.size == 0:
        raise ValueError("empty PnL sample leaves no tail")
    var = empirical_quantile(x, 1.0 - level)
    # the mean of a tail of equal values can round a hair above them
    es = min(float(x[x <= var].mean()), var)
    return RiskReport(var, es, level, int(x.size))


def cgan_var_es(
    gan: GanSpec,
    condition,
    scale: int,
    level: float,
    rng: np.random.Generator,
    *,
    n_original: int,
    portfolio: Portfolio,
    to_returns: Callable[[np.ndarray], np.ndarray] | None = None,
) -> RiskReport:
    """HS VaR/ES on ``scale * n_original`` conditional draws from the generator.

    ``to_returns`` maps raw generator rows to a Time x Series return matrix
    (undoing any scaling or panel flattening); identity by default.
    """
    if scale < 1:
        raise ValueError("scale must be at least 1")
    n = int(scale * n_original)
    z = sample_noise(n, gan, rng)
    draws = generate_from_noise(gan, z, condition)
    returns = draws if to_returns is None else to_returns(draws)
    return hs_var_es(pnl_from_returns(returns, portfolio), level)


def backtest(report: RiskReport, realized_pnl) -> BacktestResult:
    """Count days strictly below the model VaR and compare realized and model ES."""
    x = np.asarray(realized_pnl, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty realized PnL")
    breaches = int(np.sum(x < report.var))
    q = empirical_quantile(x, 1.0 - report.level)
    realized_es = float(x[x <= q].mean())
    # round away float noise: (1 - 0.99) * 1000 is 10.000000000000009 unrounded
    expected = round((1.0 - report.level) * x.size, 9)
    return BacktestResult(breaches, expected, realized_es, report.es, int(x.size))


def forecast_paths(
    gan: GanSpec,
    condition,
    n_paths: int,
    rng: np.random.Generator,
    *,
    horizon: int,
    n_series: int,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """``n_paths`` conditional draws unflattened to (paths, horizon, series).

    ``condition`` is the (cond_window, series) slice or its flattened row.
    """
    cond = np.asarray(condition, dtype=np.float64).reshape(1, -1)
    if cond.shape[1] != gan.condition_dim:
        raise ValueError(f"condition has {cond.shape[1]} values, model expects {gan.condition_dim}")
    if horizon * n_series != gan.data_dim:
        raise ValueError(f"horizon x series = {horizon * n_series} != generator output {gan.data_dim}")
    z = sample_noise(n_paths, gan, rng) if noise is None else noise
    draws = generate_from_noise(gan, z, cond)
    return draws.reshape(n_paths, horizon, n_series)


def fan_quantiles(paths: np.ndarray, probs: Sequence[float] = (0.01, 0.5, 0.99)) -> np.ndarray:
    """Per-quarter, per-series quantile bands of a forecast fan: (len(probs), horizon, series)."""
    return np.quantile(paths, probs, axis=0)


def shock_analysis(
    gan: GanSpec,
    condition,
    variable: int,
    shock_sd: float,
    n_paths: int,
    rng: np.random.Generator,
    *,
    horizon: int,
    n_series: int,
) -> ShockReport:
    """Mean paths before and after adding ``shock_sd`` to one variable in the last condition quarter.

    Both runs reuse one noise draw, so the difference isolates the shock.
    """
    cond = np.asarray(condition, dtype=np.float64)
    if cond.ndim == 1:
        cond = cond.reshape(-1, n_series)
    if not 0 <= variable < n_series:
        raise ValueError(f"variable index {variable} out of range")
    shocked = cond.copy()
    shocked[-1, variable] += shock_sd
    z = sample_noise(n_paths, gan, rng)
    kw = dict(horizon=horizon, n_series=n_series, noise=z)
    base = forecast_paths(gan, cond, n_paths, rng, **kw).mean(axis=0)
    shock = forecast_paths(gan, shocked, n_paths, rng, **kw).mean(axis=0)
    return ShockReport(base, shock, variable, shock_sd, cond.shape[0] - 1)


def write_risk_table(rows: Sequence[dict], path: str | Path) -> None:
    """Table-style comparison CSV: method, period, var, es, breaches, expected."""
    cols = ["method", "period", "var", "es", "breaches", "expected"]

    def cell(v):
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return ""
        if isinstance(v, (float, np.floating)):
            return format(float(v), ".17g")
        return str(v)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([cell(row.get(c)) for c in cols])
