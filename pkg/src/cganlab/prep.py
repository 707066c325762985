"""Data shaping: sliding-window panels, dummy codes, scaling, lag alignment."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class PanelData:
    """Sample x Time x Series array built from overlapping windows."""

    values: np.ndarray
    series_names: list[str] = field(default_factory=list)
    window: int = 0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ValueError(f"panel values must be 3-D, got shape {self.values.shape}")
        if self.window == 0:
            self.window = self.values.shape[1]
        if self.values.shape[1] != self.window:
            raise ValueError(f"time axis {self.values.shape[1]} != window {self.window}")
        if not self.series_names:
            self.series_names = [f"s{i}" for i in range(self.values.shape[2])]
        if len(self.series_names) != self.values.shape[2]:
            raise ValueError("one name per series required")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[2]

    def flatten(self) -> np.ndarray:
        return flatten_panel(self.values)


@dataclass
class ScaleParams:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if np.any(self.std <= 0):
            raise ValueError("stored standard deviations must be positive")


def _as_2d(series) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"expected a Time x Series matrix, got shape {x.shape}")
    return x


def sliding_window(series, window: int, series_names: Sequence[str] | None = None) -> PanelData:
    """Stride-1 windows: sample ``s`` holds rows ``[s, s + window)``."""
    x = _as_2d(series)
    if window < 1 or window > x.shape[0]:
        raise ValueError(f"window {window} invalid for a series of length {x.shape[0]}")
    n = x.shape[0] - window + 1
    values = np.stack([x[s : s + window] for s in range(n)])
    return PanelData(values, list(series_names or []), window)


def flatten_panel(values: np.ndarray) -> np.ndarray:
    """(S, T, N) -> (S, T*N), time-major: all series at t=0, then t=1, ..."""
    v = np.asarray(values, dtype=np.float64)
    return v.reshape(v.shape[0], -1)


def unflatten_panel(flat: np.ndarray, window: int, n_series: int) -> np.ndarray:
    f = np.asarray(flat, dtype=np.float64)
    if f.shape[-1] != window * n_series:
        raise ValueError(f"row length {f.shape[-1]} != {window} x {n_series}")
    return f.reshape(f.shape[0], window, n_series)


def dummy_encode(labels, k: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    out = np.zeros((labels.size, k))
    out[np.arange(labels.size), labels.astype(int)] = 1.0
    return out


def dummy_decode(codes: np.ndarray) -> np.ndarray:
    return np.argmax(np.asarray(codes), axis=1)


def standardize(data, params: ScaleParams | None = None) -> tuple[np.ndarray, ScaleParams]:
    """Column-wise (x - mean) / std with the population std.

    Fits new parameters unless ``params`` is given.
    """
    x = np.asarray(data, dtype=np.float64)
    if params is None:
        std = x.std(axis=0)
        if np.any(std <= 0):
            raise ValueError("cannot standardize a constant column")
        params = ScaleParams(x.mean(axis=0), std)
    return (x - params.mean) / params.std, params


def inverse_standardize(scaled, params: ScaleParams) -> np.ndarray:
    return np.asarray(scaled, dtype=np.float64) * params.std + params.mean


def lag_conditions(series, lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Align each value with the one ``lag`` steps before it.

    Returns ``(targets, conditions)`` with ``targets[i] = x[i + lag]`` and
    ``conditions[i] = x[i]``.
    """
    x = _as_2d(series)
    if lag < 0 or lag >= x.shape[0]:
        raise ValueError(f"lag {lag} invalid for a series of length {x.shape[0]}")
    return x[lag:].copy(), x[: x.shape[0] - lag].copy()


def split_condition_target(panel: PanelData, cond_window: int) -> tuple[PanelData, PanelData]:
    if not 0 < cond_window < panel.window:
        raise ValueError(f"cond_window must lie in (0, {panel.window})")
    names = list(panel.series_names)
    head = PanelData(panel.values[:, :cond_window].copy(), names, cond_window)
    tail = PanelData(panel.values[:, cond_window:].copy(), names, panel.window - cond_window)
    return head, tail


STATIONARITY_MODES = ("level", "diff", "logdiff")


def make_stationary(series, modes: Sequence[str]) -> np.ndarray:
    """Per-column level / first difference / log difference.

    Differenced outputs lose the first row, so every column is trimmed by
    one when any mode differences.
    """
    x = _as_2d(series)
    if len(modes) != x.shape[1]:
        raise ValueError("one transform per series required")
    cols = []
    trim = any(m != "level" for m in modes)
    for j, mode in enumerate(modes):
        col = x[:, j]
        if mode == "level":
            cols.append(col[1:] if trim else col)
        elif mode == "diff":
            cols.append(np.diff(col))
        elif mode == "logdiff":
            if np.any(col <= 0):
                raise ValueError(f"log difference needs positive values in column {j}")
            cols.append(np.diff(np.log(col)))
        else:
            raise ValueError(f"unknown stationarity mode {mode!r}")
    return np.column_stack(cols)
