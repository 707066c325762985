"""CSV ingestion and emission for prices, macro series and scenario outputs.

Price files have a ``date`` column (ISO ``YYYY-MM-DD``) followed by one
close-price column per instrument. Macro files have a ``date`` column
followed by one column per series. Every CSV written here carries a header
row, and floats are printed with 17 significant digits.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

RETURN_MODES = ("difference", "simple", "log")

# (label, start inclusive, end exclusive)
DEFAULT_PERIODS = (
    ("stressed", "2007-11-01", "2009-11-01"),
    ("normal", "2009-11-01", "2011-11-01"),
    ("backtest", "2011-11-01", "2015-11-01"),
)


class DataError(ValueError):
    """Input data that cannot be parsed or violates its schema."""


@dataclass
class PriceTable:
    dates: list[dt.date]
    names: list[str]
    prices: np.ndarray  # Time x Series

    def __post_init__(self) -> None:
        self.prices = np.asarray(self.prices, dtype=np.float64)
        if self.prices.ndim != 2 or self.prices.shape != (len(self.dates), len(self.names)):
            raise DataError(
                f"price matrix {self.prices.shape} does not match {len(self.dates)} dates "
                f"x {len(self.names)} instruments"
            )
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("dates must be strictly increasing")
        if not np.all(np.isfinite(self.prices)) or np.any(self.prices <= 0):
            raise DataError("prices must be finite and positive")


def format_float(v) -> str:
    return format(float(v), ".17g")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row of {len(row)} cells under a {len(header)}-column header")
            w.writerow([_cell(v) for v in row])


def write_matrix_csv(path: str | Path, header: Sequence[str], values) -> None:
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    write_csv(path, header, m.tolist())


def _parse_date(text: str, where: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"{where}: unparseable date {text!r}") from exc


def _read_dated_columns(path: str | Path) -> tuple[list[dt.date], list[str], np.ndarray]:
    p = Path(path)
    try:
        fh = open(p, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {p}: {exc.strerror}") from exc
    with fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{p}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0].lower() != "date":
        raise DataError(f"{p}: header must be 'date' followed by at least one value column")
    names = header[1:]
    dates, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{p}:{lineno}: expected {len(header)} fields, got {len(row)}")
        dates.append(_parse_date(row[0], f"{p}:{lineno}"))
        try:
            values.append([float(c) for c in row[1:]])
        except ValueError as exc:
            raise DataError(f"{p}:{lineno}: non-numeric value") from exc
    if not dates:
        raise DataError(f"{p}: no data rows")
    return dates, names, np.array(values, dtype=np.float64).reshape(len(dates), len(names))


def ingest_prices(path: str | Path) -> PriceTable:
    """Read a price CSV, sorting rows by date.

    Duplicate dates are rejected rather than silently merged.
    """
    dates, names, values = _read_dated_columns(path)
    order = sorted(range(len(dates)), key=dates.__getitem__)
    dates = [dates[i] for i in order]
    if any(b == a for a, b in zip(dates, dates[1:])):
        raise DataError(f"{path}: duplicate dates")
    return PriceTable(dates, names, values[order])


def align_tables(*tables: PriceTable) -> PriceTable:
    """Join instruments from several tables on the intersection of their dates."""
    if not tables:
        raise DataError("nothing to align")
    common = set(tables[0].dates)
    for t in tables[1:]:
        common &= set(t.dates)
    dates = sorted(common)
    if not dates:
        raise DataError("tables share no dates")
    cols, names = [], []
    for t in tables:
        pos = {d: i for i, d in enumerate(t.dates)}
        idx = [pos[d] for d in dates]
        cols.append(t.prices[idx])
        names.extend(t.names)
    return PriceTable(dates, names, np.hstack(cols))


def returns_from_prices(table: PriceTable, mode: str = "difference") -> np.ndarray:
    """One-step returns, one row fewer than the price table.

    ``difference`` is P_t - P_{t-1}, ``simple`` is P_t / P_{t-1} - 1 and
    ``log`` is log(P_t / P_{t-1}).
    """
    p = table.prices
    if p.shape[0] < 2:
        raise DataError("need at least two price rows for a return")
    if mode == "difference":
        return np.diff(p, axis=0)
    if mode == "simple":
        return p[1:] / p[:-1] - 1.0
    if mode == "log":
        return np.diff(np.log(p), axis=0)
    raise ValueError(f"unknown return mode {mode!r}; choose from {RETURN_MODES}")


def assign_periods(dates: Sequence[dt.date], periods=DEFAULT_PERIODS) -> list[str | None]:
    """Label each date with the first period whose [start, end) contains it."""
    bounds = [(name, dt.date.fromisoformat(str(a)), dt.date.fromisoformat(str(b))) for name, a, b in periods]
    for name, a, b in bounds:
        if b <= a:
            raise ValueError(f"period {name} ends before it starts")
    out: list[str | None] = []
    for d in dates:
        out.append(next((name for name, a, b in bounds if a <= d < b), None))
    return out


def read_macro_csv(path: str | Path) -> tuple[list[dt.date], list[str], np.ndarray]:
    dates, names, values = _read_dated_columns(path)
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise DataError(f"{path}: dates must be strictly increasing")
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: non-finite values")
    return dates, names, values


def write_dated_csv(path: str | Path, dates: Sequence[dt.date], names: Sequence[str], values) -> None:
    m = np.asarray(values, dtype=np.float64)
    write_csv(path, ["date", *names], [[d.isoformat(), *row] for d, row in zip(dates, m.tolist())])


def business_days(start: str, end: str) -> list[dt.date]:
    """Weekdays in [start, end); holidays are not modelled."""
    days = np.arange(np.datetime64(start), np.datetime64(end), dtype="datetime64[D]")
    days = days[np.is_busday(days)]
    return [d.item() for d in days]


def quarter_starts(start_year: int, start_quarter: int, n: int) -> list[dt.date]:
    out = []
    y, q = start_year, start_quarter
    for _ in range(n):
        out.append(dt.date(y, 3 * (q - 1) + 1, 1))
        q += 1
        if q > 4:
            y, q = y + 1, 1
    return out

