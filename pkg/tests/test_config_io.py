import datetime as dt

import numpy as np
import pytest

from cganlab import config as cfgmod
from cganlab.config import ConfigError
from cganlab.dataio import (
    DataError,
    PriceTable,
    align_tables,
    assign_periods,
    business_days,
    format_float,
    ingest_prices,
    quarter_starts,
    read_macro_csv,
    returns_from_prices,
    write_csv,
    write_dated_csv,
)

BASE = {
    "run": {"seed": 0},
    "train": {"iterations": 10, "lr": 1e-4, "g_lr": None},
    "model": {"variant": "cgan", "g_hidden": (100, 100), "transforms": ("diff", "level")},
    "data": {"flag": False},
}


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_override_coercion(tmp_path):
    p = write(
        tmp_path, "o.ini",
        "[train]\niterations = 25\nlr = 5e-4\ng_lr = 0.002\n[model]\ng_hidden = 50, 20\ntransforms = logdiff,diff\n"
        "[data]\nflag = yes\n",
    )
    cfg = cfgmod.load(BASE, p)
    assert cfg["train"] == {"iterations": 25, "lr": 5e-4, "g_lr": 0.002}
    assert cfg["model"]["g_hidden"] == (50, 20)
    assert cfg["model"]["transforms"] == ("logdiff", "diff")
    assert cfg["data"]["flag"] is True
    assert BASE["train"]["iterations"] == 10  # preset untouched


def test_none_default_accepts_none(tmp_path):
    cfg = cfgmod.load(BASE, write(tmp_path, "o.ini", "[train]\ng_lr = none\n"))
    assert cfg["train"]["g_lr"] is None


@pytest.mark.parametrize(
    "text",
    [
        "[train]\nunknown = 1\n",
        "[nosuch]\nx = 1\n",
        "[train]\niterations = many\n",
        "[data]\nflag = maybe\n",
        "[model]\ng_hidden = 10,x\n",
        "iterations = 5\n",
        "[train\n",
    ],
)
def test_bad_overrides_raise_config_error(tmp_path, text):
    with pytest.raises(ConfigError):
        cfgmod.load(BASE, write(tmp_path, "bad.ini", text))


def test_missing_config_file():
    with pytest.raises(ConfigError):
        cfgmod.load(BASE, "/nonexistent/cfg.ini")


def test_json_round_trip():
    cfg = cfgmod.merge(BASE, {"model": {"g_hidden": "7,8"}}, "test")
    js = cfgmod.to_jsonable(cfg)
    assert js["model"]["g_hidden"] == [7, 8]
    assert cfgmod.from_jsonable(js, BASE) == cfg
    with pytest.raises(ConfigError):
        cfgmod.from_jsonable({"train": {"iterations": "ten"}}, BASE)
    with pytest.raises(ConfigError):
        cfgmod.from_jsonable({"train": {"bogus": 1}}, BASE)
    assert cfgmod.from_jsonable({"train": {"lr": 1}}, BASE)["train"]["lr"] == 1.0


def test_write_csv_format(tmp_path):
    p = tmp_path / "x.csv"
    write_csv(p, ["a", "b", "c"], [[1, 0.1, "s"], [np.int64(2), np.float64(1 / 3), None]])
    assert p.read_bytes() == b"a,b,c\n1,0.10000000000000001,s\n2,0.33333333333333331,\n"
    with pytest.raises(ValueError):
        write_csv(p, ["a"], [[1, 2]])
    assert float(format_float(np.pi)) == np.pi


def test_ingest_prices_sorts_and_validates(tmp_path):
    p = write(tmp_path, "p.csv", "date,A,B\n2020-01-03,11,21\n2020-01-02,10,20\n")
    t = ingest_prices(p)
    assert t.dates == [dt.date(2020, 1, 2), dt.date(2020, 1, 3)]
    assert t.names == ["A", "B"]
    np.testing.assert_array_equal(returns_from_prices(t), [[1.0, 1.0]])
    np.testing.assert_allclose(returns_from_prices(t, "simple"), [[0.1, 0.05]])
    np.testing.assert_allclose(returns_from_prices(t, "log"), [[np.log(1.1), np.log(1.05)]])
    with pytest.raises(ValueError):
        returns_from_prices(t, "pct")


@pytest.mark.parametrize(
    "text",
    [
        "",
        "when,A\n2020-01-01,1\n",
        "date\n2020-01-01\n",
        "date,A\n",
        "date,A\n2020-13-01,1\n",
        "date,A\n2020-01-01,abc\n",
        "date,A\n2020-01-01,1,2\n",
        "date,A\n2020-01-01,1\n2020-01-01,2\n",
        "date,A\n2020-01-01,-1\n",
        "date,A\n2020-01-01,nan\n",
    ],
)
def test_bad_price_files(tmp_path, text):
    with pytest.raises(DataError):
        ingest_prices(write(tmp_path, "bad.csv", text))


def test_missing_price_file():
    with pytest.raises(DataError):
        ingest_prices("/nonexistent/prices.csv")


def test_price_table_invariants():
    with pytest.raises(DataError):
        PriceTable([dt.date(2020, 1, 2), dt.date(2020, 1, 1)], ["A"], [[1.0], [2.0]])
    with pytest.raises(DataError):
        PriceTable([dt.date(2020, 1, 1)], ["A", "B"], [[1.0]])


def test_align_tables_intersects_dates():
    d = [dt.date(2020, 1, k) for k in (1, 2, 3)]
    a = PriceTable(d, ["A"], [[1.0], [2.0], [3.0]])
    b = PriceTable(d[1:], ["B"], [[20.0], [30.0]])
    t = align_tables(a, b)
    assert t.dates == d[1:] and t.names == ["A", "B"]
    np.testing.assert_array_equal(t.prices, [[2.0, 20.0], [3.0, 30.0]])
    with pytest.raises(DataError):
        align_tables(a, PriceTable([dt.date(2021, 1, 1)], ["C"], [[1.0]]))


def test_assign_periods_half_open():
    dates = [dt.date(2007, 10, 31), dt.date(2007, 11, 1), dt.date(2009, 10, 30), dt.date(2009, 11, 1), dt.date(2015, 11, 1)]
    assert assign_periods(dates) == [None, "stressed", "stressed", "normal", None]
    with pytest.raises(ValueError):
        assign_periods(dates, [("x", "2010-01-01", "2009-01-01")])


def test_macro_csv(tmp_path):
    p = write(tmp_path, "m.csv", "date,gdp,unemp\n2000-01-01,100,5\n2000-04-01,101,5.1\n")
    dates, names, values = read_macro_csv(p)
    assert names == ["gdp", "unemp"] and values.shape == (2, 2)
    out = tmp_path / "copy.csv"
    write_dated_csv(out, dates, names, values)
    assert read_macro_csv(out)[2].tolist() == values.tolist()
    with pytest.raises(DataError):
        read_macro_csv(write(tmp_path, "b.csv", "date,gdp\n2000-04-01,1\n2000-01-01,2\n"))


def test_calendar_helpers():
    days = business_days("2021-01-01", "2021-01-11")
    assert [d.day for d in days] == [1, 4, 5, 6, 7, 8]
    assert quarter_starts(1999, 4, 3) == [dt.date(1999, 10, 1), dt.date(2000, 1, 1), dt.date(2000, 4, 1)]
