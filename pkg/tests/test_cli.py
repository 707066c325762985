import json

import numpy as np
import pytest

from cganlab import cli, scenarios
from cganlab.gan import generate_from_noise
from cganlab.nn import forward, load_mlp

TINY = "[train]\niterations = 20\ntrack_every = 10\n"


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.ini"
    p.write_text(TINY)
    return str(p)


def test_list_names_every_scenario(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in scenarios.REGISTRY:
        assert name in out
    assert len(scenarios.REGISTRY) == 14


def test_run_writes_outputs_and_manifest(tmp_path, tiny, capsys):
    out = tmp_path / "run"
    assert cli.main(["run", "gmm-circle", "--config", tiny, "--seed", "3", "--out", str(out)]) == 0
    assert "probe_variance_corr = " in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"] == "gmm-circle" and manifest["seed"] == 3 and manifest["preset"] == "desk"
    assert manifest["config"]["train"]["iterations"] == 20
    for name in manifest["outputs"]:
        assert (out / name).is_file()
    assert "trace_cgan.csv" in manifest["outputs"]
    trace = (out / "trace_cgan.csv").read_text().splitlines()
    assert trace[0].startswith("iteration,d_loss,g_loss")
    assert [ln.split(",")[0] for ln in trace[1:]] == ["10", "20"]
    assert (out / "qq_dim1.csv").read_text().startswith("probability,q_real,q_generated\n")
    metrics = json.loads((out / "metrics.json").read_text())
    assert set(metrics) >= {"probe_variance_corr", "qq_slope_dim1"}


def test_saved_generator_reproduces_samples(tmp_path, tiny):
    out = tmp_path / "run"
    result = scenarios.run_scenario("gmm-circle", config_path=tiny, out_dir=out)
    gan = result.models["cgan"]
    g = load_mlp(out / "model_cgan_generator.txt")
    d = load_mlp(out / "model_cgan_discriminator.txt")
    z = np.random.default_rng(0).standard_normal((5, gan.noise_dim))
    y = np.random.default_rng(1).normal(size=(5, gan.condition_dim))
    np.testing.assert_array_equal(forward(g, np.hstack((z, y)))[0], generate_from_noise(gan, z, y))
    assert all(np.all(np.abs(p) <= 0.01) for p in d.params())


def test_rerun_manifest_is_byte_identical(tmp_path, tiny):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "gmm-line-fast", "--config", tiny, "--out", str(a)]) == 0
    assert cli.main(["rerun", str(a / "manifest.json"), "--out", str(b)]) == 0
    names = json.loads((a / "manifest.json").read_text())["outputs"]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_seed_changes_outputs(tmp_path, tiny):
    a = scenarios.run_scenario("gmm-circle", config_path=tiny, seed=1)
    b = scenarios.run_scenario("gmm-circle", config_path=tiny, seed=2)
    assert a.metrics != b.metrics


def test_exit_code_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[train]\nwarp = 9\n")
    assert cli.main(["run", "gmm-circle", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "config error" in capsys.readouterr().err
    assert cli.main(["rerun", str(tmp_path / "missing.json")]) == 1


def test_exit_code_data_error(tmp_path, capsys):
    prices = tmp_path / "p.csv"
    prices.write_text("date,A,B\n2010-01-04,10,20\n2010-01-05,11,abc\n")
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[data]\nprices_path = {prices}\n")
    assert cli.main(["run", "equity-backtest", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "data error" in capsys.readouterr().err


def test_exit_code_data_error_short_history(tmp_path):
    prices = tmp_path / "p.csv"
    prices.write_text("date,A,B\n2010-01-04,10,20\n2010-01-05,11,21\n2010-01-06,12,20\n")
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[data]\nprices_path = {prices}\n")
    assert cli.main(["run", "equity-backtest", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_exit_code_numeric_failure(tmp_path, monkeypatch, capsys):
    def explode(ctx):
        raise FloatingPointError("loss is nan")

    sc = scenarios.REGISTRY["gmm-circle"]
    monkeypatch.setitem(scenarios.REGISTRY, "gmm-circle", scenarios.Scenario(sc.name, sc.summary, explode, sc.presets))
    assert cli.main(["run", "gmm-circle", "--out", str(tmp_path / "o")]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_exit_code_usage(tmp_path, capsys):
    assert cli.main(["run", "no-such-scenario"]) == 4
    assert cli.main(["frobnicate"]) == 4
    assert cli.main(["run", "gmm-circle", "--preset", "huge"]) == 4
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"scenario": "gone", "preset": "desk", "seed": 0, "config": {}}))
    assert cli.main(["rerun", str(manifest)]) == 4


def test_every_scenario_has_both_presets():
    for name, sc in scenarios.REGISTRY.items():
        assert set(sc.presets) == {"desk", "paper"}, name
        assert sc.presets["paper"]["train"]["iterations"] >= sc.presets["desk"]["train"]["iterations"]
