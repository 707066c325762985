"""Registry of the simulation and application experiments.

Each scenario takes a :class:`RunContext` (effective config, seed, output
directory) and returns a :class:`ScenarioResult`. Outputs are plain CSV
files plus ``metrics.json`` and ``manifest.json``; the manifest alone is
enough to rerun a result.

Randomness is split into named substreams, ``default_rng([seed,
crc32(tag)])``, so adding a new draw in one part of a scenario does not
shift the numbers anywhere else.
"""

from __future__ import annotations

import copy
import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np
from scipy.special import ndtr, ndtri

from . import config as cfgmod
from . import dataio, prep, risk, stats, synth
from .gan import GanSpec, TrainConfig, TrainingTrace, build_gan, generate, generate_from_noise, train
from .nn import extract_spline_knots, save_mlp

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
METRICS = "metrics.json"


@dataclass
class ScenarioResult:
    metrics: dict[str, float]
    models: dict[str, GanSpec] = field(default_factory=dict)
    extras: dict[str, Any] = field(default_factory=dict)


class RunContext:
    def __init__(self, scenario: str, preset: str, seed: int, cfg: dict, out_dir: str | Path | None):
        self.scenario = scenario
        self.preset = preset
        self.seed = int(seed)
        self.cfg = cfg
        self.out_dir = None if out_dir is None else Path(out_dir)
        self.outputs: list[str] = []
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def section(self, name: str) -> dict:
        return self.cfg.get(name, {})

    def rng(self, tag: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(tag.encode())])

    def child_seed(self, tag: str) -> int:
        return int(self.rng(tag).integers(0, 2**62))

    # -- outputs --

    def path(self, name: str) -> Path | None:
        if self.out_dir is None:
            return None
        if name not in self.outputs:
            self.outputs.append(name)
        return self.out_dir / name

    def write_csv(self, name: str, header, rows) -> None:
        path = self.path(name)
        if path is not None:
            dataio.write_csv(path, header, rows)

    def write_trace(self, name: str, trace: TrainingTrace) -> None:
        path = self.path(name)
        if path is not None:
            trace.to_csv(path)

    def write_qq(self, name: str, real, generated, n_q: int = 100) -> stats.QqResult:
        qq = stats.qq_compare(real, generated, n_q)
        self.write_csv(name, ["probability", "q_real", "q_generated"], zip(qq.probs, qq.q_a, qq.q_b))
        return qq

    def write_model(self, name: str, gan: GanSpec) -> None:
        for part, net in (("generator", gan.generator), ("discriminator", gan.discriminator)):
            path = self.path(f"{name}_{part}.txt")
            if path is not None:
                save_mlp(net, path)

    # -- model building --

    def train_config(self, tag: str, **over) -> TrainConfig:
        t = dict(self.section("train"))
        t.update(over)
        return TrainConfig(
            iterations=t["iterations"],
            n_dis=t["n_dis"],
            clip_c=t["clip_c"],
            batch_size=t["batch_size"],
            lr=t["lr"],
            beta1=t["beta1"],
            beta2=t["beta2"],
            g_lr=t["g_lr"],
            track_every=t["track_every"],
            seed=self.child_seed("train:" + tag),
        )

    def build(self, tag: str, data_dim: int, condition_dim: int, **over) -> GanSpec:
        m = dict(self.section("model"))
        m.update(over)
        return build_gan(
            m["variant"],
            data_dim,
            noise_dim=m["noise_dim"],
            condition_dim=condition_dim,
            g_hidden=m["g_hidden"],
            d_hidden=m["d_hidden"],
            hidden_activation=m["hidden_activation"],
            d_hidden_activation=m.get("d_hidden_activation") or None,
            alpha=m["alpha"],
            noise_dist=m["noise_dist"],
            seed=self.child_seed("init:" + tag),
        )

    def fit(self, tag: str, data, conditions=None, tracker=None, model_over=None, train_over=None):
        """Build, train, and save trace + snapshot under ``tag``."""
        data = np.asarray(data, dtype=np.float64)
        cdim = 0 if conditions is None else np.asarray(conditions).shape[1]
        gan = self.build(tag, data.shape[1], cdim, **(model_over or {}))
        cfg = self.train_config(tag, **(train_over or {}))
        logger.info("%s: training %s for %d iterations", self.scenario, tag, cfg.iterations)
        gan, trace = train(gan, cfg, data, conditions, tracker)
        self.write_trace(f"trace_{tag}.csv", trace)
        self.write_model(f"model_{tag}", gan)
        return gan, trace


# -- shared helpers -----------------------------------------------------------


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise dataio.DataError(msg)


def _moment_row(x: np.ndarray) -> tuple[float, float, float, float]:
    m = stats.moments(x)
    return m.mean, m.variance, m.skewness, m.excess_kurtosis


SCATTER_HEADER = [
    "condition", "series",
    "true_mean", "gen_mean", "true_var", "gen_var",
    "true_skew", "gen_skew", "true_kurt", "gen_kurt",
    "qq_slope", "qq_r2",
]


def _conditional_scatter(gan, oracle, conditions_raw, conditions_scaled, draws, to_original, gen_rng, true_rng):
    """Compare generated and exact conditional distributions at each condition.

    Returns one row per (condition, series) in ``SCATTER_HEADER`` order.
    """
    rows = []
    for k in range(conditions_raw.shape[0]):
        gen = to_original(generate(gan, draws, conditions_scaled[k], gen_rng))
        true = oracle(conditions_raw[k], draws, true_rng)
        for s in range(gen.shape[1]):
            t_m = _moment_row(true[:, s])
            g_m = _moment_row(gen[:, s])
            qq = stats.qq_compare(true[:, s], gen[:, s])
            rows.append([k, s, t_m[0], g_m[0], t_m[1], g_m[1], t_m[2], g_m[2], t_m[3], g_m[3], qq.slope, qq.r_squared])
    return rows


def _scatter_summary(rows, prefix: str = "") -> dict[str, float]:
    arr = np.array([r[1:] for r in rows], dtype=np.float64)
    out: dict[str, float] = {}
    for s in np.unique(arr[:, 0]).astype(int):
        sub = arr[arr[:, 0] == s]
        tag = f"{prefix}s{s + 1}"
        for name, ti, gi in (("mean", 1, 2), ("var", 3, 4)):
            slope, _, r2 = stats.linear_fit(sub[:, ti], sub[:, gi])
            out[f"{tag}_{name}_slope"] = slope
            out[f"{tag}_{name}_r2"] = r2
        out[f"{tag}_kurt_positive_frac"] = float(np.mean(sub[:, 8] > 0))
        out[f"{tag}_gen_kurt_median"] = float(np.median(sub[:, 8]))
        out[f"{tag}_true_kurt_median"] = float(np.median(sub[:, 7]))
        out[f"{tag}_qq_slope_median"] = float(np.median(sub[:, 9]))
        out[f"{tag}_qq_r2_median"] = float(np.median(sub[:, 10]))
    return out


def _onehot_condition(k: int, n_classes: int) -> np.ndarray:
    return prep.dummy_encode([k], n_classes)[0]


# -- inverse CDF -------------------------------------------------------------

INVERSE_CDF_VARIANTS = {
    # name: (generator hidden widths, noise inputs)
    "1x7": ((7,), 1),
    "1x100": ((100,), 1),
    "2x100": ((100, 100), 1),
    "1x100-3in": ((100,), 3),
}


def run_inverse_cdf(ctx: RunContext) -> ScenarioResult:
    """Learn U(0,1) -> N(0,1) with small ReLU generators and measure the fit."""
    d, e = ctx.section("data"), ctx.section("eval")
    unknown = [v for v in d["variants"] if v not in INVERSE_CDF_VARIANTS]
    if unknown:
        raise cfgmod.ConfigError(f"unknown inverse-cdf variants {unknown}; choose from {list(INVERSE_CDF_VARIANTS)}")
    data = ctx.rng("data").standard_normal((d["n_samples"], 1))
    metrics: dict[str, float] = {}
    models = {}
    grid_p = (np.arange(e["grid_points"]) + 0.5) / e["grid_points"]
    for name in d["variants"]:
        hidden, noise_dim = INVERSE_CDF_VARIANTS[name]
        gan, _ = ctx.fit(name, data, model_over={"g_hidden": hidden, "noise_dim": noise_dim})
        models[name] = gan
        x = generate(gan, e["n_generate"], rng=ctx.rng("generate:" + name))[:, 0]
        ks = stats.ks_statistic(x, ndtr)
        metrics[f"ks_{name}"] = ks
        metrics[f"mean_{name}"] = float(x.mean())
        metrics[f"sd_{name}"] = float(x.std())
        xs = np.sort(x)
        q = stats.empirical_quantiles(xs, grid_p)
        ctx.write_csv(
            f"ecdf_{name}.csv",
            ["probability", "generated_quantile", "normal_quantile", "normal_cdf_at_generated"],
            zip(grid_p, q, ndtri(grid_p), ndtr(q)),
        )
        ctx.write_csv(f"samples_{name}.csv", ["x"], ([v] for v in x))
        if noise_dim == 1:
            u = grid_p[:, None]
            g = generate_curve(gan, u)
            ctx.write_csv(f"spline_{name}.csv", ["u", "generated", "inverse_cdf"], zip(grid_p, g, ndtri(grid_p)))
            if len(hidden) == 1:
                knots = extract_spline_knots(gan.generator)
                metrics[f"knots_{name}"] = int(knots.size)
                metrics[f"knots_in_unit_interval_{name}"] = int(np.sum((knots > 0) & (knots < 1)))
                ctx.write_csv(f"knots_{name}.csv", ["knot"], ([k] for k in knots))
    return ScenarioResult(metrics, models)


def generate_curve(gan: GanSpec, noise: np.ndarray) -> np.ndarray:
    return generate_from_noise(gan, noise)[:, 0]


# -- Gaussian mixtures ----------------------------------------------------------


def _mixture(ctx: RunContext):
    d = ctx.section("data")
    spec = synth.default_mixture(d["cluster_size"])
    x, labels = synth.gaussian_mixture_clusters(spec, ctx.rng("data"))
    return spec, x, labels


def run_gmm_categorical(ctx: RunContext) -> ScenarioResult:
    """Four labelled clusters with one-hot conditions, benchmarked against a Gaussian KDE."""
    e = ctx.section("eval")
    spec, x, labels = _mixture(ctx)
    k = len(spec.clusters)
    xs, sp = prep.standardize(x)
    y = prep.dummy_encode(labels, k)
    gan, _ = ctx.fit("cgan", xs, y)
    dim = e["qq_dim"]
    metrics: dict[str, float] = {}
    gen_rng = ctx.rng("generate")
    rows = []
    for c in range(k):
        real = x[labels == c]
        gen = prep.inverse_standardize(generate(gan, e["n_generate"], _onehot_condition(c, k), gen_rng), sp)
        rows.extend([c, *g] for g in gen.tolist())
        qq = ctx.write_qq(f"qq_cgan_cluster{c}.csv", real[:, dim], gen[:, dim], e["qq_points"])
        metrics[f"cgan_qq_slope_cluster{c}"] = qq.slope
        metrics[f"cgan_qq_r2_cluster{c}"] = qq.r_squared
    ctx.write_csv("generated.csv", ["cluster", "x1", "x2"], rows)
    kc = e["kde_cluster"]
    real = x[labels == kc]
    bw = stats.kde_fit_cv(real, folds=e["kde_folds"])
    kde = stats.kde_sample(real, bw, e["n_generate"], ctx.rng("kde"))
    qq = ctx.write_qq(f"qq_kde_cluster{kc}.csv", real[:, dim], kde[:, dim], e["qq_points"])
    metrics["kde_bandwidth"] = bw
    metrics[f"kde_qq_slope_cluster{kc}"] = qq.slope
    metrics[f"kde_qq_r2_cluster{kc}"] = qq.r_squared
    return ScenarioResult(metrics, {"cgan": gan}, {"kde_bandwidth": bw})


def run_gmm_integer(ctx: RunContext) -> ScenarioResult:
    """Integer cluster labels as a scalar condition; decimal labels interpolate between clusters."""
    d, e = ctx.section("data"), ctx.section("eval")
    spec, x, labels = _mixture(ctx)
    xs, sp = prep.standardize(x)
    scale = d["condition_scale"]
    y = labels[:, None].astype(np.float64) * scale
    gan, _ = ctx.fit("cgan", xs, y)
    gen_rng = ctx.rng("generate")
    metrics: dict[str, float] = {}
    rows, summary = [], []
    errors = []
    for c in e["conditions"]:
        gen = prep.inverse_standardize(generate(gan, e["n_generate"], [c * scale], gen_rng), sp)
        rows.extend([c, *g] for g in gen.tolist())
        gm, gv = gen.mean(axis=0), gen.var(axis=0)
        true_mean = [np.nan, np.nan]
        if float(c).is_integer() and 0 <= int(c) < len(spec.clusters):
            cl = spec.clusters[int(c)]
            true_mean = list(cl.mean)
            errors.append(float(np.max(np.abs(gm - cl.mean))))
        summary.append([c, gm[0], gm[1], gv[0], gv[1], true_mean[0], true_mean[1]])
        metrics[f"gen_mean_x1_at_{c:g}"] = float(gm[0])
        metrics[f"gen_mean_x2_at_{c:g}"] = float(gm[1])
    ctx.write_csv("generated.csv", ["condition", "x1", "x2"], rows)
    ctx.write_csv(
        "condition_summary.csv",
        ["condition", "gen_mean_x1", "gen_mean_x2", "gen_var_x1", "gen_var_x2", "true_mean_x1", "true_mean_x2"],
        summary,
    )
    if errors:
        metrics["max_mean_error_integer_conditions"] = max(errors)
    return ScenarioResult(metrics, {"cgan": gan})


def run_gmm_circle(ctx: RunContext) -> ScenarioResult:
    """Continuous conditions: ring of means with variance growing anticlockwise."""
    d, e = ctx.section("data"), ctx.section("eval")
    x, means = synth.circle_variance_dataset(d["n_points"], d["radius"], d["var_lo"], d["var_hi"], ctx.rng("data"))
    gan, _ = ctx.fit("cgan", x, means)
    gen = generate(gan, x.shape[0], means, ctx.rng("generate"))
    ctx.write_csv("generated.csv", ["cond_x1", "cond_x2", "x1", "x2"], np.hstack((means, gen)).tolist())
    metrics: dict[str, float] = {}
    for dim in (0, 1):
        qq = ctx.write_qq(f"qq_dim{dim + 1}.csv", x[:, dim], gen[:, dim], e["qq_points"])
        metrics[f"qq_slope_dim{dim + 1}"] = qq.slope
        metrics[f"qq_r2_dim{dim + 1}"] = qq.r_squared
    n = x.shape[0]
    idx = np.round(np.linspace(0, n - 1, e["n_probes"])).astype(int)
    probe_rng = ctx.rng("probe")
    true_var = d["var_lo"] + (d["var_hi"] - d["var_lo"]) * idx / (n - 1)
    rows, gen_var = [], []
    for i, tv in zip(idx, true_var):
        g = generate(gan, e["probe_draws"], means[i], probe_rng)
        gv = float(np.mean(g.var(axis=0)))
        gen_var.append(gv)
        rows.append([i, means[i, 0], means[i, 1], tv, gv, *g.mean(axis=0)])
    ctx.write_csv("probes.csv", ["index", "cond_x1", "cond_x2", "true_var", "gen_var", "gen_mean_x1", "gen_mean_x2"], rows)
    metrics["probe_variance_corr"] = float(np.corrcoef(true_var, gen_var)[0, 1])
    return ScenarioResult(metrics, {"cgan": gan})


def _run_gmm_line(ctx: RunContext) -> ScenarioResult:
    """Train on the central part of a line whose variance grows with |x|; extrapolate to the ends."""
    d, e = ctx.section("data"), ctx.section("eval")
    x, means = synth.line_variance_dataset(
        d["n_points"], (d["x_min"], d["x_max"]), d["var_slope"], ctx.rng("data"), base_var=d["base_var"]
    )
    keep = synth.central_slice(x.shape[0], d["clip_fraction"])
    gan, _ = ctx.fit("cgan", x[keep], means[keep])
    gen = generate(gan, x.shape[0], means, ctx.rng("generate"))
    inside = np.zeros(x.shape[0], dtype=bool)
    inside[keep] = True
    ctx.write_csv(
        "generated.csv",
        ["cond_x1", "cond_x2", "x1", "x2", "in_training_support"],
        [[*m, *g, int(s)] for m, g, s in zip(means.tolist(), gen.tolist(), inside)],
    )
    metrics: dict[str, float] = {}
    for dim in (0, 1):
        qq = ctx.write_qq(f"qq_dim{dim + 1}.csv", x[:, dim], gen[:, dim], e["qq_points"])
        metrics[f"qq_slope_dim{dim + 1}"] = qq.slope
        metrics[f"qq_r2_dim{dim + 1}"] = qq.r_squared
    true_var = d["base_var"] + d["var_slope"] * np.abs(means[:, 0])
    resid = gen - means
    for name, mask in (("inner", inside), ("outer", ~inside)):
        # mean squared spread around the condition vs the true average variance
        metrics[f"var_ratio_{name}"] = float(np.mean(resid[mask] ** 2) / np.mean(true_var[mask]))
    return ScenarioResult(metrics, {"cgan": gan})


# -- VAR(1) studies ---------------------------------------------------------------


def _autocorr_tracker(path_scaled: np.ndarray, sp: prep.ScaleParams, rng_factory):
    """Chain the generator through a real path: B_t ~ G(z, A_t)."""

    def track(gan, it):
        b = prep.inverse_standardize(generate(gan, path_scaled.shape[0], path_scaled, rng_factory()), sp)
        out = {}
        for s in range(b.shape[1]):
            out[f"a1_s{s + 1}"] = stats.lag_autocorrelation(b[:, s], 1)
            out[f"a2_s{s + 1}"] = stats.lag_autocorrelation(b[:, s], 2)
        return out

    return track


def _var_moment_study(ctx: RunContext, tag: str, spec: synth.VarSpec, n_samples: int, iterations: int):
    """Train on one-step pairs of ``spec`` and compare conditional moments with the oracle."""
    e = ctx.section("eval")
    series = synth.simulate_var1(spec, n_samples + 1, ctx.rng(f"data:{tag}"))
    scaled, sp = prep.standardize(series)
    target, cond = prep.lag_conditions(scaled, 1)
    gan, _ = ctx.fit(tag, target, cond, train_over={"iterations": iterations})
    _, cond_raw = prep.lag_conditions(series, 1)
    pick = np.sort(ctx.rng(f"conditions:{tag}").choice(cond_raw.shape[0], e["n_conditions"], replace=False))
    rows = _conditional_scatter(
        gan,
        lambda c, n, r: synth.true_conditional_distribution(spec, c, n, r),
        cond_raw[pick],
        cond[pick],
        e["draws"],
        lambda g: prep.inverse_standardize(g, sp),
        ctx.rng(f"generate:{tag}"),
        ctx.rng(f"oracle:{tag}"),
    )
    ctx.write_csv(f"moment_scatter_{tag}.csv", SCATTER_HEADER, rows)
    return gan, rows


def run_var1_continuous(ctx: RunContext) -> ScenarioResult:
    """One-step CGAN on VAR(1) data: a^3/a^4 chaining check, then a conditional moment scatter."""
    d = ctx.section("data")
    spec = synth.var_constant_spec()
    series = synth.simulate_var1(spec, d["n_samples"] + 1, ctx.rng("data:ar"))
    scaled, sp = prep.standardize(series)
    target, cond = prep.lag_conditions(scaled, 1)
    tracker = _autocorr_tracker(scaled, sp, lambda: ctx.rng("track:ar"))
    gan_ar, trace = ctx.fit("ar", target, cond, tracker)
    metrics: dict[str, float] = {}
    last = trace.records[-1]
    for s, a in enumerate(spec.a):
        metrics[f"a1_s{s + 1}"] = last[f"a1_s{s + 1}"]
        metrics[f"a2_s{s + 1}"] = last[f"a2_s{s + 1}"]
        metrics[f"target_a3_s{s + 1}"] = float(a**3)
        metrics[f"target_a4_s{s + 1}"] = float(a**4)
    models = {"ar": gan_ar}
    if d["moment_samples"] > 0:
        gan_m, rows = _var_moment_study(
            ctx, "moments", synth.var_sum_abs_spec(), d["moment_samples"], d["moment_iterations"]
        )
        metrics.update(_scatter_summary(rows))
        models["moments"] = gan_m
    return ScenarioResult(metrics, models)


def run_var1_large(ctx: RunContext) -> ScenarioResult:
    """The conditional moment scatter rerun on a much larger training sample."""
    d = ctx.section("data")
    gan, rows = _var_moment_study(
        ctx, "moments", synth.var_sum_abs_spec(), d["n_samples"], ctx.section("train")["iterations"]
    )
    return ScenarioResult(_scatter_summary(rows), {"moments": gan}, {"scatter": rows})


def _region_data(ctx: RunContext):
    d = ctx.section("data")
    spec = synth.region_spec(d["region_size"])
    series, labels = synth.simulate_region_switching(spec, ctx.rng("data"))
    return spec, series, labels


def run_region_continuous(ctx: RunContext) -> ScenarioResult:
    """Lag-1 conditions on region-switching data; moments compared per region."""
    e = ctx.section("eval")
    spec, series, labels = _region_data(ctx)
    scaled, sp = prep.standardize(series)
    tg, cd, lab = [], [], []
    for k in range(len(spec.regions)):
        rows = np.flatnonzero(labels == k)
        t, c = prep.lag_conditions(scaled[rows], 1)
        tg.append(t)
        cd.append(c)
        lab.append(np.full(t.shape[0], k))
    target, cond, pair_label = np.vstack(tg), np.vstack(cd), np.concatenate(lab)
    gan, _ = ctx.fit("cgan", target, cond)
    cond_raw = prep.inverse_standardize(cond, sp)
    metrics: dict[str, float] = {}
    all_rows = []
    for k, (var, _) in enumerate(spec.regions):
        idx = np.flatnonzero(pair_label == k)
        pick = np.sort(ctx.rng(f"conditions:r{k}").choice(idx, e["n_conditions"], replace=False))
        rows = _conditional_scatter(
            gan,
            lambda c, n, r, var=var: synth.true_conditional_distribution(var, c, n, r),
            cond_raw[pick],
            cond[pick],
            e["draws"],
            lambda g: prep.inverse_standardize(g, sp),
            ctx.rng(f"generate:r{k}"),
            ctx.rng(f"oracle:r{k}"),
        )
        metrics.update(_scatter_summary(rows, prefix=f"r{k + 1}_"))
        all_rows.extend([k + 1, *r] for r in rows)
    ctx.write_csv("moment_scatter.csv", ["region", *SCATTER_HEADER], all_rows)
    return ScenarioResult(metrics, {"cgan": gan})


def _panel_tracker(n_classes: int, window: int, n_series: int, sp: prep.ScaleParams, n_draws: int, rng_factory):
    def track(gan, it):
        rng = rng_factory()
        out = {}
        for k in range(n_classes):
            g = generate(gan, n_draws, _onehot_condition(k, n_classes), rng)
            panel = prep.inverse_standardize(prep.unflatten_panel(g, window, n_series).reshape(-1, n_series), sp)
            ds = stats.panel_dependency_stats(panel.reshape(-1, window, n_series))
            out.update(ds.as_dict(prefix=f"c{k + 1}_"))
        return out

    return track


def _window_by_label(scaled: np.ndarray, labels: np.ndarray, n_classes: int, window: int):
    panels, codes = [], []
    for k in range(n_classes):
        seg = scaled[labels == k]
        _require(seg.shape[0] >= window, f"class {k} has fewer rows than the window")
        p = prep.sliding_window(seg, window).values
        panels.append(p)
        codes.append(np.full(p.shape[0], k))
    return np.concatenate(panels), np.concatenate(codes)


def run_region_categorical(ctx: RunContext) -> ScenarioResult:
    """Window-2 panels per region with the region as a one-hot condition."""
    d, e = ctx.section("data"), ctx.section("eval")
    spec, series, labels = _region_data(ctx)
    n_regions = len(spec.regions)
    window = d["window"]
    scaled, sp = prep.standardize(series)
    panels, codes = _window_by_label(scaled, labels, n_regions, window)
    flat = prep.flatten_panel(panels)
    y = prep.dummy_encode(codes, n_regions)
    tracker = _panel_tracker(n_regions, window, 2, sp, e["track_draws"], lambda: ctx.rng("track"))
    gan, trace = ctx.fit("cgan", flat, y, tracker)
    metrics: dict[str, float] = {}
    truth = []
    for k in range(n_regions):
        raw = prep.inverse_standardize(panels[codes == k].reshape(-1, 2), sp).reshape(-1, window, 2)
        ds = stats.panel_dependency_stats(raw)
        truth.append([k + 1, *ds.as_dict().values()])
        for name, v in ds.as_dict().items():
            metrics[f"r{k + 1}_train_{name}"] = v
            metrics[f"r{k + 1}_gen_{name}"] = trace.records[-1][f"c{k + 1}_{name}"]
        metrics[f"r{k + 1}_target_cor_t"] = float(spec.regions[k][0].a[0])
        gen = generate(gan, e["n_generate"], _onehot_condition(k, n_regions), ctx.rng(f"generate:r{k}"))
        gen = prep.inverse_standardize(prep.unflatten_panel(gen, window, 2).reshape(-1, 2), sp).reshape(-1, window, 2)
        qq = ctx.write_qq(f"qq_region{k + 1}.csv", raw[:, -1, 0], gen[:, -1, 0])
        metrics[f"r{k + 1}_qq_slope"] = qq.slope
    ctx.write_csv("train_stats.csv", ["region", *stats.STAT_NAMES], truth)
    return ScenarioResult(metrics, {"cgan": gan})


# -- GARCH --------------------------------------------------------------------------


def _run_garch(ctx: RunContext, lagged: bool) -> ScenarioResult:
    """Condition on the current variance (or the previous one) and compare conditional variances."""
    d, e = ctx.section("data"), ctx.section("eval")
    spec = synth.garch_spec()
    x, s2 = synth.simulate_garch(spec, d["n_samples"] + 1, ctx.rng("data"), burn_in=d["burn_in"])
    target = x[1:]
    cond_raw = s2[:-1] if lagged else s2[1:]
    true_s2 = s2[1:]
    xs, sp_x = prep.standardize(target)
    cs, sp_c = prep.standardize(cond_raw)
    gan, _ = ctx.fit("cgan", xs, cs)
    # both variants evaluate at the same time indices
    pick = np.sort(ctx.rng("conditions").choice(target.shape[0], e["n_conditions"], replace=False))
    rows = _conditional_scatter(
        gan,
        lambda c, n, r: synth.true_conditional_distribution(spec, c, n, r),
        true_s2[pick],
        cs[pick],
        e["draws"],
        lambda g: prep.inverse_standardize(g, sp_x),
        ctx.rng("generate"),
        ctx.rng("oracle"),
    )
    ctx.write_csv("moment_scatter.csv", SCATTER_HEADER, rows)
    metrics = _scatter_summary(rows)
    arr = np.array([r[1:] for r in rows], dtype=np.float64)
    corrs = []
    for s in range(spec.dim):
        sub = arr[arr[:, 0] == s]
        c = float(np.corrcoef(sub[:, 3], sub[:, 4])[0, 1])
        metrics[f"s{s + 1}_var_corr"] = c
        corrs.append(c)
    metrics["var_corr"] = float(np.mean(corrs))
    dep = stats.dependency_stats(x)
    metrics["train_cor_t"] = dep.cor_t
    metrics["train_vol_t"] = dep.vol_t
    return ScenarioResult(metrics, {"cgan": gan})


# -- equity backtest -------------------------------------------------------------


def _equity_prices(ctx: RunContext) -> dataio.PriceTable:
    d = ctx.section("data")
    if d["prices_path"]:
        return dataio.ingest_prices(d["prices_path"])
    dates = dataio.business_days(d["synthetic_start"], d["synthetic_end"])
    boundary = next(i for i, day in enumerate(dates) if day.isoformat() >= d["normal_start"])
    prices = synth.synthetic_prices(dates, boundary, ctx.rng("data"))
    return dataio.PriceTable(dates, ["WFC", "JPM"], prices)


def run_equity_backtest(ctx: RunContext) -> ScenarioResult:
    """HS vs generator VaR/ES per period, then a breach backtest on the later window."""
    d, e = ctx.section("data"), ctx.section("eval")
    table = _equity_prices(ctx)
    _require(len(table.names) >= 2, "equity backtest needs at least two instruments")
    rets = dataio.returns_from_prices(table, d["return_mode"])
    periods = (
        ("stressed", d["stressed_start"], d["normal_start"]),
        ("normal", d["normal_start"], d["backtest_start"]),
        ("backtest", d["backtest_start"], d["backtest_end"]),
    )
    label = np.array(dataio.assign_periods(table.dates[1:], periods), dtype=object)
    blocks = {name: rets[label == name] for name, _, _ in periods}
    for name, block in blocks.items():
        _require(block.shape[0] >= max(e["min_days"], d["window"]), f"period {name} has only {block.shape[0]} return days")
    portfolio = risk.Portfolio(np.ones(len(table.names)))
    level = e["level"]
    n_series = len(table.names)
    window = d["window"]

    train_rows = np.vstack((blocks["stressed"], blocks["normal"]))
    train_lab = np.concatenate((np.zeros(len(blocks["stressed"]), int), np.ones(len(blocks["normal"]), int)))
    scaled, sp = prep.standardize(train_rows)
    panels, codes = _window_by_label(scaled, train_lab, 2, window)
    flat = prep.flatten_panel(panels)
    y = prep.dummy_encode(codes, 2)
    tracker = _panel_tracker(2, window, n_series, sp, e["track_draws"], lambda: ctx.rng("track"))
    gan, _ = ctx.fit("cgan", flat, y, tracker)

    def to_returns(g):
        return prep.inverse_standardize(prep.unflatten_panel(g, window, n_series)[:, -1, :], sp)

    metrics: dict[str, float] = {}
    reports = {}
    table_rows = []
    for k, name in enumerate(("stressed", "normal")):
        pnl = risk.pnl_from_returns(blocks[name], portfolio)
        hs = risk.hs_var_es(pnl, level)
        cg = risk.cgan_var_es(
            gan, _onehot_condition(k, 2), e["scale"], level, ctx.rng(f"var:{name}"),
            n_original=pnl.size, portfolio=portfolio, to_returns=to_returns,
        )
        reports[("hs", name)] = hs
        reports[("cgan", name)] = cg
        table_rows.append({"method": "HS", "period": name, "var": hs.var, "es": hs.es})
        table_rows.append({"method": "CGAN", "period": name, "var": cg.var, "es": cg.es})
        for m, r in (("hs", hs), ("cgan", cg)):
            metrics[f"{m}_var_{name}"] = r.var
            metrics[f"{m}_es_{name}"] = r.es
        gen_pnl = risk.pnl_from_returns(
            to_returns(generate(gan, pnl.size * e["scale"], _onehot_condition(k, 2), ctx.rng(f"qq:{name}"))), portfolio
        )
        qq = ctx.write_qq(f"qq_pnl_{name}.csv", pnl, gen_pnl)
        metrics[f"qq_slope_{name}"] = qq.slope
    realized = risk.pnl_from_returns(blocks["backtest"], portfolio)
    for method in ("hs", "cgan"):
        bt = risk.backtest(reports[(method, "normal")], realized)
        table_rows.append({
            "method": method.upper(), "period": "backtest", "var": reports[(method, "normal")].var,
            "es": bt.model_es, "breaches": bt.breaches, "expected": bt.expected_breaches,
        })
        metrics[f"{method}_breaches"] = bt.breaches
        metrics["expected_breaches"] = bt.expected_breaches
        metrics["realized_es"] = bt.realized_es
    table_rows.append({"method": "realized", "period": "backtest", "es": metrics["realized_es"]})
    metrics["backtest_days"] = int(realized.size)
    path = ctx.path("risk_table.csv")
    if path is not None:
        risk.write_risk_table(table_rows, path)
    ctx.write_csv(
        "pnl_history.csv",
        ["date", "period", "pnl"],
        [[dd.isoformat(), lb, p] for dd, lb, p in zip(table.dates[1:], label, rets @ portfolio.positions) if lb],
    )
    return ScenarioResult(metrics, {"cgan": gan}, {"reports": reports})


# -- macro forecasting ---------------------------------------------------------------


def _macro_levels(ctx: RunContext):
    d = ctx.section("data")
    if d["macro_path"]:
        dates, names, values = dataio.read_macro_csv(d["macro_path"])
        _require(len(names) == len(d["transforms"]), f"{len(names)} macro series but {len(d['transforms'])} transforms")
        return names, values
    return list(synth.MACRO_SERIES), synth.synthetic_macro(d["n_quarters"], ctx.rng("data"))


def run_macro_forecast(ctx: RunContext) -> ScenarioResult:
    """Multi-quarter conditional forecasts, a fan of paths, and a one-variable shock."""
    d, e = ctx.section("data"), ctx.section("eval")
    names, levels = _macro_levels(ctx)
    try:
        stationary = prep.make_stationary(levels, d["transforms"])
    except ValueError as exc:
        raise dataio.DataError(str(exc)) from exc
    scaled, sp = prep.standardize(stationary)
    window, cw = d["window"], d["cond_window"]
    _require(scaled.shape[0] >= window, f"only {scaled.shape[0]} quarters for a {window}-quarter window")
    panel = prep.sliding_window(scaled, window, names)
    cond_p, tgt_p = prep.split_condition_target(panel, cw)
    horizon, n_series = tgt_p.window, len(names)
    cond, target = cond_p.flatten(), tgt_p.flatten()
    for key in ("shock_variable", "response_variable", "fan_variable"):
        if e[key] not in names:
            raise cfgmod.ConfigError(f"{key} {e[key]!r} is not one of {names}")
    fan_i = names.index(e["fan_variable"])

    def track(gan, it):
        g = generate(gan, cond.shape[0], cond, ctx.rng("track"))
        paths = prep.unflatten_panel(g, horizon, n_series)
        v = paths[:, :, fan_i]
        cur, prev = v[:, 1:].ravel(), v[:, :-1].ravel()
        return {"mean": float(v.mean()), "sd": float(v.std()), "autocorr": float(np.corrcoef(cur, prev)[0, 1])}

    gan, _ = ctx.fit("cgan", target, cond, track)
    metrics: dict[str, float] = {}
    v = tgt_p.values[:, :, fan_i]
    metrics["train_mean"] = float(v.mean())
    metrics["train_sd"] = float(v.std())
    metrics["train_autocorr"] = float(np.corrcoef(v[:, 1:].ravel(), v[:, :-1].ravel())[0, 1])

    latest = scaled[-cw:]
    paths = risk.forecast_paths(gan, latest, e["n_paths"], ctx.rng("fan"), horizon=horizon, n_series=n_series)
    bands = risk.fan_quantiles(paths[:, :, fan_i], e["fan_probs"])
    ctx.write_csv(
        "fan.csv",
        ["quarter", "mean", *[f"q{p:g}" for p in e["fan_probs"]]],
        [[q + 1, float(paths[:, q, fan_i].mean()), *bands[:, q]] for q in range(horizon)],
    )
    ctx.write_csv(
        "paths.csv",
        ["path", "quarter", *names],
        [[p, q + 1, *paths[p, q]] for p in range(paths.shape[0]) for q in range(horizon)],
    )
    shock_i = names.index(e["shock_variable"])
    resp_i = names.index(e["response_variable"])
    rep = risk.shock_analysis(
        gan, latest, shock_i, e["shock_sd"], e["n_paths"], ctx.rng("shock"), horizon=horizon, n_series=n_series
    )
    null = risk.shock_analysis(
        gan, latest, shock_i, 0.0, e["n_paths"], ctx.rng("shock"), horizon=horizon, n_series=n_series
    )
    ctx.write_csv(
        "shock.csv",
        ["quarter", "series", "baseline", "shocked"],
        [[q + 1, names[s], rep.baseline[q, s], rep.shocked[q, s]] for q in range(horizon) for s in range(n_series)],
    )
    metrics["shock_response_mean_diff"] = float(np.mean(rep.shocked[:, resp_i] - rep.baseline[:, resp_i]))
    metrics["shock_null_max_abs_diff"] = float(np.max(np.abs(null.shocked - null.baseline)))
    metrics["n_training_samples"] = int(cond.shape[0])
    return ScenarioResult(metrics, {"cgan": gan}, {"latest": latest, "horizon": horizon, "names": names, "shock": rep})


# -- presets and registry -----------------------------------------------------------


def _train(iterations: int, **over) -> dict:
    t = {
        "iterations": iterations, "n_dis": 1, "clip_c": 0.01, "batch_size": 128,
        "lr": 1e-4, "beta1": 0.5, "beta2": 0.9, "g_lr": None, "track_every": 100,
    }
    t.update(over)
    return t


def _model(**over) -> dict:
    m = {
        "variant": "cgan", "noise_dim": 30, "g_hidden": (100, 100, 100), "d_hidden": (100, 100, 100),
        "hidden_activation": "leaky_relu", "d_hidden_activation": "", "alpha": 0.1, "noise_dist": "normal",
    }
    m.update(over)
    return m


def _preset(train: dict, model: dict, data: dict, eval: dict) -> dict:
    return {"run": {"seed": 0}, "train": train, "model": model, "data": data, "eval": eval}


def _both(desk: dict, paper: dict) -> dict[str, dict]:
    return {"desk": desk, "paper": paper}


def _inverse_cdf_presets():
    # generator widths and noise inputs come from the variant table
    model = _model(variant="gan", hidden_activation="relu", d_hidden_activation="leaky_relu", d_hidden=(100,), noise_dist="uniform")
    del model["g_hidden"], model["noise_dim"]
    data = {"n_samples": 10_000, "variants": tuple(INVERSE_CDF_VARIANTS)}
    ev = {"n_generate": 10_000, "grid_points": 201}
    return _both(
        _preset(_train(2000, track_every=500), model, data, ev),
        _preset(_train(10_000, track_every=500), model, data, ev),
    )


def _gmm_cat_presets():
    data = {"cluster_size": 1000}
    ev = {"n_generate": 1000, "qq_points": 100, "qq_dim": 0, "kde_cluster": 1, "kde_folds": 5}
    return _both(_preset(_train(3000), _model(), data, ev), _preset(_train(10_000), _model(), data, ev))


def _gmm_int_presets():
    data = {"cluster_size": 1000, "condition_scale": 0.5}
    ev = {"n_generate": 1000, "conditions": (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)}
    return _both(_preset(_train(3000), _model(), data, ev), _preset(_train(10_000), _model(), data, ev))


def _gmm_circle_presets():
    data = {"n_points": 1000, "radius": 2.0, "var_lo": 0.05, "var_hi": 0.5}
    ev = {"qq_points": 100, "n_probes": 8, "probe_draws": 2000}
    return _both(_preset(_train(3000), _model(), data, ev), _preset(_train(10_000), _model(), data, ev))


def _gmm_line_presets(var_slope: float):
    data = {"n_points": 1000, "x_min": -5.0, "x_max": 5.0, "var_slope": var_slope, "base_var": 0.01, "clip_fraction": 0.2}
    ev = {"qq_points": 100}
    return _both(_preset(_train(3000), _model(), data, ev), _preset(_train(10_000), _model(), data, ev))


def _var1_cont_presets():
    desk = _preset(
        _train(5000, track_every=250), _model(),
        {"n_samples": 5000, "moment_samples": 1000, "moment_iterations": 3000},
        {"n_conditions": 50, "draws": 2000},
    )
    paper = _preset(
        _train(10_000, track_every=100), _model(),
        {"n_samples": 1000, "moment_samples": 1000, "moment_iterations": 10_000},
        {"n_conditions": 500, "draws": 10_000},
    )
    return _both(desk, paper)


def _var1_large_presets():
    data = {"n_samples": 20_000}
    return _both(
        _preset(_train(5000, track_every=500), _model(), data, {"n_conditions": 200, "draws": 2000}),
        _preset(_train(10_000, track_every=500), _model(), data, {"n_conditions": 200, "draws": 10_000}),
    )


def _region_cont_presets():
    data = {"region_size": 10_000}
    return _both(
        _preset(_train(3000, track_every=500), _model(), data, {"n_conditions": 50, "draws": 2000}),
        _preset(_train(10_000, track_every=500), _model(), data, {"n_conditions": 500, "draws": 10_000}),
    )


def _region_cat_presets():
    # one discriminator step per generator step leaves the region code ignored
    data = {"region_size": 10_000, "window": 2}
    return _both(
        _preset(_train(3000, n_dis=5, track_every=100), _model(), data, {"track_draws": 5000, "n_generate": 5000}),
        _preset(_train(10_000, n_dis=5, track_every=100), _model(), data, {"track_draws": 10_000, "n_generate": 10_000}),
    )


def _garch_presets():
    data = {"n_samples": 10_000, "burn_in": 500}
    return _both(
        _preset(_train(3000, track_every=500), _model(), data, {"n_conditions": 200, "draws": 2000}),
        _preset(_train(10_000, track_every=500), _model(), data, {"n_conditions": 500, "draws": 10_000}),
    )


def _equity_presets():
    data = {
        "prices_path": "", "return_mode": "difference", "window": 2,
        "synthetic_start": "2007-11-01", "synthetic_end": "2015-11-02",
        "stressed_start": "2007-11-01", "normal_start": "2009-11-01",
        "backtest_start": "2011-11-01", "backtest_end": "2015-11-01",
    }
    ev = {"level": 0.99, "scale": 50, "track_draws": 2000, "min_days": 100}
    return _both(
        _preset(_train(3000, track_every=250), _model(), data, ev),
        _preset(_train(10_000, track_every=100), _model(), data, ev),
    )


def _macro_presets():
    data = {
        "macro_path": "", "n_quarters": 243, "window": 13, "cond_window": 4,
        "transforms": ("logdiff", "diff", "diff", "logdiff", "diff"),
    }
    ev = {
        "n_paths": 100, "fan_probs": (0.01, 0.5, 0.99), "shock_variable": "fedfunds", "shock_sd": 1.0,
        "response_variable": "unemp", "fan_variable": "gdp",
    }
    return _both(
        _preset(_train(2000, batch_size=100, track_every=250), _model(), data, ev),
        _preset(_train(30_000, batch_size=100, track_every=500), _model(), data, ev),
    )


@dataclass
class Scenario:
    name: str
    summary: str
    func: Callable[[RunContext], ScenarioResult]
    presets: dict[str, dict]


REGISTRY: dict[str, Scenario] = {}


def _register(name: str, summary: str, func, presets) -> None:
    REGISTRY[name] = Scenario(name, summary, func, presets)


_register("inverse-cdf", "GAN learns the N(0,1) inverse CDF from uniform noise; spline knots", run_inverse_cdf, _inverse_cdf_presets())
_register("gmm-categorical", "4-cluster Gaussian mixture, one-hot conditions, KDE benchmark", run_gmm_categorical, _gmm_cat_presets())
_register("gmm-integer-extrapolation", "integer cluster conditions, decimal-condition interpolation", run_gmm_integer, _gmm_int_presets())
_register("gmm-circle", "continuous conditions on a ring with rising variance", run_gmm_circle, _gmm_circle_presets())
_register("gmm-line-slow", "line with slowly rising variance, ends clipped and extrapolated", _run_gmm_line, _gmm_line_presets(0.05))
_register("gmm-line-fast", "line with quickly rising variance, ends clipped and extrapolated", _run_gmm_line, _gmm_line_presets(0.25))
_register("var1-continuous", "VAR(1) lag conditions: a^3/a^4 chaining and conditional moments", run_var1_continuous, _var1_cont_presets())
_register("var1-large", "conditional moment scatter with 20,000 training pairs", run_var1_large, _var1_large_presets())
_register("region-continuous", "region-switching VAR(1), lag conditions, per-region moments", run_region_continuous, _region_cont_presets())
_register("region-categorical", "region-switching VAR(1), window panels, one-hot region condition", run_region_categorical, _region_cat_presets())
_register("garch-sigma-t", "GARCH(1,1) conditioned on the current variance", lambda ctx: _run_garch(ctx, lagged=False), _garch_presets())
_register("garch-sigma-t-1", "GARCH(1,1) conditioned on the previous variance", lambda ctx: _run_garch(ctx, lagged=True), _garch_presets())
_register("equity-backtest", "two-stock HS vs CGAN VaR/ES and breach backtest", run_equity_backtest, _equity_presets())
_register("macro-forecast", "5-series quarterly forecasts, path fan, rate shock", run_macro_forecast, _macro_presets())


def get_scenario(name: str) -> Scenario:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; run 'list' to see the registry") from None


def preset_config(name: str, preset: str = "desk") -> dict:
    sc = get_scenario(name)
    if preset not in sc.presets:
        raise cfgmod.ConfigError(f"unknown preset {preset!r}; choose from {sorted(sc.presets)}")
    return copy.deepcopy(sc.presets[preset])


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def run_scenario(
    name: str,
    *,
    preset: str = "desk",
    seed: int | None = None,
    out_dir: str | Path | None = None,
    config_path: str | Path | None = None,
    config: Mapping | None = None,
) -> ScenarioResult:
    """Resolve the effective config, run, and write metrics plus manifest.

    ``config`` (already typed, e.g. from a manifest) takes precedence over
    ``config_path``. ``seed`` overrides ``[run] seed``.
    """
    sc = get_scenario(name)
    base = preset_config(name, preset)
    if config is not None:
        cfg = cfgmod.from_jsonable(config, base)
    else:
        cfg = cfgmod.load(base, config_path)
    if seed is not None:
        cfg["run"]["seed"] = int(seed)
    ctx = RunContext(name, preset, cfg["run"]["seed"], cfg, out_dir)
    result = sc.func(ctx)
    if ctx.out_dir is not None:
        metrics = {k: result.metrics[k] for k in sorted(result.metrics)}
        (ctx.out_dir / METRICS).write_text(json.dumps(metrics, indent=2, default=_json_default) + "\n")
        ctx.write_csv("metrics.csv", ["name", "value"], metrics.items())
        manifest = {
            "scenario": name,
            "preset": preset,
            "seed": ctx.seed,
            "config": cfgmod.to_jsonable(cfg),
            "outputs": sorted(ctx.outputs + [METRICS]),
        }
        (ctx.out_dir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return result


def rerun_manifest(path: str | Path, out_dir: str | Path | None = None) -> ScenarioResult:
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST
    try:
        manifest = json.loads(p.read_text())
    except OSError as exc:
        raise cfgmod.ConfigError(f"cannot read manifest {p}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise cfgmod.ConfigError(f"manifest {p} is not valid JSON: {exc}") from exc
    for key in ("scenario", "preset", "seed", "config"):
        if key not in manifest:
            raise cfgmod.ConfigError(f"manifest {p} lacks {key!r}")
    return run_scenario(
        manifest["scenario"], preset=manifest["preset"], seed=manifest["seed"], out_dir=out_dir, config=manifest["config"]
    )
