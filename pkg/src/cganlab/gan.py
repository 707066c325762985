"""Adversarial costs and the clipped alternating training loop.

Four variants share one loop. GAN/CGAN use the saturating log-loss with a
sigmoid discriminator head; WGAN/CWGAN use the critic difference with an
identity head. Conditional variants concatenate the condition vector to
both the generator input ``[z | y]`` and the discriminator input ``[x | y]``.
The discriminator is weight-clipped after every one of its updates, for all
four variants.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .nn import AdamState, Mlp, adam_step, backward, clip_weights, forward, init_mlp

logger = logging.getLogger(__name__)

PROB_CLAMP = 1e-7


class GanVariant(enum.Enum):
    GAN = "gan"
    CGAN = "cgan"
    WGAN = "wgan"
    CWGAN = "cwgan"

    @property
    def wasserstein(self) -> bool:
        return self in (GanVariant.WGAN, GanVariant.CWGAN)

    @property
    def conditional(self) -> bool:
        return self in (GanVariant.CGAN, GanVariant.CWGAN)

    @classmethod
    def parse(cls, value: "str | GanVariant") -> "GanVariant":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class TrainingDivergedError(FloatingPointError):
    """Raised when a loss turns non-finite mid-training."""


@dataclass
class GanSpec:
    generator: Mlp
    discriminator: Mlp
    noise_dim: int
    noise_dist: str = "uniform"  # or "normal"
    condition_dim: int = 0
    variant: GanVariant = GanVariant.GAN

    def __post_init__(self) -> None:
        self.variant = GanVariant.parse(self.variant)
        if self.noise_dist not in ("uniform", "normal"):
            raise ValueError(f"noise_dist must be 'uniform' or 'normal', got {self.noise_dist!r}")
        if self.generator.in_dim != self.noise_dim + self.condition_dim:
            raise ValueError(
                f"generator input {self.generator.in_dim} != noise {self.noise_dim} "
                f"+ condition {self.condition_dim}"
            )
        if self.discriminator.in_dim != self.data_dim + self.condition_dim:
            raise ValueError(
                f"discriminator input {self.discriminator.in_dim} != data {self.data_dim} "
                f"+ condition {self.condition_dim}"
            )
        if self.discriminator.out_dim != 1:
            raise ValueError("discriminator must emit a single score")
        head = self.discriminator.layers[-1].activation
        expected = "identity" if self.variant.wasserstein else "sigmoid"
        if head != expected:
            raise ValueError(f"{self.variant.name} needs a {expected} discriminator head, got {head}")

    @property
    def data_dim(self) -> int:
        return self.generator.out_dim

    def copy(self) -> "GanSpec":
        return GanSpec(
            self.generator.copy(),
            self.discriminator.copy(),
            self.noise_dim,
            self.noise_dist,
            self.condition_dim,
            self.variant,
        )


def build_gan(
    variant: str | GanVariant,
    data_dim: int,
    *,
    noise_dim: int = 30,
    condition_dim: int = 0,
    g_hidden: Sequence[int] = (100, 100, 100),
    d_hidden: Sequence[int] = (100, 100, 100),
    hidden_activation: str = "leaky_relu",
    alpha: float = 0.1,
    noise_dist: str = "uniform",
    seed: int | np.random.Generator = 0,
    d_hidden_activation: str | None = None,
) -> GanSpec:
    """Generator and discriminator with the requested hidden widths.

    The generator ends in an identity layer; the discriminator head is
    sigmoid or identity depending on the variant. ``d_hidden_activation``
    defaults to ``hidden_activation``.
    """
    variant = GanVariant.parse(variant)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g_sizes = [noise_dim + condition_dim, *g_hidden, data_dim]
    d_sizes = [data_dim + condition_dim, *d_hidden, 1]
    g_acts = [hidden_activation] * len(g_hidden) + ["identity"]
    head = "identity" if variant.wasserstein else "sigmoid"
    d_acts = [d_hidden_activation or hidden_activation] * len(d_hidden) + [head]
    gen = init_mlp(g_sizes, g_acts, rng, alpha)
    disc = init_mlp(d_sizes, d_acts, rng, alpha)
    return GanSpec(gen, disc, noise_dim, noise_dist, condition_dim, variant)


@dataclass
class TrainConfig:
    iterations: int = 10_000
    n_dis: int = 1
    clip_c: float = 0.01
    batch_size: int = 128
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    g_lr: float | None = None  # generator learning rate; None means ``lr``
    track_every: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.n_dis < 1:
            raise ValueError("n_dis must be at least 1")
        if not self.clip_c > 0:
            raise ValueError("clip_c must be positive")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.track_every < 1:
            raise ValueError("track_every must be at least 1")


@dataclass
class TrainingTrace:
    records: list[dict[str, float]] = field(default_factory=list)

    def add(self, iteration: int, d_loss: float, g_loss: float, stats: Mapping[str, float]) -> None:
        if self.records and iteration <= self.records[-1]["iteration"]:
            raise ValueError("checkpoints must be strictly increasing")
        row: dict[str, float] = {"iteration": iteration, "d_loss": d_loss, "g_loss": g_loss}
        row.update(stats)
        self.records.append(row)

    @property
    def columns(self) -> list[str]:
        cols = ["iteration", "d_loss", "g_loss"]
        for rec in self.records:
            cols.extend(k for k in rec if k not in cols)
        return cols

    def column(self, name: str) -> np.ndarray:
        return np.array([rec.get(name, np.nan) for rec in self.records], dtype=np.float64)

    def to_csv(self, path: str | Path) -> None:
        cols = self.columns
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for rec in self.records:
                w.writerow(
                    [str(int(rec[c])) if c == "iteration" else format(rec.get(c, math.nan), ".17g") for c in cols]
                )


def sample_noise(n: int, spec: GanSpec, rng: np.random.Generator) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be non-negative")
    if spec.noise_dist == "uniform":
        return rng.random((n, spec.noise_dim))
    return rng.standard_normal((n, spec.noise_dim))


def _clamp(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def _check_finite(*arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise TrainingDivergedError("non-finite discriminator output")


def discriminator_loss(variant, d_real: np.ndarray, d_fake: np.ndarray) -> float:
    """Loss minimised by the discriminator (the negated ascent objective)."""
    variant = GanVariant.parse(variant)
    _check_finite(d_real, d_fake)
    if variant.wasserstein:
        return float(-np.mean(d_real) + np.mean(d_fake))
    return float(-np.mean(np.log(_clamp(d_real))) - np.mean(np.log(1.0 - _clamp(d_fake))))


def generator_loss(variant, d_fake: np.ndarray) -> float:
    """Loss minimised by the generator; the saturating form for GAN/CGAN."""
    variant = GanVariant.parse(variant)
    _check_finite(d_fake)
    if variant.wasserstein:
        return float(-np.mean(d_fake))
    return float(np.mean(np.log(1.0 - _clamp(d_fake))))


# Derivatives w.r.t. the head outputs. The clamp only guards the
# denominators; the slope of the unclamped expression passes through.


def _discriminator_loss_grads(variant, d_real, d_fake):
    n_r, n_f = d_real.shape[0], d_fake.shape[0]
    if variant.wasserstein:
        return np.full_like(d_real, -1.0 / n_r), np.full_like(d_fake, 1.0 / n_f)
    return -1.0 / (_clamp(d_real) * n_r), 1.0 / ((1.0 - _clamp(d_fake)) * n_f)


def _generator_loss_grad(variant, d_fake):
    n = d_fake.shape[0]
    if variant.wasserstein:
        return np.full_like(d_fake, -1.0 / n)
    return -1.0 / ((1.0 - _clamp(d_fake)) * n)


def _with_conditions(x: np.ndarray, y: np.ndarray | None) -> np.ndarray:
    if y is None or y.shape[1] == 0:
        return x
    return np.hstack((x, y))


def _broadcast_conditions(spec: GanSpec, n: int, conditions) -> np.ndarray | None:
    if spec.condition_dim == 0:
        if conditions is not None and np.size(conditions) > 0:
            raise ValueError("unconditional spec given conditions")
        return None
    if conditions is None:
        raise ValueError("conditional spec needs conditions")
    y = np.asarray(conditions, dtype=np.float64)
    if y.ndim == 1:
        y = y.reshape(1, -1)
    if y.shape[1] != spec.condition_dim:
        raise ValueError(f"conditions have {y.shape[1]} columns, expected {spec.condition_dim}")
    if y.shape[0] == 1 and n != 1:
        y = np.repeat(y, n, axis=0)
    if y.shape[0] != n:
        raise ValueError(f"need {n} condition rows (or a single row), got {y.shape[0]}")
    return y


def generate_from_noise(spec: GanSpec, noise: np.ndarray, conditions=None) -> np.ndarray:
    """Push a given noise matrix (and conditions) through the generator."""
    z = np.asarray(noise, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != spec.noise_dim:
        raise ValueError(f"noise shape {z.shape} does not match noise_dim {spec.noise_dim}")
    y = _broadcast_conditions(spec, z.shape[0], conditions)
    if z.shape[0] == 0:
        return np.zeros((0, spec.data_dim))
    out, _ = forward(spec.generator, _with_conditions(z, y))
    return out


def generate(spec: GanSpec, n: int, conditions=None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw ``n`` samples; a single condition row is broadcast to all draws."""
    if rng is None:
        rng = np.random.default_rng()
    y = _broadcast_conditions(spec, n, conditions)
    return generate_from_noise(spec, sample_noise(n, spec, rng), y)


class _EpochBatcher:
    """Minibatches drawn without replacement; reshuffled on exhaustion."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.batch_size = min(batch_size, n)
        self.rng = rng
        self.order = rng.permutation(n)
        self.pos = 0

    def next(self) -> np.ndarray:
        if self.pos + self.batch_size > self.n:
            self.order = self.rng.permutation(self.n)
            self.pos = 0
        idx = self.order[self.pos : self.pos + self.batch_size]
        self.pos += self.batch_size
        return idx


Tracker = Callable[[GanSpec, int], Mapping[str, float]]


def discriminator_step(spec, x, y, z, state: AdamState, clip_c: float) -> float:
    """One Adam update of the discriminator followed by weight clipping.

    Real and generated rows go through the discriminator as one stacked
    batch; the per-row loss gradients keep the two halves' means separate.
    """
    variant = spec.variant
    n = x.shape[0]
    fake, _ = forward(spec.generator, _with_conditions(z, y))
    both = np.vstack((_with_conditions(x, y), _with_conditions(fake, y)))
    scores, cache = forward(spec.discriminator, both)
    d_real, d_fake = scores[:n], scores[n:]
    loss = discriminator_loss(variant, d_real, d_fake)
    if not math.isfinite(loss):
        raise TrainingDivergedError(f"discriminator loss is {loss}")
    up_r, up_f = _discriminator_loss_grads(variant, d_real, d_fake)
    grads = backward(spec.discriminator, cache, np.vstack((up_r, up_f)), need_input=False)
    adam_step(spec.discriminator.params(), grads.params(), state)
    clip_weights(spec.discriminator, clip_c)
    return loss


def generator_step(spec, y, z, state: AdamState) -> float:
    """One Adam update of the generator through the (untouched) discriminator."""
    variant = spec.variant
    fake, cache_g = forward(spec.generator, _with_conditions(z, y))
    d_fake, cache_d = forward(spec.discriminator, _with_conditions(fake, y))
    loss = generator_loss(variant, d_fake)
    if not math.isfinite(loss):
        raise TrainingDivergedError(f"generator loss is {loss}")
    grads_d = backward(spec.discriminator, cache_d, _generator_loss_grad(variant, d_fake))
    upstream = grads_d.inputs[:, : spec.data_dim]
    grads_g = backward(spec.generator, cache_g, upstream)
    adam_step(spec.generator.params(), grads_g.params(), state)
    return loss


def train(
    spec: GanSpec,
    cfg: TrainConfig,
    data: np.ndarray,
    conditions: np.ndarray | None = None,
    tracker: Tracker | None = None,
) -> tuple[GanSpec, TrainingTrace]:
    """Alternate ``n_dis`` clipped discriminator updates with one generator update.

    Works on a copy; the GanSpec passed in is left untouched. Returns the
    trained copy and a trace with a checkpoint every ``track_every``
    iterations (and at the last one).
    """
    x_all = np.asarray(data, dtype=np.float64)
    if x_all.ndim != 2 or x_all.shape[1] != spec.data_dim:
        raise ValueError(f"data shape {x_all.shape} does not match data_dim {spec.data_dim}")
    if spec.condition_dim:
        if conditions is None:
            raise ValueError("conditional training needs conditions")
        y_all = np.asarray(conditions, dtype=np.float64)
        if y_all.shape != (x_all.shape[0], spec.condition_dim):
            raise ValueError(
                f"conditions shape {y_all.shape} != ({x_all.shape[0]}, {spec.condition_dim})"
            )
    else:
        if conditions is not None and np.size(conditions) > 0:
            raise ValueError("unconditional spec given conditions")
        y_all = None

    spec = spec.copy()
    trace = TrainingTrace()
    if cfg.iterations == 0:
        return spec, trace

    rng = np.random.default_rng(cfg.seed)
    d_state = AdamState(cfg.lr, cfg.beta1, cfg.beta2)
    g_state = AdamState(cfg.g_lr if cfg.g_lr is not None else cfg.lr, cfg.beta1, cfg.beta2)
    batcher = _EpochBatcher(x_all.shape[0], cfg.batch_size, rng)
    bs = batcher.batch_size
    clip_weights(spec.discriminator, cfg.clip_c)

    for it in range(1, cfg.iterations + 1):
        for _ in range(cfg.n_dis):
            idx = batcher.next()
            y = None if y_all is None else y_all[idx]
            z = sample_noise(bs, spec, rng)
            d_loss = discriminator_step(spec, x_all[idx], y, z, d_state, cfg.clip_c)
        z = sample_noise(bs, spec, rng)
        g_loss = generator_step(spec, y, z, g_state)
        if it % cfg.track_every == 0 or it == cfg.iterations:
            stats = dict(tracker(spec, it)) if tracker is not None else {}
            trace.add(it, d_loss, g_loss, stats)
            logger.debug("iter %d d_loss %.5f g_loss %.5f", it, d_loss, g_loss)
    return spec, trace
