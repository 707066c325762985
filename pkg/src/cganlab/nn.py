"""Dense feed-forward networks with exact reverse-mode gradients.

Everything is float64 numpy. A layer computes ``act(x @ W.T + b)`` with
``W`` stored as (out, in). Gradients are batch sums of the upstream
signal; the loss functions in :mod:`cganlab.gan` already divide by the
batch size, so the sums come out as gradients of batch means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ACTIVATIONS = ("leaky_relu", "relu", "identity", "sigmoid")
RELU_FAMILY = ("leaky_relu", "relu")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "leaky_relu"
    alpha: float = 0.1  # LeakyReLU slope, ignored by the other activations

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError(
                f"inconsistent layer shapes: weights {self.weights.shape}, bias {self.bias.shape}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.activation == "leaky_relu" and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"LeakyReLU alpha must lie in (0, 1), got {self.alpha}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class Mlp:
    layers: list[DenseLayer]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("an Mlp needs at least one layer")
        for k in range(len(self.layers) - 1):
            if self.layers[k].out_dim != self.layers[k + 1].in_dim:
                raise ValueError(
                    f"layer {k} outputs {self.layers[k].out_dim} values but layer {k + 1} "
                    f"expects {self.layers[k + 1].in_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def sizes(self) -> list[int]:
        return [self.in_dim] + [layer.out_dim for layer in self.layers]

    def params(self) -> list[np.ndarray]:
        """Parameter arrays in the order W0, b0, W1, b1, ... (live references)."""
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.bias))
        return out

    def copy(self) -> "Mlp":
        return Mlp(
            [
                DenseLayer(l.weights.copy(), l.bias.copy(), l.activation, l.alpha)
                for l in self.layers
            ]
        )


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # input to each layer
    preacts: list[np.ndarray]  # x @ W.T + b for each layer
    outputs: list[np.ndarray]  # post-activation of each layer
    shapes: tuple[tuple[int, int], ...]


@dataclass
class GradientSet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    inputs: np.ndarray | None

    def params(self) -> list[np.ndarray]:
        """Gradients aligned with :meth:`Mlp.params`."""
        out = []
        for gw, gb in zip(self.weights, self.biases):
            out.extend((gw, gb))
        return out


def _resolve_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def init_mlp(
    layer_sizes: Sequence[int],
    activations: str | Sequence[str],
    seed: int | np.random.Generator = 0,
    alpha: float = 0.1,
) -> Mlp:
    """Glorot-uniform weights, zero biases.

    ``activations`` is either one name per layer or a single name used for
    every layer.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output size")
    if min(sizes) < 1:
        raise ValueError(f"layer sizes must be positive, got {sizes}")
    n_layers = len(sizes) - 1
    if isinstance(activations, str):
        activations = [activations] * n_layers
    if len(activations) != n_layers:
        raise ValueError(f"expected {n_layers} activations, got {len(activations)}")
    rng = _resolve_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], activations):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(DenseLayer(w, np.zeros(fan_out), act, alpha))
    return Mlp(layers)


def activate(x: np.ndarray, activation: str, alpha: float = 0.1) -> np.ndarray:
    if activation == "leaky_relu":
        # valid because 0 < alpha < 1
        return np.maximum(x, alpha * x)
    if activation == "relu":
        return np.maximum(x, 0.0)
    if activation == "identity":
        return x
    if activation == "sigmoid":
        # split by sign so exp never overflows
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out
    raise ValueError(f"unknown activation {activation!r}")


def _activation_backward(g, preact, output, activation, alpha):
    if activation == "leaky_relu":
        return np.where(preact > 0, g, alpha * g)
    if activation == "relu":
        return np.where(preact > 0, g, 0.0)
    if activation == "identity":
        return g
    if activation == "sigmoid":
        return g * output * (1.0 - output)
    raise ValueError(f"unknown activation {activation!r}")


def forward(net: Mlp, batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"batch shape {x.shape} does not match network input dim {net.in_dim}")
    inputs, preacts, outputs = [], [], []
    for layer in net.layers:
        inputs.append(x)
        z = x @ layer.weights.T
        z += layer.bias
        preacts.append(z)
        x = activate(z, layer.activation, layer.alpha)
        outputs.append(x)
    shapes = tuple(l.weights.shape for l in net.layers)
    return x, ForwardCache(inputs, preacts, outputs, shapes)


def backward(net: Mlp, cache: ForwardCache, upstream: np.ndarray, need_input: bool = True) -> GradientSet:
    """Chain rule back through ``net`` given dLoss/dOutput.

    ``need_input=False`` skips the final input-gradient product (returned
    as ``None``) when only parameter gradients are wanted.
    """
    if cache.shapes != tuple(l.weights.shape for l in net.layers):
        raise ValueError("forward cache does not belong to this network")
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != cache.outputs[-1].shape:
        raise ValueError(
            f"upstream shape {g.shape} does not match forward output {cache.outputs[-1].shape}"
        )
    n = len(net.layers)
    gw: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for k in range(n - 1, -1, -1):
        layer = net.layers[k]
        g = _activation_backward(g, cache.preacts[k], cache.outputs[k], layer.activation, layer.alpha)
        gw[k] = g.T @ cache.inputs[k]
        gb[k] = g.sum(axis=0)
        if k > 0 or need_input:
            g = g @ layer.weights
    return GradientSet(gw, gb, g if need_input else None)


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}, moment {m.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient entries")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    step = state.lr / bc1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= step * m / (np.sqrt(v / bc2) + state.eps)
    return params, state


def clip_weights(net: Mlp, c: float, copy: bool = False) -> Mlp:
    """Project every weight and bias into [-c, c] (in place unless ``copy``)."""
    if not c > 0:
        raise ValueError(f"clip value must be positive, got {c}")
    target = net.copy() if copy else net
    for p in target.params():
        np.clip(p, -c, c, out=p)
    return target


def extract_spline_knots(net: Mlp) -> np.ndarray:
    """Breakpoints of a one-hidden-layer, scalar-input ReLU network.

    Each hidden unit bends where its pre-activation crosses zero, at
    ``x = -b_j / w_j``. Units with ``w_j == 0`` are constant and contribute
    no knot, so the count never exceeds the hidden width.
    """
    if len(net.layers) != 2:
        raise ValueError("knot extraction needs exactly one hidden layer")
    hidden = net.layers[0]
    if hidden.in_dim != 1:
        raise ValueError("knot extraction needs a scalar input")
    if hidden.activation not in RELU_FAMILY:
        raise ValueError(f"hidden activation must be ReLU-type, got {hidden.activation}")
    w = hidden.weights[:, 0]
    active = w != 0
    return np.sort(-hidden.bias[active] / w[active])


# -- plain-text snapshots -----------------------------------------------------
#
#   mlp <n_layers>
#   layer <in> <out> <activation> <alpha>
#   <out lines of `in` weights, row-major>
#   <one line of `out` biases>
#   ... repeated per layer
#
# Values are written with 17 significant digits so reloads are bit-exact.


def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def dumps_mlp(net: Mlp) -> str:
    lines = [f"mlp {len(net.layers)}"]
    for layer in net.layers:
        lines.append(f"layer {layer.in_dim} {layer.out_dim} {layer.activation} {layer.alpha!r}")
        lines.extend(_fmt(row) for row in layer.weights)
        lines.append(_fmt(layer.bias))
    return "\n".join(lines) + "\n"


def loads_mlp(text: str) -> Mlp:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "mlp":
        raise ValueError("not an mlp snapshot")
    n_layers = int(head[1])
    pos = 1
    layers = []
    for _ in range(n_layers):
        tag, n_in, n_out, act, alpha = lines[pos].split()
        if tag != "layer":
            raise ValueError(f"expected a layer header, got {lines[pos]!r}")
        n_in, n_out = int(n_in), int(n_out)
        rows = [np.array(lines[pos + 1 + r].split(), dtype=np.float64) for r in range(n_out)]
        weights = np.vstack(rows).reshape(n_out, n_in)
        bias = np.array(lines[pos + 1 + n_out].split(), dtype=np.float64)
        layers.append(DenseLayer(weights, bias, act, float(alpha)))
        pos += n_out + 2
    return Mlp(layers)


def save_mlp(net: Mlp, path: str | Path) -> None:
    Path(path).write_text(dumps_mlp(net))


def load_mlp(path: str | Path) -> Mlp:
    return loads_mlp(Path(path).read_text())
