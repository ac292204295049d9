"""Two-layer network with the neuron's saturating-linear activation.

Pre-activations are in units of the neuron's critical drive: ``z = 1`` is the
net input that moves a neuron wall across its whole free layer in one write
window. Weights are bounded by ``w_bound``, which the hardware maps to the
lowest synapse resistance.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .._io import atomic_write_json


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Activation:
    """Piecewise-linear table ``f(u)`` on ``u`` in [0, 1]; flat outside."""

    u: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if u.ndim != 1 or u.shape != f.shape or u.size < 2 or np.any(np.diff(u) <= 0):
            raise NetworkError("activation table needs increasing u and matching f")
        if np.any(np.diff(f) < 0):
            raise NetworkError("activation must be non-decreasing")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "f", f)

    def __call__(self, z):
        return np.interp(z, self.u, self.f)

    def grad(self, z, leak: float = 0.0):
        """Slope of the table; ``leak`` times the mean slope outside the table range."""
        slopes = np.diff(self.f) / np.diff(self.u)
        k = np.clip(np.searchsorted(self.u, z, side="right") - 1, 0, slopes.size - 1)
        g = slopes[k]
        outside = leak * (self.f[-1] - self.f[0]) / (self.u[-1] - self.u[0])
        return np.where((z < self.u[0]) | (z > self.u[-1]), outside, g)

    @property
    def lo(self) -> float:
        return float(self.f[0])

    @property
    def hi(self) -> float:
        return float(self.f[-1])

    @classmethod
    def ideal(cls) -> "Activation":
        return cls(np.array([0.0, 1.0]), np.array([0.0, 1.0]))

    def to_dict(self) -> dict:
        return {"u": self.u.tolist(), "f": self.f.tolist()}


def quantize_levels(a, levels: int):
    """Round values in [0, 1] to ``levels`` evenly spaced codes."""
    n = levels - 1
    return np.round(np.clip(a, 0.0, 1.0) * n) / n


@dataclass
class NetworkSpec:
    sizes: tuple[int, ...] = (256, 20, 26)
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    activation: Activation = field(default_factory=Activation.ideal)
    quant_bits_w: int = 4
    quant_bits_a: int = 2
    quantized: bool = False
    w_bound: float | tuple[float, ...] = 1.0  # one value for all layers or one per layer

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2 or any(s < 1 for s in self.sizes):
            raise NetworkError("sizes must list at least two positive layer widths")
        if self.weights:
            if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
                raise NetworkError("one weight matrix and bias vector per layer")
            for k, (W, b) in enumerate(zip(self.weights, self.biases)):
                if np.shape(W) != (self.sizes[k], self.sizes[k + 1]) or np.shape(b) != (self.sizes[k + 1],):
                    raise NetworkError(f"layer {k} shapes {np.shape(W)}, {np.shape(b)} do not match sizes")
            self.weights = [np.asarray(W, dtype=float) for W in self.weights]
            self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        if not isinstance(self.w_bound, (int, float)):
            self.w_bound = tuple(float(v) for v in self.w_bound)
            if len(self.w_bound) != len(self.sizes) - 1:
                raise NetworkError("w_bound needs one value per layer")
        if np.any(np.asarray(self.w_bound) <= 0):
            raise NetworkError("w_bound must be positive")

    def bound(self, k: int) -> float:
        return float(self.w_bound) if isinstance(self.w_bound, (int, float)) else self.w_bound[k]

    @property
    def weight_levels(self) -> int:
        """Extremes plus ``2^bits - 1`` intermediate levels."""
        return 2**self.quant_bits_w + 1

    @property
    def act_levels(self) -> int:
        return 2**self.quant_bits_a + 1

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def copy(self) -> "NetworkSpec":
        return replace(self, weights=[W.copy() for W in self.weights], biases=[b.copy() for b in self.biases])

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activation": self.activation.to_dict(),
            "quant_bits_w": self.quant_bits_w,
            "quant_bits_a": self.quant_bits_a,
            "quantized": self.quantized,
            "w_bound": self.w_bound if isinstance(self.w_bound, float) else list(self.w_bound),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        act = d.get("activation")
        return cls(
            tuple(d["sizes"]),
            [np.array(W, dtype=float) for W in d["weights"]],
            [np.array(b, dtype=float) for b in d["biases"]],
            Activation(np.array(act["u"]), np.array(act["f"])) if act else Activation.ideal(),
            d.get("quant_bits_w", 4),
            d.get("quant_bits_a", 2),
            d.get("quantized", False),
            d.get("w_bound", 1.0),
        )

    def save(self, path) -> Path:
        return atomic_write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "NetworkSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def forward(spec: NetworkSpec, X, quantize_act: bool | None = None, return_all: bool = False):
    """Software forward pass. Hidden outputs are rounded to the activation codes when quantized."""
    if not spec.weights:
        raise NetworkError("network has no weights")
    quantize_act = spec.quantized if quantize_act is None else quantize_act
    h = np.asarray(X, dtype=float)
    if h.shape[-1] != spec.sizes[0]:
        raise NetworkError(f"input has {h.shape[-1]} features, network expects {spec.sizes[0]}")
    zs, hs = [], [h]
    for k, (W, b) in enumerate(zip(spec.weights, spec.biases)):
        z = h @ W + b
        h = spec.activation(z)
        if quantize_act and k < spec.n_layers - 1:
            h = quantize_levels(h, spec.act_levels)
        zs.append(z)
        hs.append(h)
    return (zs, hs) if return_all else h


def predict(spec: NetworkSpec, X, quantize_act: bool | None = None) -> np.ndarray:
    out = forward(spec, X, quantize_act)
    if out.shape[-1] == 1:
        return (out[..., 0] > 0.5 * (spec.activation.lo + spec.activation.hi)).astype(int)
    return np.argmax(out, axis=-1)


def accuracy(spec: NetworkSpec, X, y, quantize_act: bool | None = None) -> float:
    return float(np.mean(predict(spec, X, quantize_act) == np.asarray(y)))


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 200
    lr: float = 0.02
    momentum: float = 0.9
    batch_size: int = 16
    target_high: float = 0.8
    target_low: float = 0.0
    column_budget: float | None = 7.0
    init_bias: float = 0.1
    grad_leak: float = 0.1
    l1: float = 1e-3  # soft-threshold strength; sparse layers keep few weights below one quantization step
    # nonzero weights held at or above this fraction of the layer maximum; 3/16 keeps
    # every nonzero 4-bit level at >= 1/4 of full scale, inside the synapse's range
    min_fraction: float | None = 0.1875
    constrain_from: float = 0.5  # fraction of epochs after which min_fraction applies
    weight_noise: float = 0.06  # training-time Gaussian weight noise, std relative to the layer maximum
    seed: int = 0


def project(
    W: np.ndarray, b: np.ndarray, w_bound: float, budget: float | None, min_fraction: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Box-clip weights to ``w_bound`` and cap each column's positive and negative sums.

    The cap is ``budget`` times the layer's largest weight magnitude. The
    hardware maps that magnitude to the lowest synapse resistance, so the cap
    bounds the summed conductance each neuron column presents to its load.
    """
    A = np.clip(np.vstack([W, b[None, :]]), -w_bound, w_bound)
    if budget is not None:
        # the largest entry sets the cap, so it is held fixed; shrinking it
        # would lower the cap on every call and collapse the layer
        top = np.unravel_index(np.argmax(np.abs(A)), A.shape)
        cap = budget * abs(float(A[top]))
        fixed = np.zeros(A.shape, dtype=bool)
        fixed[top] = True
        for sign in (1.0, -1.0):
            mask = (sign * A > 0) & ~fixed
            pinned = np.where((sign * A > 0) & fixed, np.abs(A), 0.0).sum(axis=0)
            s = np.where(mask, np.abs(A), 0.0).sum(axis=0)
            room = np.maximum(cap - pinned, 0.0)
            scale = np.where(s > room, room / np.maximum(s, 1e-300), 1.0)
            A = np.where(mask, A * scale, A)
    if min_fraction:
        # magnitudes in (0, tau) go to the nearer of 0 and tau
        tau = min_fraction * float(np.abs(A).max())
        mag = np.abs(A)
        A = np.where(mag >= tau, A, np.where(mag >= 0.5 * tau, np.sign(A) * tau, 0.0))
    return A[:-1], A[-1]


def init_network(spec: NetworkSpec, settings: TrainSettings) -> NetworkSpec:
    rng = np.random.default_rng(settings.seed)
    Ws, bs = [], []
    for n_in, n_out in zip(spec.sizes[:-1], spec.sizes[1:]):
        a = np.sqrt(6.0 / (n_in + n_out))  # Glorot uniform
        Ws.append(rng.uniform(-a, a, (n_in, n_out)))
        bs.append(np.full(n_out, settings.init_bias))
    return replace(spec, weights=Ws, biases=bs, quantized=False)


def train(X, Y, spec: NetworkSpec, settings: TrainSettings = TrainSettings(), history: list | None = None) -> NetworkSpec:
    """Mini-batch momentum gradient descent on the squared error.

    ``Y`` is one-hot (or a single target column). Targets are rescaled to
    ``[target_low, target_high]`` inside the activation's range. If ``spec``
    has no weights it is initialized from ``settings.seed``. Per-epoch mean
    losses are appended to ``history`` when given.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[1] != spec.sizes[0] or Y.shape[1] != spec.sizes[-1] or X.shape[0] != Y.shape[0]:
        raise NetworkError("dataset shapes do not match network sizes")
    net = spec.copy() if spec.weights else init_network(spec, settings)
    net.quantized = False
    act = net.activation
    T = settings.target_low + (settings.target_high - settings.target_low) * Y
    rng = np.random.default_rng(settings.seed + 1)
    vel_W = [np.zeros_like(W) for W in net.weights]
    vel_b = [np.zeros_like(b) for b in net.biases]
    n = X.shape[0]
    bs = max(1, min(settings.batch_size, n))
    start_c = int(settings.constrain_from * settings.epochs)
    for epoch in range(settings.epochs):
        frac = settings.min_fraction if epoch >= start_c else None
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            used = _noisy(net, settings.weight_noise, rng) if settings.weight_noise > 0 else net
            zs, hs = forward(used, X[idx], quantize_act=False, return_all=True)
            err = hs[-1] - T[idx]
            total += 0.5 * float(np.sum(err**2))
            delta = err * act.grad(zs[-1], settings.grad_leak) / len(idx)
            for k in range(net.n_layers - 1, -1, -1):
                gW = hs[k].T @ delta
                gb = delta.sum(axis=0)
                if k > 0:
                    delta = (delta @ used.weights[k].T) * act.grad(zs[k - 1], settings.grad_leak)
                vel_W[k] = settings.momentum * vel_W[k] - settings.lr * gW
                vel_b[k] = settings.momentum * vel_b[k] - settings.lr * gb
                W = net.weights[k] + vel_W[k]
                if settings.l1 > 0:
                    W = np.sign(W) * np.maximum(np.abs(W) - settings.lr * settings.l1, 0.0)
                W, b = project(W, net.biases[k] + vel_b[k], net.bound(k), settings.column_budget, frac)
                net.weights[k], net.biases[k] = W, b
        loss = total / n
        if not np.isfinite(loss):
            raise NetworkError("training loss became non-finite; lower the learning rate")
        if history is not None:
            history.append(loss)
    return net


def _noisy(net: NetworkSpec, rel: float, rng: np.random.Generator) -> NetworkSpec:
    """Copy of ``net`` with additive weight noise scaled to each layer's largest magnitude."""
    out = net.copy()
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        s = rel * max(float(np.abs(W).max()), float(np.abs(b).max()))
        out.weights[k] = W + rng.normal(0.0, s, W.shape)
        out.biases[k] = b + rng.normal(0.0, s, b.shape)
    return out


def quantize(spec: NetworkSpec) -> NetworkSpec:
    """Round each layer's weights and bias to a uniform grid over ``[-m, m]``, ``m`` the largest magnitude.

    The grid has ``2^bits - 1`` intermediate levels plus both extremes. With
    an odd level count zero is a level, so unused synapses stay exactly OFF;
    the extreme weight is kept exactly and a second application changes
    nothing.
    """
    if not spec.weights:
        raise NetworkError("nothing to quantize: network has no weights")
    out = spec.copy()
    n = spec.weight_levels - 1
    for k, (W, b) in enumerate(zip(spec.weights, spec.biases)):
        A = np.vstack([W, b[None, :]])
        m = float(np.abs(A).max())
        if np.ptp(A) == 0.0:
            warnings.warn(f"layer {k}: all weights equal; single-level quantization", RuntimeWarning, stacklevel=2)
            Q = A.copy()
        else:
            levels = np.linspace(-m, m, n + 1)
            idx = np.rint((A + m) / (2 * m) * n).astype(int)
            Q = levels[np.clip(idx, 0, n)]
        out.weights[k], out.biases[k] = Q[:-1], Q[-1]
    out.quantized = True
    return out
