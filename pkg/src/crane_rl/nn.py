"""Dense ReLU networks in numpy: init, backprop, Adam, mini-batch fitting, MLPv1 files.

Weights are stored ``(fan_out, fan_in)`` so a batch ``X`` of shape
``(n, fan_in)`` maps through ``X @ W.T + b``.  A model optionally carries
per-feature standardization; :func:`mlp_forward` applies it on the way in
and undoes it on the way out, while training and gradients work in the
standardized space.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ACTIVATIONS = ("identity", "tanh")
MAGIC = "MLPV1"


class ShapeError(ValueError):
    pass


class ModelFormatError(ValueError):
    """Base class for unreadable model files."""


class VersionError(ModelFormatError):
    pass


class ChecksumError(ModelFormatError):
    pass


class CorruptionError(ModelFormatError):
    pass


@dataclass
class MlpModel:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "identity"
    x_mean: np.ndarray | None = None
    x_scale: np.ndarray | None = None
    y_mean: np.ndarray | None = None
    y_scale: np.ndarray | None = None

    def __post_init__(self):
        sizes = self.layer_sizes
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("need one weight matrix and bias per layer transition")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ShapeError(f"layer {i}: got W{w.shape} b{b.shape} for sizes {sizes}")
        if self.output_activation not in ACTIVATIONS:
            raise ShapeError(f"unknown output activation {self.output_activation!r}")
        n_in, n_out = sizes[0], sizes[-1]
        if self.x_mean is None:
            self.x_mean = np.zeros(n_in)
        if self.x_scale is None:
            self.x_scale = np.ones(n_in)
        if self.y_mean is None:
            self.y_mean = np.zeros(n_out)
        if self.y_scale is None:
            self.y_scale = np.ones(n_out)
        for name, n in (("x_mean", n_in), ("x_scale", n_in), ("y_mean", n_out), ("y_scale", n_out)):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (n,):
                raise ShapeError(f"{name} must have shape ({n},), got {v.shape}")
            setattr(self, name, v)

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        """Parameter arrays in file order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.output_activation,
            self.x_mean.copy(), self.x_scale.copy(), self.y_mean.copy(), self.y_scale.copy(),
        )

    def set_standardization(self, x: np.ndarray, y: np.ndarray) -> None:
        """Fit per-feature z-scores; constant features keep unit scale."""
        self.x_mean = x.mean(axis=0)
        self.x_scale = _safe_std(x)
        self.y_mean = y.mean(axis=0)
        self.y_scale = _safe_std(y)


def _safe_std(a: np.ndarray) -> np.ndarray:
    s = a.std(axis=0)
    return np.where(s > 0, s, 1.0)


def mlp_init(layer_sizes, output_activation: str = "identity", rng: np.random.Generator | None = None) -> MlpModel:
    """He-uniform hidden layers, Xavier-uniform output layer, zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ShapeError(f"invalid layer sizes {layer_sizes}")
    rng = np.random.default_rng() if rng is None else rng
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        if i < len(sizes) - 2:
            bound = math.sqrt(6.0 / fan_in)
        else:
            bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases, output_activation)


def _as_batch(m: MlpModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != m.n_in:
        raise ShapeError(f"expected input width {m.n_in}, got shape {x.shape}")
    return x2, single


def forward_core(m: MlpModel, xn: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Standardized-space forward pass on a batch.

    Returns the output and a cache holding every layer input plus the final
    output, which :func:`backprop` consumes.
    """
    cache = [xn]
    h = xn
    last = len(m.weights) - 1
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        z = h @ w.T + b
        if i < last:
            h = np.maximum(z, 0.0)
        elif m.output_activation == "tanh":
            h = np.tanh(z)
        else:
            h = z
        cache.append(h)
    return h, cache


def backprop(m: MlpModel, cache: list[np.ndarray], grad_out: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Chain rule from dL/d(output) back through the network.

    Returns gradients in :meth:`MlpModel.parameters` order and dL/d(input)
    in standardized input coordinates.
    """
    n_layers = len(m.weights)
    g = grad_out
    if m.output_activation == "tanh":
        g = g * (1.0 - cache[-1] ** 2)
    grads: list[np.ndarray] = [None] * (2 * n_layers)  # type: ignore[list-item]
    for i in range(n_layers - 1, -1, -1):
        h_in = cache[i]
        grads[2 * i] = g.T @ h_in
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ m.weights[i]
        if i > 0:
            g = g * (cache[i] > 0)
    return grads, g


def mlp_forward(m: MlpModel, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of rows."""
    x2, single = _as_batch(m, x)
    out, _ = forward_core(m, (x2 - m.x_mean) / m.x_scale)
    y = out * m.y_scale + m.y_mean
    return y[0] if single else y


def mlp_backward(m: MlpModel, x, target) -> tuple[list[np.ndarray], float]:
    """Mean-squared-error loss and its parameter gradients.

    The loss averages over every output element of the batch and is
    measured in standardized target units (identical to raw units for a
    model without standardization).
    """
    x2, _ = _as_batch(m, x)
    t = np.asarray(target, dtype=np.float64).reshape(x2.shape[0], -1)
    if t.shape[1] != m.n_out:
        raise ShapeError(f"expected target width {m.n_out}, got {t.shape[1]}")
    out, cache = forward_core(m, (x2 - m.x_mean) / m.x_scale)
    resid = out - (t - m.y_mean) / m.y_scale
    loss = float(np.mean(resid ** 2))
    grads, _ = backprop(m, cache, 2.0 * resid / resid.size)
    return grads, loss


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0

    @classmethod
    def for_model(cls, model: MlpModel, learning_rate: float = 1e-3, **kw) -> "AdamState":
        params = model.parameters()
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params],
                   learning_rate=learning_rate, **kw)


def adam_step(model: MlpModel, grads: list[np.ndarray], s: AdamState) -> tuple[MlpModel, AdamState]:
    """One bias-corrected Adam update, applied in place."""
    params = model.parameters()
    if len(grads) != len(params):
        raise ShapeError(f"expected {len(params)} gradient arrays, got {len(grads)}")
    s.step += 1
    c1 = 1.0 - s.beta1 ** s.step
    c2 = 1.0 - s.beta2 ** s.step
    for p, g, m, v in zip(params, grads, s.m, s.v):
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= s.beta1
        m += (1.0 - s.beta1) * g
        v *= s.beta2
        v += (1.0 - s.beta2) * g * g
        p -= s.learning_rate * (m / c1) / (np.sqrt(v / c2) + s.epsilon)
    return model, s


def fit(model: MlpModel, inputs, targets, epochs: int = 500, batch_size: int = 64,
        state: AdamState | None = None, rng: np.random.Generator | None = None,
        standardize: bool = True, cosine_decay: bool = False) -> tuple[MlpModel, list[float]]:
    """Mini-batch Adam training with per-epoch reshuffling.

    Trains a private copy; ``model`` is left untouched.  Returns the trained
    model and the mean training loss of each epoch.  With ``cosine_decay``
    the learning rate is annealed from its initial value towards zero over
    the run, one step per epoch.
    """
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if len(x) == 0:
        raise ValueError("cannot fit on an empty dataset")
    if len(x) != len(y):
        raise ShapeError(f"{len(x)} inputs but {len(y)} targets")
    m = model.copy()
    if standardize:
        m.set_standardization(x, y)
    s = AdamState.for_model(m) if state is None else state
    rng = np.random.default_rng(0) if rng is None else rng
    xn = (x - m.x_mean) / m.x_scale
    yn = (y - m.y_mean) / m.y_scale
    n = len(x)
    history = []
    lr0 = s.learning_rate
    for epoch in range(epochs):
        if cosine_decay:
            s.learning_rate = 0.5 * lr0 * (1.0 + math.cos(math.pi * epoch / epochs))
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            out, cache = forward_core(m, xn[idx])
            resid = out - yn[idx]
            total += float(np.sum(resid ** 2))
            grads, _ = backprop(m, cache, 2.0 * resid / resid.size)
            adam_step(m, grads, s)
        history.append(total / y.size)
    s.learning_rate = lr0
    return m, history


def _fmt(v: np.ndarray) -> str:
    return " ".join(format(float(x), ".17g") for x in v)


def save_model(m: MlpModel, path) -> None:
    payload = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in m.parameters())
    header = "\n".join([
        MAGIC,
        "layers " + " ".join(str(s) for s in m.layer_sizes),
        "output " + m.output_activation,
        "x_mean " + _fmt(m.x_mean),
        "x_scale " + _fmt(m.x_scale),
        "y_mean " + _fmt(m.y_mean),
        "y_scale " + _fmt(m.y_scale),
        f"payload {len(payload) // 8}",
    ]) + "\n"
    Path(path).write_bytes(header.encode("ascii") + payload + struct.pack("<I", zlib.crc32(payload)))


def load_model(path) -> MlpModel:
    raw = Path(path).read_bytes()
    lines = []
    pos = 0
    for _ in range(8):
        end = raw.find(b"\n", pos)
        if end < 0:
            raise CorruptionError("truncated header")
        lines.append(raw[pos:end].decode("ascii", errors="replace"))
        pos = end + 1
        if len(lines) == 1 and lines[0] != MAGIC:
            raise VersionError(f"bad magic {lines[0][:16]!r}, expected {MAGIC}")
    fields = {}
    for line in lines[1:]:
        key, _, rest = line.partition(" ")
        fields[key] = rest.split()
    try:
        sizes = [int(s) for s in fields["layers"]]
        activation = fields["output"][0]
        stats = {k: np.array([float(v) for v in fields[k]]) for k in ("x_mean", "x_scale", "y_mean", "y_scale")}
        n_floats = int(fields["payload"][0])
    except (KeyError, IndexError, ValueError) as exc:
        raise CorruptionError(f"malformed header: {exc}") from exc
    expected = sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))
    if n_floats != expected:
        raise CorruptionError(f"payload holds {n_floats} floats, layer sizes need {expected}")
    body = raw[pos:]
    if len(body) != 8 * n_floats + 4:
        raise CorruptionError(f"expected {8 * n_floats + 4} payload bytes, found {len(body)}")
    payload, (crc,) = body[:-4], struct.unpack("<I", body[-4:])
    if zlib.crc32(payload) != crc:
        raise ChecksumError("payload CRC32 mismatch")
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    weights, biases = [], []
    k = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[k:k + fan_in * fan_out].reshape(fan_out, fan_in).copy())
        k += fan_in * fan_out
        biases.append(flat[k:k + fan_out].copy())
        k += fan_out
    try:
        return MlpModel(sizes, weights, biases, activation, **stats)
    except ShapeError as exc:
        raise CorruptionError(str(exc)) from exc
