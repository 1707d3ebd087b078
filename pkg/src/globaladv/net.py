"""Dense feed-forward classifiers: forward pass, pair losses and input gradients.

Every numerical entry point accepts a single input vector of shape ``(D,)`` or
a batch of shape ``(n, D)`` and returns results of matching rank.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

FORMAT_VERSION = 1
PROB_FLOOR = 1e-12
LOSS_CEILING = -math.log(PROB_FLOOR)  # ~27.63, the largest finite loss
ACTIVATIONS = ("relu", "identity")


class ShapeError(ValueError):
    pass


class ModelFormatError(ValueError):
    """Raised when a model file cannot be parsed into a valid network."""

    def __init__(self, message: str, layer: int | None = None):
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer


@dataclass(frozen=True)
class DenseLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "relu"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ShapeError(f"bias shape {b.shape} does not match {w.shape[0]} outputs")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Network:
    layers: tuple[DenseLayer, ...]
    input_dim: int
    class_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if not self.layers:
            raise ShapeError("network needs at least one layer")
        width = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.in_dim != width:
                raise ShapeError(f"layer {i} expects {layer.in_dim} inputs, previous width is {width}")
            width = layer.out_dim
        if width < 2:
            raise ShapeError("final layer must have at least 2 classes")
        if len(self.class_names) != width:
            raise ShapeError(f"{len(self.class_names)} class names for {width} outputs")

    @property
    def n_classes(self) -> int:
        return self.layers[-1].out_dim


@dataclass
class ForwardTrace:
    pre_activations: list[np.ndarray]
    post_activations: list[np.ndarray]
    logits: np.ndarray
    probabilities: np.ndarray


@dataclass(frozen=True)
class AdversarialConfig:
    pgd_steps: int = 30
    step_size: float = 0.01
    epsilon: float = 0.1
    mix_ratio: float = 1.0  # adversarial loss weight relative to clean loss

    def __post_init__(self):
        if self.pgd_steps < 1:
            raise ValueError("pgd_steps must be >= 1")
        if self.mix_ratio <= 0:
            raise ValueError("mix_ratio must be positive")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 0.1
    rng_seed: int = 0
    adversarial: AdversarialConfig | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


def init_network(
    sizes: Sequence[int],
    class_names: Sequence[str] | None = None,
    seed: int = 0,
) -> Network:
    """He-initialised relu MLP with an identity output layer.

    ``sizes`` lists every width from input to output, e.g. ``(2, 32, 32, 3)``.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = rng.standard_normal((n_out, n_in)) * math.sqrt(2.0 / n_in)
        act = "identity" if i == len(sizes) - 2 else "relu"
        layers.append(DenseLayer(w, np.zeros(n_out), act))
    if class_names is None:
        class_names = [f"class_{i}" for i in range(sizes[-1])]
    return Network(tuple(layers), sizes[0], tuple(class_names))


def _as_batch(net: Network, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ShapeError(f"expected input of width {net.input_dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    return x, single


def _logits_batch(net: Network, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    pre = []
    a = x
    for layer in net.layers:
        z = a @ layer.weights.T + layer.bias
        pre.append(z)
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return a, pre


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def forward(net: Network, x) -> ForwardTrace:
    """Full forward pass, keeping per-layer activations."""
    xb, single = _as_batch(net, x)
    logits, pre = _logits_batch(net, xb)
    post = [np.maximum(z, 0.0) if l.activation == "relu" else z for l, z in zip(net.layers, pre)]
    probs = np.exp(_log_softmax(logits))
    if single:
        pre = [z[0] for z in pre]
        post = [a[0] for a in post]
        logits, probs = logits[0], probs[0]
    return ForwardTrace(pre, post, logits, probs)


def logits(net: Network, x) -> np.ndarray:
    xb, single = _as_batch(net, x)
    out, _ = _logits_batch(net, xb)
    return out[0] if single else out


def predict_class(net: Network, x):
    """Argmax of the logits; ``np.argmax`` already breaks ties toward the lowest index."""
    z = logits(net, x)
    return int(np.argmax(z)) if z.ndim == 1 else np.argmax(z, axis=1)


def _backprop_input(net: Network, pre: list[np.ndarray], dlogits: np.ndarray) -> np.ndarray:
    delta = dlogits
    for i in range(len(net.layers) - 1, -1, -1):
        grad = delta @ net.layers[i].weights
        if i == 0:
            return grad
        if net.layers[i - 1].activation == "relu":
            grad = grad * (pre[i - 1] > 0)
        delta = grad
    raise AssertionError("unreachable")


def label_loss(net: Network, x, labels):
    """Cross-entropy of softmax(logits(x)) against hard labels, with the probability floored at 1e-12."""
    xb, single = _as_batch(net, x)
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    z, _ = _logits_batch(net, xb)
    nll = -_log_softmax(z)[np.arange(len(xb)), y]
    loss = np.minimum(nll, LOSS_CEILING)
    return float(loss[0]) if single else loss


def label_loss_grad(net: Network, x, labels) -> np.ndarray:
    """Gradient of :func:`label_loss` with respect to the input.

    Rows whose loss sits on the clamp ceiling have zero gradient, which is
    the exact derivative of the clamped loss.
    """
    xb, single = _as_batch(net, x)
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    z, pre = _logits_batch(net, xb)
    logp = _log_softmax(z)
    rows = np.arange(len(xb))
    dlogits = np.exp(logp)
    dlogits[rows, y] -= 1.0
    dlogits[-logp[rows, y] > LOSS_CEILING] = 0.0
    g = _backprop_input(net, pre, dlogits)
    return g[0] if single else g


class HardLabelCE:
    """Cross-entropy of the first input's softmax against the second input's predicted class.

    The partner's label is a piecewise-constant function of the partner, so
    the gradient with respect to the second argument is identically zero.
    """

    name = "hard_ce"

    def value(self, net, x1, x2):
        return label_loss(net, x1, predict_class(net, x2))

    def grad(self, net, x1, x2, which="first"):
        if which == "first":
            return label_loss_grad(net, x1, predict_class(net, x2))
        if which == "second":
            _as_batch(net, x1)
            xb, single = _as_batch(net, x2)
            return np.zeros(net.input_dim) if single else np.zeros_like(xb)
        raise ValueError(f"which must be 'first' or 'second', got {which!r}")


class SymmetricKL:
    """KL(p1 || p2) + KL(p2 || p1) between the two softmax outputs."""

    name = "sym_kl"

    def _parts(self, net, x1, x2):
        b1, single = _as_batch(net, x1)
        b2, _ = _as_batch(net, x2)
        z1, pre1 = _logits_batch(net, b1)
        z2, pre2 = _logits_batch(net, b2)
        return single, _log_softmax(z1), _log_softmax(z2), pre1, pre2

    def value(self, net, x1, x2):
        single, l1, l2, _, _ = self._parts(net, x1, x2)
        v = ((np.exp(l1) - np.exp(l2)) * (l1 - l2)).sum(axis=1)
        return float(v[0]) if single else v

    def grad(self, net, x1, x2, which="first"):
        if which not in ("first", "second"):
            raise ValueError(f"which must be 'first' or 'second', got {which!r}")
        single, l1, l2, pre1, pre2 = self._parts(net, x1, x2)
        if which == "second":
            l1, l2, pre1 = l2, l1, pre2
        p1, p2 = np.exp(l1), np.exp(l2)
        kl = (p1 * (l1 - l2)).sum(axis=1, keepdims=True)
        dlogits = p1 * ((l1 - l2) - kl) + p1 - p2
        g = _backprop_input(net, pre1, dlogits)
        return g[0] if single else g


DEFAULT_LOSS = HardLabelCE()


def pair_loss(net: Network, x1, x2, loss=DEFAULT_LOSS):
    return loss.value(net, x1, x2)


def pair_loss_grad(net: Network, x1, x2, which: str = "first", loss=DEFAULT_LOSS) -> np.ndarray:
    return loss.grad(net, x1, x2, which)


def finite_diff_grad(net: Network, x1, x2, which: str = "first", h: float = 1e-4, loss=DEFAULT_LOSS) -> np.ndarray:
    """Central-difference gradient of the pair loss, one coordinate at a time."""
    if h <= 0:
        raise ValueError("h must be positive")
    x1 = np.array(x1, dtype=np.float64)
    x2 = np.array(x2, dtype=np.float64)
    if x1.ndim != 1:
        raise ShapeError("finite_diff_grad works on single input vectors")
    target = x1 if which == "first" else x2
    grad = np.zeros_like(target)
    for i in range(target.size):
        orig = target[i]
        target[i] = orig + h
        up = loss.value(net, x1, x2)
        target[i] = orig - h
        down = loss.value(net, x1, x2)
        target[i] = orig
        grad[i] = (up - down) / (2 * h)
    return grad


# -- serialization ----------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _float_list(values) -> str:
    return "[" + ", ".join(_fmt(v) for v in np.ravel(values)) + "]"


def save_model(net: Network, path) -> None:
    """Write a JSON model file; floats carry 17 significant digits so reloads are bit-exact."""
    lines = [
        "{",
        f'  "format_version": {FORMAT_VERSION},',
        f'  "input_dim": {net.input_dim},',
        f'  "class_names": {json.dumps(list(net.class_names))},',
        '  "layers": [',
    ]
    for i, layer in enumerate(net.layers):
        sep = "," if i < len(net.layers) - 1 else ""
        lines += [
            "    {",
            f'      "activation": {json.dumps(layer.activation)},',
            f'      "rows": {layer.out_dim},',
            f'      "cols": {layer.in_dim},',
            f'      "weights": {_float_list(layer.weights)},',
            f'      "bias": {_float_list(layer.bias)}',
            "    }" + sep,
        ]
    lines += ["  ]", "}", ""]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def _parse_layer(i: int, spec) -> DenseLayer:
    try:
        rows, cols = int(spec["rows"]), int(spec["cols"])
        act = spec["activation"]
        w = np.asarray(spec["weights"], dtype=np.float64)
        b = np.asarray(spec["bias"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed layer entry ({exc})", layer=i) from exc
    if w.size != rows * cols:
        raise ModelFormatError(f"{w.size} weights for a {rows}x{cols} matrix", layer=i)
    if b.shape != (rows,):
        raise ModelFormatError(f"bias has {b.size} entries, expected {rows}", layer=i)
    if act not in ACTIVATIONS:
        raise ModelFormatError(f"unknown activation {act!r}", layer=i)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise ModelFormatError("non-finite parameter", layer=i)
    return DenseLayer(w.reshape(rows, cols), b, act)


def load_model(path) -> Network:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a valid model document ({exc})") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format_version {doc.get('format_version')!r}")
    try:
        input_dim = int(doc["input_dim"])
        class_names = [str(c) for c in doc["class_names"]]
        raw_layers = list(doc["layers"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: missing or malformed header field ({exc})") from exc
    layers = [_parse_layer(i, spec) for i, spec in enumerate(raw_layers)]
    if not layers:
        raise ModelFormatError(f"{path}: no layers")
    width = input_dim
    for i, layer in enumerate(layers):
        if layer.in_dim != width:
            raise ModelFormatError(f"expects {layer.in_dim} inputs but previous width is {width}", layer=i)
        width = layer.out_dim
    if len(class_names) != width:
        raise ModelFormatError(f"{path}: {len(class_names)} class names for {width} outputs")
    return Network(tuple(layers), input_dim, tuple(class_names))
