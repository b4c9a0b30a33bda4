"""Feed-forward ReLU network model: JSON loading, forward evaluation,
activation-pattern extraction, and per-pattern affine composition."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, DimensionError, ParseError, ShapeError
from .pattern import DC, OFF, ON, ActivationPattern


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Layer:
    """One affine layer: weights (out, in) and bias (out,)."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class AffineMap:
    """An affine function x -> w @ x + b."""

    w: np.ndarray
    b: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.w @ np.asarray(x, dtype=float) + self.b


@dataclass(frozen=True)
class Network:
    """ReLU classifier: hidden layers with ReLU, final layer linear (logits)."""

    input_dim: int
    input_box: np.ndarray  # (input_dim, 2), read-only
    layers: tuple[Layer, ...]
    source_sha256: str = ""

    @property
    def hidden_layers(self) -> tuple[Layer, ...]:
        return self.layers[:-1]

    @property
    def output_layer(self) -> Layer:
        return self.layers[-1]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(l.out_dim for l in self.hidden_layers)

    @property
    def num_classes(self) -> int:
        return self.output_layer.out_dim

    @property
    def num_hidden_neurons(self) -> int:
        return sum(self.hidden_sizes)


@dataclass
class ForwardTrace:
    """Forward-pass record: pre-activations per hidden layer, post-activations,
    and final logits."""

    preacts: list[np.ndarray] = field(default_factory=list)
    posts: list[np.ndarray] = field(default_factory=list)
    logits: np.ndarray | None = None


def network_from_arrays(input_box, weights, biases, source_sha256: str = "") -> Network:
    """Build a Network from raw arrays; validates the chain of shapes."""
    box = _readonly(np.asarray(input_box, dtype=float))
    if box.ndim != 2 or box.shape[1] != 2:
        raise ShapeError(f"input_box must be (d, 2), got {box.shape}")
    if np.any(box[:, 0] > box[:, 1]):
        raise BoundsError("input_box has lo > hi on some dimension")
    input_dim = box.shape[0]
    if len(weights) != len(biases):
        raise ShapeError("weights and biases count mismatch")
    if not weights:
        raise ShapeError("network needs at least one layer")
    layers = []
    prev = input_dim
    for k, (w, b) in enumerate(zip(weights, biases)):
        w = _readonly(np.atleast_2d(np.asarray(w, dtype=float)))
        b = _readonly(np.asarray(b, dtype=float).ravel())
        if w.ndim != 2:
            raise ShapeError(f"layer {k} weights must be 2-D")
        if w.shape[1] != prev:
            raise ShapeError(f"layer {k} expects input {w.shape[1]}, previous gives {prev}")
        if b.shape != (w.shape[0],):
            raise ShapeError(f"layer {k} bias length {b.shape[0]} != rows {w.shape[0]}")
        layers.append(Layer(w, b))
        prev = w.shape[0]
    if layers[-1].out_dim < 2:
        raise ShapeError("output layer must produce at least 2 logits")
    return Network(input_dim, box, tuple(layers), source_sha256)


def load_network(path: str) -> Network:
    """Load a network from JSON: {"input_dim", "input_box", "layers": [{"weights",
    "bias"}, ...]}. The file's sha256 is recorded on the returned Network."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise ParseError(f"cannot read network file {path}: {e}") from e
    sha = hashlib.sha256(raw).hexdigest()
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"network file {path} is not valid JSON: {e}") from e
    return network_from_json(obj, source_sha256=sha)


def network_from_json(obj, source_sha256: str = "") -> Network:
    if not isinstance(obj, dict):
        raise ParseError("network JSON must be an object")
    for key in ("input_dim", "input_box", "layers"):
        if key not in obj:
            raise ParseError(f"network JSON missing field {key!r}")
    try:
        box = np.asarray(obj["input_box"], dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"input_box is not numeric: {e}") from e
    if not np.all(np.isfinite(box)):
        raise BoundsError("input_box must be finite")
    layers = obj["layers"]
    if not isinstance(layers, list) or not layers:
        raise ParseError("layers must be a non-empty list")
    weights, biases = [], []
    for k, l in enumerate(layers):
        if not isinstance(l, dict) or "weights" not in l or "bias" not in l:
            raise ParseError(f"layer {k} must have weights and bias")
        try:
            w = np.asarray(l["weights"], dtype=float)
            b = np.asarray(l["bias"], dtype=float)
        except (TypeError, ValueError) as e:
            raise ParseError(f"layer {k} is not numeric: {e}") from e
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ParseError(f"layer {k} has non-finite entries")
        weights.append(w)
        biases.append(b)
    net = network_from_arrays(box, weights, biases, source_sha256)
    if net.input_dim != int(obj["input_dim"]):
        raise ShapeError(
            f"declared input_dim {obj['input_dim']} != box dimension {net.input_dim}")
    return net


def network_to_json(net: Network) -> dict:
    return {
        "input_dim": net.input_dim,
        "input_box": [[float(lo), float(hi)] for lo, hi in net.input_box],
        "layers": [
            {"weights": l.weights.tolist(), "bias": l.bias.tolist()} for l in net.layers
        ],
    }


def forward(net: Network, x) -> ForwardTrace:
    """Evaluate the network at one point, recording every intermediate value."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise DimensionError(f"expected input of shape ({net.input_dim},), got {x.shape}")
    trace = ForwardTrace()
    h = x
    for layer in net.hidden_layers:
        pre = layer.weights @ h + layer.bias
        trace.preacts.append(pre)
        h = np.maximum(pre, 0.0)
        trace.posts.append(h)
    trace.logits = net.output_layer.weights @ h + net.output_layer.bias
    return trace


def forward_batch(net: Network, xs: np.ndarray) -> np.ndarray:
    """Logits for a batch of inputs, shape (n, num_classes)."""
    h = np.asarray(xs, dtype=float)
    if h.ndim != 2 or h.shape[1] != net.input_dim:
        raise DimensionError(f"expected batch of shape (n, {net.input_dim})")
    for layer in net.hidden_layers:
        h = np.maximum(h @ layer.weights.T + layer.bias, 0.0)
    return h @ net.output_layer.weights.T + net.output_layer.bias


def pattern_of(net: Network, x) -> ActivationPattern:
    """The complete activation pattern of x: on iff pre-activation > 0."""
    trace = forward(net, x)
    return ActivationPattern.of(
        tuple(ON if v > 0.0 else OFF for v in pre) for pre in trace.preacts
    )


def affine_forms(net: Network, sigma: ActivationPattern, layer: int | None = None):
    """Per-layer affine pre-activation maps under sigma: rows of off neurons are
    zeroed before composing into the next layer; dc neurons must not feed any
    later constrained layer, which prefix structure guarantees.

    Returns the list of AffineMap per hidden layer, or just one when layer is
    given."""
    if sigma.shape != net.hidden_sizes:
        raise ShapeError("pattern shape does not match network hidden layers")
    maps: list[AffineMap] = []
    # running affine map from input to current post-activations
    w_run = np.eye(net.input_dim)
    b_run = np.zeros(net.input_dim)
    for l, hidden in enumerate(net.hidden_layers):
        w_pre = hidden.weights @ w_run
        b_pre = hidden.weights @ b_run + hidden.bias
        maps.append(AffineMap(_readonly(w_pre), _readonly(b_pre)))
        keep = np.array([1.0 if s == ON else 0.0 for s in sigma.statuses[l]])
        w_run = w_pre * keep[:, None]
        b_run = b_pre * keep
    if layer is not None:
        return maps[layer]
    return maps


def output_affine(net: Network, sigma: ActivationPattern) -> AffineMap:
    """The exact affine logit map on support(sigma) for a complete sigma."""
    if not sigma.complete:
        raise ShapeError("output affine form needs a complete pattern")
    if sigma.shape != net.hidden_sizes:
        raise ShapeError("pattern shape does not match network hidden layers")
    w_run = np.eye(net.input_dim)
    b_run = np.zeros(net.input_dim)
    for l, hidden in enumerate(net.hidden_layers):
        w_pre = hidden.weights @ w_run
        b_pre = hidden.weights @ b_run + hidden.bias
        keep = np.array([1.0 if s == ON else 0.0 for s in sigma.statuses[l]])
        w_run = w_pre * keep[:, None]
        b_run = b_pre * keep
    out = net.output_layer
    return AffineMap(_readonly(out.weights @ w_run), _readonly(out.weights @ b_run + out.bias))
