"""Activation-pattern algebra: statuses, the sub-pattern relation, support
membership, prefix-structure discipline, and halfspace extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlreadyUnconstrainedError,
    DimensionError,
    PatternStructureError,
    ShapeError,
)

ON = "on"
OFF = "off"
DC = "dc"

_STATUSES = (ON, OFF, DC)
_KEY_CHAR = {ON: "1", OFF: "0", DC: "x"}
_CHAR_KEY = {v: k for k, v in _KEY_CHAR.items()}


@dataclass(frozen=True)
class ActivationPattern:
    """Per-hidden-neuron status in {on, off, dc}, one tuple per hidden layer."""

    statuses: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        for layer in self.statuses:
            for s in layer:
                if s not in _STATUSES:
                    raise ValueError(f"bad neuron status {s!r}")

    @classmethod
    def of(cls, layers) -> "ActivationPattern":
        return cls(tuple(tuple(layer) for layer in layers))

    @classmethod
    def all_dc(cls, hidden_sizes) -> "ActivationPattern":
        return cls(tuple((DC,) * n for n in hidden_sizes))

    @classmethod
    def from_key(cls, key: str) -> "ActivationPattern":
        return cls(tuple(tuple(_CHAR_KEY[c] for c in part) for part in key.split("-")))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.statuses)

    @property
    def complete(self) -> bool:
        return all(s != DC for layer in self.statuses for s in layer)

    @property
    def num_constrained(self) -> int:
        return sum(s != DC for layer in self.statuses for s in layer)

    def constrained(self):
        """Yield (layer, neuron, status) for every non-dc neuron."""
        for l, layer in enumerate(self.statuses):
            for i, s in enumerate(layer):
                if s != DC:
                    yield l, i, s

    def key(self) -> str:
        return "-".join("".join(_KEY_CHAR[s] for s in layer) for layer in self.statuses)

    def to_json(self):
        return [list(layer) for layer in self.statuses]


@dataclass(frozen=True)
class LinRow:
    """One halfspace coeffs.x <= rhs (rel 'le') or coeffs.x < rhs (rel 'lt')."""

    coeffs: tuple[float, ...]
    rhs: float
    rel: str  # 'le' | 'lt'

    def __post_init__(self):
        if self.rel not in ("le", "lt"):
            raise ValueError(f"bad relation {self.rel!r}")

    def to_json(self):
        return {"coeffs": list(self.coeffs), "rhs": self.rhs, "rel": self.rel}

    @classmethod
    def from_json(cls, obj) -> "LinRow":
        return cls(tuple(float(c) for c in obj["coeffs"]), float(obj["rhs"]), obj["rel"])


def make_row(coeffs, rhs, rel) -> LinRow:
    return LinRow(tuple(float(c) for c in np.asarray(coeffs, dtype=float)), float(rhs), rel)


@dataclass(frozen=True)
class Polytope:
    """Conjunction of linear halfspaces over input space; empty rows = whole space."""

    rows: tuple[LinRow, ...]

    def matrices(self):
        """Return (A, b, strict_mask) with rows meaning A.x <= b (strict where masked)."""
        if not self.rows:
            return np.zeros((0, 0)), np.zeros(0), np.zeros(0, dtype=bool)
        a = np.array([r.coeffs for r in self.rows], dtype=float)
        b = np.array([r.rhs for r in self.rows], dtype=float)
        strict = np.array([r.rel == "lt" for r in self.rows])
        return a, b, strict

    def contains(self, x, strict_margin: float = 0.0) -> bool:
        """Membership with lt rows strict; strict_margin > 0 demands slack on them."""
        x = np.asarray(x, dtype=float)
        for r in self.rows:
            v = float(np.dot(r.coeffs, x))
            if r.rel == "lt":
                if not v < r.rhs - strict_margin:
                    return False
            elif not v <= r.rhs:
                return False
        return True

    def contains_batch(self, xs: np.ndarray, strict_margin: float = 0.0) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if not self.rows:
            return np.ones(len(xs), dtype=bool)
        a, b, strict = self.matrices()
        vals = xs @ a.T
        ok = np.where(strict, vals < b - strict_margin, vals <= b)
        return ok.all(axis=1)


def _check_same_shape(s1: ActivationPattern, s2: ActivationPattern):
    if s1.shape != s2.shape:
        raise ShapeError(f"pattern shapes differ: {s1.shape} vs {s2.shape}")


def is_subpattern(s1: ActivationPattern, s2: ActivationPattern) -> bool:
    """True iff every neuron constrained by s1 is constrained identically in s2."""
    _check_same_shape(s1, s2)
    for l1, l2 in zip(s1.statuses, s2.statuses):
        for a, b in zip(l1, l2):
            if a != DC and a != b:
                return False
    return True


def is_prefix_structured(sigma: ActivationPattern) -> bool:
    """True iff some frontier layer k has all layers before it fully constrained
    and all layers after it fully dc; layer k itself may be anything."""
    layers = sigma.statuses
    k = None
    for l, layer in enumerate(layers):
        if any(s == DC for s in layer):
            k = l
            break
    if k is None:
        return True  # complete
    for layer in layers[k + 1:]:
        if any(s != DC for s in layer):
            return False
    return True


def frontier_layer(sigma: ActivationPattern) -> int:
    """Index of the first hidden layer that is not fully constrained; equals the
    number of hidden layers when the pattern is complete."""
    for l, layer in enumerate(sigma.statuses):
        if any(s == DC for s in layer):
            return l
    return len(sigma.statuses)


def supports(net, sigma: ActivationPattern, x) -> bool:
    """True iff x is inside the input box and sigma is a sub-pattern of x's pattern."""
    from . import model

    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise DimensionError(f"expected input of length {net.input_dim}")
    if sigma.shape != net.hidden_sizes:
        raise ShapeError("pattern shape does not match network hidden layers")
    box = net.input_box
    if np.any(x < box[:, 0]) or np.any(x > box[:, 1]):
        return False
    return is_subpattern(sigma, model.pattern_of(net, x))


def box_rows(input_box: np.ndarray) -> list[LinRow]:
    """The 2*d closed rows of an axis-aligned box, dimension-major (hi then lo)."""
    rows = []
    d = len(input_box)
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        rows.append(make_row(e, input_box[j, 1], "le"))
        rows.append(make_row(-e, -input_box[j, 0], "le"))
    return rows


def halfspaces(net, sigma: ActivationPattern) -> Polytope:
    """Exact halfspace form of support(sigma) for a prefix-structured sigma:
    one row per constrained neuron (on rows strict) plus the input-box rows."""
    from . import model

    if sigma.shape != net.hidden_sizes:
        raise ShapeError("pattern shape does not match network hidden layers")
    if not is_prefix_structured(sigma):
        raise PatternStructureError("halfspace extraction needs a prefix-structured pattern")
    maps = model.affine_forms(net, sigma)
    rows: list[LinRow] = []
    for l, layer in enumerate(sigma.statuses):
        for i, s in enumerate(layer):
            if s == DC:
                continue
            w = maps[l].w[i]
            b = maps[l].b[i]
            if s == OFF:
                rows.append(make_row(w, -b, "le"))      # w.x + b <= 0
            else:
                rows.append(make_row(-w, b, "lt"))      # w.x + b > 0
    rows.extend(box_rows(net.input_box))
    return Polytope(tuple(rows))


def relax(sigma: ActivationPattern, layer: int, neuron: int | None = None) -> ActivationPattern:
    """Copy of sigma with one neuron (or a whole layer, neuron=None) set to dc."""
    if not 0 <= layer < len(sigma.statuses):
        raise IndexError(f"layer {layer} out of range")
    new_layers = [list(l) for l in sigma.statuses]
    target = new_layers[layer]
    if neuron is None:
        if all(s == DC for s in target):
            raise AlreadyUnconstrainedError(f"layer {layer} is already all dc")
        new_layers[layer] = [DC] * len(target)
    else:
        if not 0 <= neuron < len(target):
            raise IndexError(f"neuron {neuron} out of range in layer {layer}")
        if target[neuron] == DC:
            raise AlreadyUnconstrainedError(f"neuron ({layer},{neuron}) is already dc")
        target[neuron] = DC
    return ActivationPattern.of(new_layers)
