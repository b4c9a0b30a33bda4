"""Pattern-implication checking: decide whether an activation pattern implies
a linear property of (X, Y) over true ReLU semantics.

The satisfiability query sigma AND NOT property runs as branch-and-bound over
the unconstrained (dc) neurons: straddling neurons get the triangle relaxation,
infeasible LPs prune, and ReLU-consistent LP points become counterexample
witnesses. 'holds' means the property is proven on all of support(sigma)
intersected with the input box, under the documented tolerances.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import lp, model
from .config import DEFAULT_NODE_CAP, DEFAULT_TOLERANCES, Tolerances
from .errors import InfeasiblePattern, ResourceLimit, ShapeError
from .model import Network
from .pattern import DC, OFF, ON, ActivationPattern

HOLDS = "holds"
VIOLATED = "violated"


@dataclass(frozen=True)
class PropertyClause:
    """x_coeffs.X + y_coeffs.Y rel rhs with rel in {gt, ge}."""

    x_coeffs: tuple[float, ...]
    y_coeffs: tuple[float, ...]
    rhs: float
    rel: str = "gt"

    def __post_init__(self):
        if self.rel not in ("gt", "ge"):
            raise ValueError(f"bad relation {self.rel!r}")

    def value(self, x, y) -> float:
        return float(np.dot(self.x_coeffs, x) + np.dot(self.y_coeffs, y))

    def fails(self, x, y, tau: float) -> bool:
        """Clause counts as failing when within tau of (or past) its boundary."""
        return self.value(x, y) < self.rhs + tau

    def to_json(self):
        return {"x_coeffs": list(self.x_coeffs), "y_coeffs": list(self.y_coeffs),
                "rhs": self.rhs, "rel": self.rel}

    @classmethod
    def from_json(cls, obj) -> "PropertyClause":
        return cls(tuple(float(v) for v in obj["x_coeffs"]),
                   tuple(float(v) for v in obj["y_coeffs"]),
                   float(obj["rhs"]), obj.get("rel", "gt"))


@dataclass(frozen=True)
class LinearProperty:
    """Conjunction of clauses; empty conjunction is trivially true."""

    clauses: tuple[PropertyClause, ...]

    def to_json(self):
        return {"clauses": [c.to_json() for c in self.clauses]}

    @classmethod
    def from_json(cls, obj) -> "LinearProperty":
        return cls(tuple(PropertyClause.from_json(c) for c in obj["clauses"]))


def make_clause(x_coeffs, y_coeffs, rhs: float, rel: str = "gt") -> PropertyClause:
    return PropertyClause(
        tuple(float(v) for v in np.asarray(x_coeffs, dtype=float)),
        tuple(float(v) for v in np.asarray(y_coeffs, dtype=float)),
        float(rhs), rel)


def dominance_property(input_dim: int, num_classes: int, target: int,
                       rivals=None) -> LinearProperty:
    """Y_target > Y_j for each rival j (default: every other class)."""
    if not 0 <= target < num_classes:
        raise ValueError(f"target class {target} out of range")
    if rivals is None:
        rivals = [j for j in range(num_classes) if j != target]
    clauses = []
    for j in rivals:
        if not 0 <= j < num_classes or j == target:
            raise ValueError(f"bad rival class {j}")
        y = np.zeros(num_classes)
        y[target] = 1.0
        y[j] = -1.0
        clauses.append(make_clause(np.zeros(input_dim), y, 0.0, "gt"))
    return LinearProperty(tuple(clauses))


@dataclass
class NeuronBounds:
    """Per hidden layer: raw pre-activation intervals from interval arithmetic
    under the pattern's constraints, and status-clipped post intervals."""

    pre: list[np.ndarray]   # (n_l, 2) raw interval on w.h_prev + b
    post: list[np.ndarray]  # (n_l, 2) after status clipping and ReLU


def bound_propagate(net: Network, sigma: ActivationPattern) -> NeuronBounds:
    """Layer-by-layer interval arithmetic over the input box; off forces post
    [0,0], on keeps the raw upper end. Contradictory intervals (on with hi < 0,
    off with lo > 0) mean the pattern supports nothing."""
    if sigma.shape != net.hidden_sizes:
        raise ShapeError("pattern shape does not match network hidden layers")
    lo = net.input_box[:, 0].copy()
    hi = net.input_box[:, 1].copy()
    pre_list, post_list = [], []
    for l, layer in enumerate(net.hidden_layers):
        w = layer.weights
        wp = np.maximum(w, 0.0)
        wm = np.minimum(w, 0.0)
        p_lo = wp @ lo + wm @ hi + layer.bias
        p_hi = wp @ hi + wm @ lo + layer.bias
        pre_list.append(np.column_stack([p_lo, p_hi]))
        q_lo = np.maximum(p_lo, 0.0)
        q_hi = np.maximum(p_hi, 0.0)
        for i, s in enumerate(sigma.statuses[l]):
            if s == OFF:
                if p_lo[i] > 0.0:
                    raise InfeasiblePattern(
                        f"off neuron ({l},{i}) has pre-activation lower bound {p_lo[i]} > 0")
                q_lo[i] = 0.0
                q_hi[i] = 0.0
            elif s == ON:
                if p_hi[i] < 0.0:
                    raise InfeasiblePattern(
                        f"on neuron ({l},{i}) has pre-activation upper bound {p_hi[i]} < 0")
                q_hi[i] = p_hi[i]
        post_list.append(np.column_stack([q_lo, q_hi]))
        lo, hi = post_list[-1][:, 0], post_list[-1][:, 1]
    return NeuronBounds(pre_list, post_list)


@dataclass
class CheckStats:
    nodes: int = 0
    lp_calls: int = 0
    ms: float = 0.0
    pruned_leaves: int = 0  # feasible leaves whose witness failed validation


@dataclass
class CheckResult:
    status: str
    witness: np.ndarray | None = None
    stats: CheckStats = field(default_factory=CheckStats)

    def to_json(self):
        return {
            "status": self.status,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
            "stats": {"nodes": self.stats.nodes, "lp_calls": self.stats.lp_calls,
                      "ms": self.stats.ms},
        }


def validate_witness(net: Network, sigma: ActivationPattern, prop: LinearProperty,
                     x, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """True iff x is in the box, satisfies sigma under closed semantics within
    tau_cx, and some property clause fails by more than -tau_cx."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        return False
    box = net.input_box
    if np.any(x < box[:, 0]) or np.any(x > box[:, 1]):
        return False
    trace = model.forward(net, x)
    for l, layer in enumerate(sigma.statuses):
        for i, s in enumerate(layer):
            v = trace.preacts[l][i]
            if s == ON and v < -tol.tau_cx:
                return False
            if s == OFF and v > tol.tau_cx:
                return False
    return any(c.fails(x, trace.logits, tol.tau_cx) for c in prop.clauses)


class _Searcher:
    """One branch-and-bound run for sigma AND NOT(clause)."""

    def __init__(self, net, sigma, prop, clause, tol, node_cap, stats):
        self.net = net
        self.sigma = sigma
        self.prop = prop  # full property, used only for witness validation
        self.clause = clause
        self.tol = tol
        self.node_cap = node_cap
        self.stats = stats
        self.d = net.input_dim
        self.sizes = net.hidden_sizes
        self.offsets = []
        off = self.d
        for n in self.sizes:
            self.offsets.append(off)
            off += n
        self.nvars = off

    def run(self) -> np.ndarray | None:
        """Witness input for sigma AND NOT(clause), or None when UNSAT."""
        return self._search(self.sigma)

    def _search(self, overlay: ActivationPattern) -> np.ndarray | None:
        self.stats.nodes += 1
        if self.stats.nodes > self.node_cap:
            raise ResourceLimit(
                f"branch-and-bound exceeded {self.node_cap} nodes", nodes=self.stats.nodes)
        try:
            nb = bound_propagate(self.net, overlay)
        except InfeasiblePattern:
            return None
        straddle = self._straddling(overlay, nb)
        out = self._solve_node(overlay, nb, straddle)
        if out.status != lp.OPTIMAL:
            return None
        witness = self._extract_witness(out.point, nb, straddle)
        if witness is not None:
            return witness
        if not straddle:
            # exact leaf whose point failed validation: one tightened retry
            out2 = self._solve_node(overlay, nb, straddle, extra_margin=10 * self.tol.tau_lp)
            if out2.status == lp.OPTIMAL:
                witness = self._extract_witness(out2.point, nb, straddle)
                if witness is not None:
                    return witness
            self.stats.pruned_leaves += 1
            return None
        l, i = self._pick_branch(straddle, nb)
        for status in (OFF, ON):  # off child first
            child = [list(row) for row in overlay.statuses]
            child[l][i] = status
            witness = self._search(ActivationPattern.of(child))
            if witness is not None:
                return witness
        return None

    def _straddling(self, overlay, nb):
        out = []
        for l, layer in enumerate(overlay.statuses):
            for i, s in enumerate(layer):
                if s == DC and nb.pre[l][i, 0] < 0.0 < nb.pre[l][i, 1]:
                    out.append((l, i))
        return out

    def _pick_branch(self, straddle, nb):
        best, best_score = straddle[0], -1.0
        for l, i in straddle:
            lo, hi = nb.pre[l][i]
            score = min(-lo, hi)
            if score > best_score:
                best, best_score = (l, i), score
        return best

    def _solve_node(self, overlay, nb, straddle, extra_margin: float = 0.0):
        """Feasibility LP over x and per-neuron post variables."""
        d = self.d
        rows = []
        var_bounds = [(float(lo), float(hi)) for lo, hi in self.net.input_box]
        for l in range(len(self.sizes)):
            for i in range(self.sizes[l]):
                var_bounds.append((float(nb.post[l][i, 0]), float(nb.post[l][i, 1])))
        straddle_set = set(straddle)

        def row_template():
            return np.zeros(self.nvars)

        def prev_slice(l):
            if l == 0:
                return slice(0, d)
            return slice(self.offsets[l - 1], self.offsets[l - 1] + self.sizes[l - 1])

        for l, layer in enumerate(self.net.hidden_layers):
            ps = prev_slice(l)
            for i in range(self.sizes[l]):
                w = layer.weights[i]
                b = float(layer.bias[i])
                s_assumed = self.sigma.statuses[l][i]
                s_now = overlay.statuses[l][i]
                h_idx = self.offsets[l] + i
                if s_now == OFF:
                    r = row_template()
                    r[ps] = w
                    rows.append((r, -b - extra_margin, "le"))  # pre <= 0
                    continue
                if s_now == ON:
                    margin = self.tol.delta_strict if s_assumed == ON else 0.0
                    r = row_template()
                    r[ps] = -w
                    rows.append((r, b - margin - extra_margin, "le"))  # pre >= margin
                    r = row_template()
                    r[ps] = -w
                    r[h_idx] = 1.0
                    rows.append((r, b, "eq"))  # h = pre
                    continue
                lo, hi = nb.pre[l][i]
                if (l, i) in straddle_set:
                    r = row_template()
                    r[ps] = w
                    r[h_idx] = -1.0
                    rows.append((r, -b, "le"))  # h >= pre
                    r = row_template()
                    r[ps] = -hi * w
                    r[h_idx] = hi - lo
                    rows.append((r, hi * (b - lo), "le"))  # triangle upper face
                elif lo >= 0.0:
                    r = row_template()
                    r[ps] = -w
                    r[h_idx] = 1.0
                    rows.append((r, b, "eq"))  # stably on: h = pre
                # stably off: post bounds already force h = 0

        # NOT(clause): value <= rhs, closed complement
        out_w = self.net.output_layer.weights
        out_b = self.net.output_layer.bias
        yw = np.asarray(self.clause.y_coeffs) @ out_w
        r = row_template()
        r[:d] = self.clause.x_coeffs
        r[self.offsets[-1]:] = yw
        rhs = self.clause.rhs - float(np.dot(self.clause.y_coeffs, out_b)) - extra_margin
        rows.append((r, rhs, "le"))

        self.stats.lp_calls += 1
        return lp.solve(lp.make_lp(np.zeros(self.nvars), rows, var_bounds))

    def _extract_witness(self, point, nb, straddle):
        """ReLU-consistency screen, then full forward-pass validation."""
        d = self.d
        h_prev = point[:d]
        for l, layer in enumerate(self.net.hidden_layers):
            pre = layer.weights @ h_prev + layer.bias
            h = point[self.offsets[l]: self.offsets[l] + self.sizes[l]]
            for li in range(self.sizes[l]):
                if abs(h[li] - max(pre[li], 0.0)) > self.tol.tau_cx:
                    return None
            h_prev = h
        x = np.clip(point[:d], self.net.input_box[:, 0], self.net.input_box[:, 1])
        if validate_witness(self.net, self.sigma, self.prop, x, self.tol):
            return x
        return None


def check_implies(net: Network, sigma: ActivationPattern, prop: LinearProperty,
                  tol: Tolerances = DEFAULT_TOLERANCES,
                  node_cap: int = DEFAULT_NODE_CAP) -> CheckResult:
    """Decide sigma(X) => prop(X, F(X)) on the input box.

    Conjunctions run one branch-and-bound per negated clause; the first
    counterexample wins. A pattern supporting nothing satisfies any property.
    """
    if sigma.shape != net.hidden_sizes:
        raise ShapeError("pattern shape does not match network hidden layers")
    stats = CheckStats()
    t0 = time.perf_counter()
    try:
        for clause in prop.clauses:
            # validation inside the searcher is against the single negated
            # clause: a witness for one clause falsifies the conjunction
            single = LinearProperty((clause,))
            witness = _Searcher(net, sigma, single, clause, tol, node_cap, stats).run()
            if witness is not None:
                return CheckResult(VIOLATED, witness, stats)
        return CheckResult(HOLDS, None, stats)
    finally:
        stats.ms = (time.perf_counter() - t0) * 1000.0
