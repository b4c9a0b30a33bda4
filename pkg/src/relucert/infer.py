"""Region inference: greedy pattern minimization, the baseline convex-region
construction, and the interpolant-based construction with logit-factor.

Both constructions output a RegionCertificate whose soundness contract is:
every input satisfying the pattern halfspaces and the extra rows satisfies the
dominance property at the network output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model, verify
from .config import DEFAULT_NODE_CAP, DEFAULT_TOLERANCES, Tolerances
from .errors import (
    DegenerateMarginError,
    IncompletePatternError,
    InternalError,
    PreconditionError,
    RangeError,
)
from .model import Network
from .pattern import DC, ActivationPattern, LinRow, Polytope, halfspaces, make_row
from .verify import HOLDS, LinearProperty, check_implies, make_clause

MODE_BASELINE_MINIMAL = "baseline-minimal"
MODE_BASELINE_AFFINE = "baseline-affine"
MODE_INTERPOLANT = "interpolant"


@dataclass(frozen=True)
class DominanceProperty:
    """P(Y) = for every rival j: Y_target > Y_j."""

    target: int
    rivals: tuple[int, ...]

    def __post_init__(self):
        if not self.rivals:
            raise ValueError("rivals must be nonempty")
        if self.target in self.rivals:
            raise ValueError("target cannot be its own rival")

    @classmethod
    def for_net(cls, net: Network, target: int, rivals=None) -> "DominanceProperty":
        if not 0 <= target < net.num_classes:
            raise RangeError(f"target class {target} out of range")
        if rivals is None:
            rivals = [j for j in range(net.num_classes) if j != target]
        for j in rivals:
            if not 0 <= j < net.num_classes:
                raise RangeError(f"rival class {j} out of range")
        return cls(int(target), tuple(int(j) for j in rivals))

    def to_linear(self, net: Network) -> LinearProperty:
        return verify.dominance_property(net.input_dim, net.num_classes,
                                         self.target, self.rivals)

    def to_json(self):
        return {"target": self.target, "rivals": list(self.rivals)}

    @classmethod
    def from_json(cls, obj) -> "DominanceProperty":
        return cls(int(obj["target"]), tuple(int(j) for j in obj["rivals"]))


@dataclass(frozen=True)
class InterpolantSpec:
    """Per-rival affine separators dW_j.x + db_j with slack epsilons, derived
    from the seed's cell; logit_factor in (0,1) scales the seed margins."""

    target: int
    rivals: tuple[int, ...]
    dw: np.ndarray        # (n_rivals, input_dim)
    db: np.ndarray        # (n_rivals,)
    epsilons: tuple[float, ...]
    logit_factor: float

    def to_linear(self, net: Network) -> LinearProperty:
        """I(X, Y): for every rival j, Y_target - Y_j > dW_j.X + db_j - eps_j."""
        clauses = []
        for k, j in enumerate(self.rivals):
            y = np.zeros(net.num_classes)
            y[self.target] = 1.0
            y[j] = -1.0
            clauses.append(make_clause(-self.dw[k], y, float(self.db[k]) - self.epsilons[k]))
        return LinearProperty(tuple(clauses))

    def region_rows(self) -> list[LinRow]:
        """dW_j.x + db_j >= eps_j as closed le rows."""
        return [make_row(-self.dw[k], float(self.db[k]) - self.epsilons[k], "le")
                for k in range(len(self.rivals))]


@dataclass(frozen=True)
class RegionCertificate:
    mode: str
    pattern: ActivationPattern
    extra_rows: tuple[LinRow, ...]
    prop: DominanceProperty
    seed: tuple[float, ...]
    epsilons: tuple[float, ...]
    logit_factor: float | None
    net_sha256: str
    delta_strict: float

    def to_json(self):
        return {
            "mode": self.mode,
            "pattern": self.pattern.to_json(),
            "extra_rows": [r.to_json() for r in self.extra_rows],
            "property": self.prop.to_json(),
            "seed": list(self.seed),
            "epsilons": list(self.epsilons),
            "logit_factor": self.logit_factor,
            "net_sha256": self.net_sha256,
            "delta_strict": self.delta_strict,
        }

    @classmethod
    def from_json(cls, obj) -> "RegionCertificate":
        return cls(
            mode=obj["mode"],
            pattern=ActivationPattern.of(obj["pattern"]),
            extra_rows=tuple(LinRow.from_json(r) for r in obj["extra_rows"]),
            prop=DominanceProperty.from_json(obj["property"]),
            seed=tuple(float(v) for v in obj["seed"]),
            epsilons=tuple(float(v) for v in obj["epsilons"]),
            logit_factor=(None if obj["logit_factor"] is None
                          else float(obj["logit_factor"])),
            net_sha256=obj["net_sha256"],
            delta_strict=float(obj["delta_strict"]),
        )


def region_polytope(net: Network, cert: RegionCertificate) -> Polytope:
    """The certified region: pattern halfspaces (with box rows) plus the
    certificate's extra rows."""
    base = halfspaces(net, cert.pattern)
    return Polytope(base.rows + cert.extra_rows)


def find_minimal(net: Network, sigma: ActivationPattern, prop: LinearProperty,
                 tol: Tolerances = DEFAULT_TOLERANCES,
                 node_cap: int = DEFAULT_NODE_CAP,
                 continue_past_frontier: bool = False) -> ActivationPattern:
    """Greedy relaxation from the deepest layer up.

    Each layer is first tried fully unconstrained; the first layer that cannot
    be dropped wholesale becomes the frontier, where neurons are relaxed one by
    one in ascending index. Processing stops after the frontier layer unless
    continue_past_frontier is set. The result keeps prop holding and no single
    kept constraint can be relaxed under this order.
    """
    if not sigma.complete:
        raise IncompletePatternError("find_minimal starts from a complete pattern")
    if check_implies(net, sigma, prop, tol, node_cap).status != HOLDS:
        raise PreconditionError("pattern does not imply the property")
    current = [list(layer) for layer in sigma.statuses]

    def holds(candidate) -> bool:
        p = ActivationPattern.of([list(row) for row in candidate])
        return check_implies(net, p, prop, tol, node_cap).status == HOLDS

    for l in reversed(range(len(current))):
        whole = [list(row) for row in current]
        whole[l] = [DC] * len(whole[l])
        if holds(whole):
            current = whole
            continue
        for i in range(len(current[l])):
            trial = [list(row) for row in current]
            trial[l][i] = DC
            if holds(trial):
                current = trial
        if not continue_past_frontier:
            break
    return ActivationPattern.of(current)


def _seed_margins(net: Network, x0, prop: DominanceProperty) -> np.ndarray:
    logits = model.forward(net, x0).logits
    return np.array([logits[prop.target] - logits[j] for j in prop.rivals])


def get_convex_region_baseline(net: Network, prop: DominanceProperty, x0,
                               tol: Tolerances = DEFAULT_TOLERANCES,
                               node_cap: int = DEFAULT_NODE_CAP) -> RegionCertificate:
    """Pattern-only region when the seed's cell already implies dominance;
    otherwise the cell intersected with the dominance halfspaces themselves."""
    x0 = np.asarray(x0, dtype=float)
    margins = _seed_margins(net, x0, prop)
    if np.any(margins <= 0.0):
        raise PreconditionError("seed is misclassified or tied for the target class")
    sigma = model.pattern_of(net, x0)
    linear = prop.to_linear(net)
    res = check_implies(net, sigma, linear, tol, node_cap)
    if res.status == HOLDS:
        minimal = find_minimal(net, sigma, linear, tol, node_cap)
        return RegionCertificate(
            MODE_BASELINE_MINIMAL, minimal, (), prop, tuple(float(v) for v in x0),
            (), None, net.source_sha256, tol.delta_strict)
    out = model.output_affine(net, sigma)
    rows = []
    for j in prop.rivals:
        dw = out.w[prop.target] - out.w[j]
        db = float(out.b[prop.target] - out.b[j])
        rows.append(make_row(-dw, db, "lt"))  # dW.x + db > 0
    return RegionCertificate(
        MODE_BASELINE_AFFINE, sigma, tuple(rows), prop, tuple(float(v) for v in x0),
        (), None, net.source_sha256, tol.delta_strict)


def build_interpolant(net: Network, x0, prop: DominanceProperty,
                      logit_factor: float,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> InterpolantSpec:
    """Per-rival dW, db from the seed cell's affine logit map; eps_j is
    logit_factor times the seed's forward-pass margin against rival j."""
    if not 0.0 < logit_factor < 1.0:
        raise RangeError(f"logit_factor must be in (0,1), got {logit_factor}")
    x0 = np.asarray(x0, dtype=float)
    margins = _seed_margins(net, x0, prop)
    if np.any(margins == 0.0):
        raise DegenerateMarginError("seed logits tie for some rival")
    if np.any(margins < 0.0):
        raise PreconditionError("seed is misclassified for the target class")
    out = model.output_affine(net, model.pattern_of(net, x0))
    dw = np.array([out.w[prop.target] - out.w[j] for j in prop.rivals])
    db = np.array([out.b[prop.target] - out.b[j] for j in prop.rivals])
    eps = tuple(float(logit_factor * m) for m in margins)
    return InterpolantSpec(prop.target, prop.rivals, dw, db, eps, float(logit_factor))


def infer_region_interpolant(net: Network, x0, prop: DominanceProperty,
                             logit_factor: float,
                             tol: Tolerances = DEFAULT_TOLERANCES,
                             node_cap: int = DEFAULT_NODE_CAP) -> RegionCertificate:
    """Minimize the seed pattern against the interpolant property I, then
    attach the separator halfspaces dW.x + db >= eps as region rows.

    The initial check of I on the seed's own complete pattern holds by
    construction; a failure indicates a soundness bug and is never masked.
    """
    x0 = np.asarray(x0, dtype=float)
    spec = build_interpolant(net, x0, prop, logit_factor, tol)
    interp = spec.to_linear(net)
    sigma = model.pattern_of(net, x0)
    try:
        minimal = find_minimal(net, sigma, interp, tol, node_cap)
    except PreconditionError as e:
        raise InternalError(
            "interpolant failed its guaranteed initial check on the seed pattern") from e
    return RegionCertificate(
        MODE_INTERPOLANT, minimal, tuple(spec.region_rows()), prop,
        tuple(float(v) for v in x0), spec.epsilons, float(logit_factor),
        net.source_sha256, tol.delta_strict)
