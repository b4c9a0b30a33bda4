"""Under-approximation boxes inside region polytopes, plus region sampling.

Two objectives over the same containment constraints: sum of widths (one LP)
and log-volume (Frank-Wolfe over the LP oracle, warm-started from the
sum-objective box). Strict polytope rows are tightened by delta_strict so any
returned box sits strictly inside open faces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lp
from .config import (
    DEFAULT_TOLERANCES,
    DEGENERATE_WIDTH,
    FW_MAX_ITERS,
    FW_REL_TOL,
    WIDTH_FLOOR,
)
from .errors import DegenerateRegion, EmptyRegion, InternalError
from .pattern import Polytope


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def to_json(self):
        return {"lo": list(self.lo), "hi": list(self.hi),
                "log_volume": log_volume(self)}

    @classmethod
    def from_json(cls, obj) -> "Box":
        return cls(tuple(float(v) for v in obj["lo"]),
                   tuple(float(v) for v in obj["hi"]))


EMPTY_BOX_JSON = {"lo": [], "hi": [], "log_volume": "empty"}


def log_volume(box: Box) -> float:
    """Sum of log-widths with the floor applied, so degenerate axes do not
    produce -inf."""
    return float(sum(math.log(max(w, WIDTH_FLOOR)) for w in box.widths))


def containment_rows(poly: Polytope, delta_strict: float | None = None):
    """Linear rows over (lo_0..lo_{d-1}, hi_0..hi_{d-1}) that hold iff every
    point of the box [lo, hi] satisfies poly: each polytope row is evaluated at
    its worst box vertex. Includes lo <= hi rows."""
    if delta_strict is None:
        delta_strict = DEFAULT_TOLERANCES.delta_strict
    if not poly.rows:
        raise ValueError("containment needs at least one row to infer dimension")
    d = len(poly.rows[0].coeffs)
    cons = []
    for r in poly.rows:
        c = np.asarray(r.coeffs)
        coeffs = np.concatenate([np.minimum(c, 0.0), np.maximum(c, 0.0)])
        rhs = r.rhs - (delta_strict if r.rel == "lt" else 0.0)
        cons.append(lp.Constraint(tuple(float(v) for v in coeffs), float(rhs), "le"))
    for j in range(d):
        row = np.zeros(2 * d)
        row[j] = 1.0
        row[d + j] = -1.0
        cons.append(lp.Constraint(tuple(row), 0.0, "le"))
    return cons


def _box_var_bounds(input_box: np.ndarray):
    b = [(float(lo), float(hi)) for lo, hi in input_box]
    return b + b  # lo variables then hi variables share the input-box range


def max_box_sum(poly: Polytope, input_box,
                delta_strict: float | None = None) -> Box:
    """Largest box by sum of widths: a single LP."""
    input_box = np.asarray(input_box, dtype=float)
    d = input_box.shape[0]
    cons = containment_rows(poly, delta_strict)
    obj = np.concatenate([-np.ones(d), np.ones(d)])  # sum(hi - lo)
    out = lp.solve(lp.make_lp(obj, cons, _box_var_bounds(input_box)))
    if out.status == lp.INFEASIBLE:
        raise EmptyRegion("no box fits inside the region")
    if out.status != lp.OPTIMAL:
        raise InternalError("box LP cannot be unbounded over a bounded input box")
    return Box(tuple(float(v) for v in out.point[:d]),
               tuple(float(v) for v in out.point[d:]))


def max_box_volume(poly: Polytope, input_box,
                   delta_strict: float | None = None) -> Box:
    """Largest box by log-volume via Frank-Wolfe over the containment LP.

    Starts from the sum-objective box shrunk 1% toward its center; each step
    maximizes the linearized objective with the simplex and backtracks along
    the segment. Never returns a box worse than the sum-objective one.
    """
    input_box = np.asarray(input_box, dtype=float)
    d = input_box.shape[0]
    seed_box = max_box_sum(poly, input_box, delta_strict)
    cons = containment_rows(poly, delta_strict)
    bounds = _box_var_bounds(input_box)

    lo = np.asarray(seed_box.lo)
    hi = np.asarray(seed_box.hi)
    center = (lo + hi) / 2.0
    z = np.concatenate([center - 0.495 * (hi - lo), center + 0.495 * (hi - lo)])

    def objective(v: np.ndarray) -> float:
        w = np.maximum(v[d:] - v[:d], WIDTH_FLOOR)
        return float(np.log(w).sum())

    f = objective(z)
    for _ in range(FW_MAX_ITERS):
        w = np.maximum(z[d:] - z[:d], WIDTH_FLOOR)
        grad = np.concatenate([-1.0 / w, 1.0 / w])
        out = lp.solve(lp.make_lp(grad, cons, bounds))
        if out.status != lp.OPTIMAL:
            raise InternalError("Frank-Wolfe oracle LP failed on a feasible set")
        direction = out.point - z
        gain = float(grad @ direction)
        if gain <= 0.0:
            break
        step = 1.0
        f_new = objective(z + direction)
        while f_new < f + 1e-4 * step * gain and step > 1e-10:
            step /= 2.0
            f_new = objective(z + step * direction)
        if f_new < f - 1e-12:
            raise InternalError("Frank-Wolfe objective decreased")
        z = z + step * direction
        if f_new - f < FW_REL_TOL * max(1.0, abs(f)):
            f = f_new
            break
        f = f_new

    fw_box = Box(tuple(float(v) for v in z[:d]), tuple(float(v) for v in z[d:]))
    # the 1% start shrink must never leave us below the plain sum box
    best = fw_box if log_volume(fw_box) >= log_volume(seed_box) else seed_box
    bad = np.nonzero(best.widths < DEGENERATE_WIDTH)[0]
    if bad.size:
        raise DegenerateRegion(
            f"region is degenerate along axis {int(bad[0])}", axis=int(bad[0]))
    return best


# -- region sampling --------------------------------------------------------------

def polytope_bounding_box(poly: Polytope, num_vars: int,
                          delta_strict: float | None = None) -> np.ndarray:
    """Per-coordinate LP bounds of the polytope, shape (d, 2)."""
    out = np.zeros((num_vars, 2))
    for j in range(num_vars):
        e = np.zeros(num_vars)
        e[j] = 1.0
        for k, sign in enumerate((-1.0, 1.0)):
            res = lp.maximize(sign * e, poly, delta_strict=delta_strict)
            if res.status == lp.INFEASIBLE:
                raise EmptyRegion("polytope is empty")
            if res.status != lp.OPTIMAL:
                raise InternalError("unbounded polytope in bounding-box probe")
            out[j, k] = sign * res.value
    return out


def chebyshev_center(poly: Polytope, delta_strict: float | None = None) -> np.ndarray:
    """Center of the largest inscribed ball (lt rows tightened first)."""
    if delta_strict is None:
        delta_strict = DEFAULT_TOLERANCES.delta_strict
    d = len(poly.rows[0].coeffs)
    cons = []
    for r in poly.rows:
        c = np.asarray(r.coeffs)
        rhs = r.rhs - (delta_strict if r.rel == "lt" else 0.0)
        cons.append(lp.Constraint(
            tuple(list(c) + [float(np.linalg.norm(c))]), float(rhs), "le"))
    obj = np.zeros(d + 1)
    obj[d] = 1.0
    bounds = [(None, None)] * d + [(0.0, None)]
    out = lp.solve(lp.make_lp(obj, cons, bounds))
    if out.status != lp.OPTIMAL:
        raise EmptyRegion("polytope is empty")
    return out.point[:d]


def sample_region(poly: Polytope, n: int, rng: np.random.Generator,
                  delta_strict: float | None = None) -> np.ndarray:
    """n points inside poly, strict rows satisfied with delta_strict margin.

    Rejection sampling from the LP bounding box; if acceptance is too low for
    the budget, falls back to hit-and-run from the Chebyshev center (adequate
    interior coverage for soundness checks, not exact uniformity)."""
    if delta_strict is None:
        delta_strict = DEFAULT_TOLERANCES.delta_strict
    d = len(poly.rows[0].coeffs)
    bbox = polytope_bounding_box(poly, d, delta_strict)
    got = []
    total = 0
    budget = 60 * n
    chunk = max(n, 1024)
    while total < budget and sum(len(g) for g in got) < n:
        xs = rng.uniform(bbox[:, 0], bbox[:, 1], size=(chunk, d))
        keep = poly.contains_batch(xs, strict_margin=delta_strict)
        got.append(xs[keep])
        total += chunk
    have = np.concatenate(got) if got else np.zeros((0, d))
    if len(have) >= n:
        return have[:n]

    # thin region: hit-and-run random walk
    a, b, strict = poly.matrices()
    b_eff = b - np.where(strict, delta_strict, 0.0)
    x = chebyshev_center(poly, delta_strict)
    if np.any(a @ x > b_eff):
        raise EmptyRegion("no interior point satisfies the strict margins")
    samples = np.zeros((n, d))
    steps_per = 8
    for i in range(n):
        for _ in range(steps_per):
            u = rng.normal(size=d)
            u /= np.linalg.norm(u)
            au = a @ u
            resid = b_eff - a @ x
            t_hi = np.inf
            t_lo = -np.inf
            pos = au > 1e-12
            neg = au < -1e-12
            if pos.any():
                t_hi = (resid[pos] / au[pos]).min()
            if neg.any():
                t_lo = (resid[neg] / au[neg]).max()
            if not np.isfinite(t_hi) or not np.isfinite(t_lo) or t_hi < t_lo:
                continue
            x = x + u * rng.uniform(t_lo, t_hi)
        samples[i] = x
    return samples
