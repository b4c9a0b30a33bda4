"""Dense two-phase simplex over halfspace systems.

Problems here are small (dozens of variables and rows), so a tableau method
with deterministic pivoting is enough: Dantzig's rule by default, switching to
Bland's rule after a run of degenerate pivots, and a full Bland restart if the
first attempt stalls or returns a point that fails the residual check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import DimensionError, NumericalError
from .pattern import LinRow, Polytope

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIV_TOL = 1e-10
_COST_TOL = 1e-9
_DEGEN_LIMIT = 60


@dataclass(frozen=True)
class Constraint:
    """One row coeffs.v (le|ge|eq) rhs."""

    coeffs: tuple[float, ...]
    rhs: float
    rel: str

    def __post_init__(self):
        if self.rel not in ("le", "ge", "eq"):
            raise ValueError(f"bad relation {self.rel!r}")


@dataclass(frozen=True)
class LinearProgram:
    """Maximize objective.v subject to constraints and per-variable bounds
    (±inf for open sides)."""

    objective: tuple[float, ...]
    constraints: tuple[Constraint, ...]
    var_bounds: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class LpOutcome:
    status: str
    point: np.ndarray | None = None
    value: float | None = None


def make_lp(objective, constraints=(), var_bounds=None) -> LinearProgram:
    """Coerce arrays/None-bounds into a LinearProgram.

    constraints items may be Constraint, (coeffs, rhs, rel) tuples, or LinRow
    (whose lt rows must be pre-tightened; here lt is treated as le)."""
    obj = tuple(float(v) for v in np.asarray(objective, dtype=float))
    n = len(obj)
    rows = []
    for c in constraints:
        if isinstance(c, Constraint):
            rows.append(c)
        elif isinstance(c, LinRow):
            rows.append(Constraint(c.coeffs, c.rhs, "le"))
        else:
            coeffs, rhs, rel = c
            rows.append(Constraint(
                tuple(float(v) for v in np.asarray(coeffs, dtype=float)),
                float(rhs), rel))
    for r in rows:
        if len(r.coeffs) != n:
            raise DimensionError(
                f"constraint has {len(r.coeffs)} coeffs, expected {n}")
    if var_bounds is None:
        bounds = tuple((-np.inf, np.inf) for _ in range(n))
    else:
        bounds = tuple(
            (float(lo) if lo is not None else -np.inf,
             float(hi) if hi is not None else np.inf)
            for lo, hi in var_bounds)
        if len(bounds) != n:
            raise DimensionError("var_bounds length mismatch")
    return LinearProgram(obj, tuple(rows), bounds)


class _IterationLimit(Exception):
    pass


def _pivot(tab: np.ndarray, obj: np.ndarray, basis: np.ndarray, r: int, j: int):
    tab[r] /= tab[r, j]
    col = tab[:, j].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    obj -= obj[j] * tab[r]
    basis[r] = j


def _ratio_leave(tab: np.ndarray, basis: np.ndarray, j: int) -> int | None:
    col = tab[:, j]
    eligible = np.nonzero(col > _PIV_TOL)[0]
    if eligible.size == 0:
        return None
    ratios = tab[eligible, -1] / col[eligible]
    rmin = ratios.min()
    near = eligible[ratios <= rmin + 1e-9 * (1.0 + abs(rmin))]
    # smallest basis index among ties (anti-cycling with Bland entering)
    return int(near[np.argmin(basis[near])])


def _run_simplex(tab, obj, basis, max_iter, bland):
    """Minimize until no negative reduced cost. Returns 'optimal'/'unbounded'.
    Mutates tab/obj/basis in place."""
    degen = 0
    for _ in range(max_iter):
        costs = obj[:-1]
        neg = np.nonzero(costs < -_COST_TOL)[0]
        if neg.size == 0:
            return OPTIMAL
        if bland or degen > _DEGEN_LIMIT:
            j = int(neg[0])
        else:
            j = int(neg[np.argmin(costs[neg])])
        r = _ratio_leave(tab, basis, j)
        if r is None:
            return UNBOUNDED
        if tab[r, -1] / tab[r, j] < 1e-12:
            degen += 1
        else:
            degen = 0
        _pivot(tab, obj, basis, r, j)
    raise _IterationLimit


def _objective_row(c_ext: np.ndarray, tab: np.ndarray, basis: np.ndarray) -> np.ndarray:
    obj = np.zeros(tab.shape[1])
    obj[:-1] = c_ext
    cb = c_ext[basis]
    nz = np.nonzero(cb)[0]
    for i in nz:
        obj -= cb[i] * tab[i]
    return obj


def _standard_simplex(a: np.ndarray, b: np.ndarray, c: np.ndarray, bland: bool,
                      feas_tol: float):
    """Minimize c.x s.t. a x <= b, x >= 0. Returns (status, x or None)."""
    m, n = a.shape
    max_iter = 500 + 40 * (m + n)
    neg = b < 0
    n_art = int(neg.sum())
    tab = np.zeros((m, n + m + n_art + 1))
    basis = np.zeros(m, dtype=int)
    art_cols = []
    k = 0
    for i in range(m):
        sgn = -1.0 if neg[i] else 1.0
        tab[i, :n] = sgn * a[i]
        tab[i, n + i] = sgn
        tab[i, -1] = sgn * b[i]
        if neg[i]:
            col = n + m + k
            tab[i, col] = 1.0
            basis[i] = col
            art_cols.append(col)
            k += 1
        else:
            basis[i] = n + i

    if n_art:
        c1 = np.zeros(n + m + n_art)
        c1[n + m:] = 1.0
        obj = _objective_row(c1, tab, basis)
        status = _run_simplex(tab, obj, basis, max_iter, bland)
        if status != OPTIMAL or -obj[-1] > feas_tol:
            return INFEASIBLE, None
        # drive remaining artificials out of the basis, dropping redundant rows
        drop = []
        for i in range(m):
            if basis[i] < n + m:
                continue
            cand = np.nonzero(np.abs(tab[i, : n + m]) > _PIV_TOL)[0]
            if cand.size:
                _pivot(tab, obj, basis, i, int(cand[0]))
            else:
                drop.append(i)
        if drop:
            tab = np.delete(tab, drop, axis=0)
            basis = np.delete(basis, drop)
        tab = np.delete(tab, art_cols, axis=1)

    c_ext = np.concatenate([c, np.zeros(tab.shape[1] - 1 - n)])
    obj = _objective_row(c_ext, tab, basis)
    status = _run_simplex(tab, obj, basis, max_iter, bland)
    if status != OPTIMAL:
        return status, None
    x = np.zeros(tab.shape[1] - 1)
    x[basis] = tab[:, -1]
    return OPTIMAL, x[:n]


def _transform(lp: LinearProgram):
    """Shift/split variables to u >= 0 form: v = m_map @ u + t, plus extra
    le-rows in u-space enforcing finite upper bounds."""
    n = len(lp.objective)
    cols = []
    t = np.zeros(n)
    ub_rows = []  # (u index, upper bound)
    for j, (lo, hi) in enumerate(lp.var_bounds):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo):
            t[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            t[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    m_map = np.column_stack(cols) if cols else np.zeros((n, 0))
    return m_map, t, ub_rows


def _residual_ok(lp: LinearProgram, x: np.ndarray, tol: float) -> bool:
    for con in lp.constraints:
        v = float(np.dot(con.coeffs, x))
        if con.rel == "le" and v > con.rhs + tol:
            return False
        if con.rel == "ge" and v < con.rhs - tol:
            return False
        if con.rel == "eq" and abs(v - con.rhs) > tol:
            return False
    for xv, (lo, hi) in zip(x, lp.var_bounds):
        if xv < lo - tol or xv > hi + tol:
            return False
    return True


def solve(lp: LinearProgram) -> LpOutcome:
    """Maximize lp.objective over lp's constraints and bounds.

    Deterministic; optimal points are re-checked against every constraint
    within tau_lp, retrying once under Bland's rule before giving up."""
    tol = DEFAULT_TOLERANCES.tau_lp
    for lo, hi in lp.var_bounds:
        if lo > hi:
            return LpOutcome(INFEASIBLE)

    m_map, t, ub_rows = _transform(lp)
    nu = m_map.shape[1]
    rows_a, rows_b = [], []

    def add_row(coeffs_v, rhs):
        a_u = coeffs_v @ m_map
        rows_a.append(a_u)
        rows_b.append(rhs - float(np.dot(coeffs_v, t)))

    for con in lp.constraints:
        cv = np.asarray(con.coeffs, dtype=float)
        if con.rel in ("le", "eq"):
            add_row(cv, con.rhs)
        if con.rel in ("ge", "eq"):
            add_row(-cv, -con.rhs)
    for idx, ub in ub_rows:
        e = np.zeros(nu)
        e[idx] = 1.0
        rows_a.append(e)
        rows_b.append(ub)

    a = np.array(rows_a) if rows_a else np.zeros((0, nu))
    b = np.array(rows_b) if rows_b else np.zeros(0)

    # unit-norm row scaling; zero rows resolve immediately
    keep = []
    for i in range(len(b)):
        nrm = np.abs(a[i]).max() if nu else 0.0
        if nrm <= _PIV_TOL:
            if b[i] < -tol:
                return LpOutcome(INFEASIBLE)
            continue
        a[i] /= nrm
        b[i] /= nrm
        keep.append(i)
    a = a[keep]
    b = b[keep]

    c_u = -(np.asarray(lp.objective, dtype=float) @ m_map)  # maximize -> minimize
    feas_tol = tol * max(1.0, float(np.abs(b).max()) if len(b) else 1.0)

    for attempt, bland in enumerate((False, True)):
        try:
            status, u = _standard_simplex(a, b, c_u, bland, feas_tol)
        except _IterationLimit:
            if attempt == 0:
                continue
            raise NumericalError("simplex iteration limit under Bland's rule")
        if status != OPTIMAL:
            return LpOutcome(status)
        x = m_map @ u + t
        if _residual_ok(lp, x, tol):
            return LpOutcome(OPTIMAL, x, float(np.dot(lp.objective, x)))
        if attempt == 1:
            raise NumericalError("optimal point failed residual check twice")
    raise NumericalError("unreachable")  # pragma: no cover


def feasible_point(rows, var_bounds=None, num_vars: int | None = None,
                   delta_strict: float | None = None) -> LpOutcome:
    """Phase-1 feasibility over Polytope-style rows: lt rows are tightened by
    delta_strict first, so a returned point satisfies them with margin."""
    if delta_strict is None:
        delta_strict = DEFAULT_TOLERANCES.delta_strict
    if isinstance(rows, Polytope):
        rows = rows.rows
    rows = list(rows)
    if num_vars is None:
        if rows:
            num_vars = len(rows[0].coeffs)
        elif var_bounds is not None:
            num_vars = len(var_bounds)
        else:
            raise DimensionError("cannot infer variable count")
    cons = []
    for r in rows:
        rhs = r.rhs - delta_strict if r.rel == "lt" else r.rhs
        cons.append(Constraint(r.coeffs, rhs, "le"))
    lp = make_lp(np.zeros(num_vars), cons, var_bounds)
    return solve(lp)


def maximize(objective, rows, var_bounds=None,
             delta_strict: float | None = None) -> LpOutcome:
    """Maximize a linear objective over Polytope-style rows (lt tightened)."""
    if delta_strict is None:
        delta_strict = DEFAULT_TOLERANCES.delta_strict
    if isinstance(rows, Polytope):
        rows = rows.rows
    cons = []
    for r in rows:
        rhs = r.rhs - delta_strict if r.rel == "lt" else r.rhs
        cons.append(Constraint(r.coeffs, rhs, "le"))
    return solve(make_lp(objective, cons, var_bounds))
