"""Figure emission for 2-input networks: enumerate the feasible complete-
pattern cells, locate the piecewise-linear class separator inside each cell,
and draw cells, separator, certified regions, boxes, and seeds as static SVG."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import lp, model
from .config import CELL_ENUM_MAX_NEURONS
from .errors import BoundsError, CapExceeded, DimensionError, IoError
from .infer import region_polytope
from .model import Network
from .pattern import OFF, ON, ActivationPattern, Polytope, halfspaces, make_row

_CANVAS = 640.0
_MARGIN = 20.0
_EDGE_EPS = 1e-12


@dataclass
class CellMap:
    cells: tuple  # (ActivationPattern, Polytope, vertex loop (k,2) ndarray)
    separator_segments: tuple  # ((x1, y1), (x2, y2)) pairs
    bounds: tuple  # (xmin, xmax, ymin, ymax)


def _window_rows(bounds):
    xmin, xmax, ymin, ymax = bounds
    return (
        make_row((1.0, 0.0), xmax, "le"),
        make_row((-1.0, 0.0), -xmin, "le"),
        make_row((0.0, 1.0), ymax, "le"),
        make_row((0.0, -1.0), -ymin, "le"),
    )


def clip_polygon(loop, coeffs, rhs):
    """Sutherland-Hodgman: keep the part of a convex CCW loop with
    coeffs . x <= rhs. Returns a list of 2-vectors (possibly < 3)."""
    out = []
    n = len(loop)
    c = np.asarray(coeffs, dtype=float)
    for k in range(n):
        p = np.asarray(loop[k], dtype=float)
        q = np.asarray(loop[(k + 1) % n], dtype=float)
        dp = rhs - float(c @ p)
        dq = rhs - float(c @ q)
        if dp >= -_EDGE_EPS:
            out.append(p)
            if dq < -_EDGE_EPS and dp - dq > 0:
                out.append(p + (dp / (dp - dq)) * (q - p))
        elif dq >= -_EDGE_EPS and dp - dq < 0:
            out.append(p + (dp / (dp - dq)) * (q - p))
    return out


def _dedupe(loop, tol=1e-9):
    kept = []
    for p in loop:
        if not kept or np.linalg.norm(p - kept[-1]) > tol:
            kept.append(p)
    if len(kept) > 1 and np.linalg.norm(kept[0] - kept[-1]) <= tol:
        kept.pop()
    return kept


def polygon_area(loop) -> float:
    """Signed shoelace area; positive for counterclockwise loops."""
    a = 0.0
    n = len(loop)
    for k in range(n):
        x1, y1 = loop[k]
        x2, y2 = loop[(k + 1) % n]
        a += x1 * y2 - x2 * y1
    return a / 2.0


def point_in_loop(loop, x, band=1e-9) -> bool:
    """Membership in a convex CCW loop, tolerant to a boundary band."""
    n = len(loop)
    for k in range(n):
        ex, ey = loop[(k + 1) % n] - loop[k]
        px, py = np.asarray(x) - loop[k]
        if ex * py - ey * px < -band:
            return False
    return True


def region_loop(poly: Polytope, bounds):
    """Clip the drawing window against every polytope row; [] if the visible
    part is empty or degenerate."""
    xmin, xmax, ymin, ymax = bounds
    loop = [np.array([xmin, ymin]), np.array([xmax, ymin]),
            np.array([xmax, ymax]), np.array([xmin, ymax])]
    for r in poly.rows:
        loop = clip_polygon(loop, r.coeffs, r.rhs)
        if len(loop) < 3:
            return []
    loop = _dedupe(loop)
    if len(loop) < 3 or polygon_area(loop) <= _EDGE_EPS:
        return []
    return loop


def _separator_segment(net, pattern, loop, class_pair):
    """Segment of {x : dW.x + db = 0} inside the cell, or None when the gap
    does not change sign there (or is identically zero, a fully tied cell)."""
    t, j = class_pair
    aff = model.output_affine(net, pattern)
    dw = aff.w[t] - aff.w[j]
    db = float(aff.b[t] - aff.b[j])
    vals = [float(dw @ p) + db for p in loop]
    if max(abs(v) for v in vals) < 1e-12:
        return None
    pts = []
    n = len(loop)
    for k in range(n):
        v1, v2 = vals[k], vals[(k + 1) % n]
        if abs(v1) <= 1e-12:
            pts.append(np.asarray(loop[k], dtype=float))
        elif v1 * v2 < 0:
            s = v1 / (v1 - v2)
            pts.append(loop[k] + s * (loop[(k + 1) % n] - loop[k]))
    uniq = _dedupe(pts, tol=1e-9)
    if len(uniq) < 2:
        return None
    # the extreme pair spans the chord through a convex cell
    best = max(itertools.combinations(range(len(uniq)), 2),
               key=lambda ij: np.linalg.norm(uniq[ij[0]] - uniq[ij[1]]))
    a, b2 = uniq[best[0]], uniq[best[1]]
    if np.linalg.norm(a - b2) <= 1e-9:
        return None
    p1, p2 = sorted([tuple(map(float, a)), tuple(map(float, b2))])
    return (p1, p2)


def enumerate_cells(net: Network, bounds, class_pair=(0, 1)) -> CellMap:
    """All LP-feasible complete patterns inside the drawing window, their
    vertex loops, and the class-separator segments; patterns visited in key
    order so the output is deterministic."""
    if net.input_dim != 2:
        raise DimensionError("cell enumeration needs a 2-input network")
    sizes = net.hidden_sizes
    total = sum(sizes)
    if total > CELL_ENUM_MAX_NEURONS:
        raise CapExceeded(
            f"{total} hidden neurons exceed the {CELL_ENUM_MAX_NEURONS}-neuron cap")
    xmin, xmax, ymin, ymax = (float(v) for v in bounds)
    if not (xmin < xmax and ymin < ymax):
        raise BoundsError(f"degenerate drawing window {bounds}")
    bounds = (xmin, xmax, ymin, ymax)
    window = _window_rows(bounds)
    rect = [np.array([xmin, ymin]), np.array([xmax, ymin]),
            np.array([xmax, ymax]), np.array([xmin, ymax])]

    cells = []
    segments = []
    for bits in itertools.product((OFF, ON), repeat=total):
        statuses, k = [], 0
        for h in sizes:
            statuses.append(tuple(bits[k:k + h]))
            k += h
        pattern = ActivationPattern.of(statuses)
        poly = halfspaces(net, pattern)
        probe = lp.feasible_point(poly.rows + window, num_vars=2)
        if probe.status != lp.OPTIMAL:
            continue
        loop = rect
        for r in poly.rows:
            loop = clip_polygon(loop, r.coeffs, r.rhs)
            if len(loop) < 3:
                break
        loop = _dedupe(loop)
        if len(loop) < 3 or polygon_area(loop) <= _EDGE_EPS:
            continue
        loop = np.array(loop)
        loop.setflags(write=False)
        cells.append((pattern, poly, loop))
        seg = _separator_segment(net, pattern, loop, class_pair)
        if seg is not None:
            segments.append(seg)
    return CellMap(tuple(cells), tuple(segments), bounds)


# ---------------------------------------------------------------------------
# SVG emission


def _palette(i: int) -> str:
    """Deterministic pastel fill for cell index i (golden-angle hue walk)."""
    h = (i * 0.6180339887498949) % 1.0
    s, light = 0.45, 0.82
    c = (1 - abs(2 * light - 1)) * s
    x = c * (1 - abs((h * 6) % 2 - 1))
    m = light - c / 2
    k = int(h * 6) % 6
    r, g, b = [(c, x, 0), (x, c, 0), (0, c, x), (0, x, c), (x, 0, c), (c, 0, x)][k]
    return "#%02x%02x%02x" % tuple(int(round((v + m) * 255)) for v in (r, g, b))


_REGION_STYLE = {
    "baseline-minimal": "#d62728",
    "baseline-affine": "#d62728",
    "interpolant": "#2ca02c",
}


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class _Canvas:
    def __init__(self, bounds):
        self.xmin, self.xmax, self.ymin, self.ymax = bounds
        self.inner = _CANVAS - 2 * _MARGIN

    def x(self, v):
        return _MARGIN + (v - self.xmin) / (self.xmax - self.xmin) * self.inner

    def y(self, v):
        return _CANVAS - _MARGIN - (v - self.ymin) / (self.ymax - self.ymin) * self.inner

    def pts(self, loop):
        return " ".join(f"{_fmt(self.x(p[0]))},{_fmt(self.y(p[1]))}" for p in loop)


def emit_svg(cellmap: CellMap, overlays, path: str, net: Network | None = None):
    """Write a deterministic SVG 1.1 figure: cells, separator, then one
    region polygon + box rectangle + seed dot per (certificate, box) overlay.
    Overlays need `net` to rebuild their region polytopes."""
    overlays = list(overlays or [])
    if overlays and net is None:
        raise DimensionError("overlays require the network to rebuild regions")
    cv = _Canvas(cellmap.bounds)
    side = _fmt(_CANVAS)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{side}" height="{side}" viewBox="0 0 {side} {side}">',
        f'<rect x="0" y="0" width="{side}" height="{side}" fill="#ffffff"/>',
    ]
    for i, (_, _, loop) in enumerate(cellmap.cells):
        out.append(f'<polygon points="{cv.pts(loop)}" fill="{_palette(i)}" '
                   f'stroke="#888888" stroke-width="0.75"/>')
    for (p1, p2) in cellmap.separator_segments:
        out.append(f'<line x1="{_fmt(cv.x(p1[0]))}" y1="{_fmt(cv.y(p1[1]))}" '
                   f'x2="{_fmt(cv.x(p2[0]))}" y2="{_fmt(cv.y(p2[1]))}" '
                   f'stroke="#b8860b" stroke-width="2"/>')
    for cert, box in overlays:
        color = _REGION_STYLE.get(cert.mode, "#333333")
        loop = region_loop(region_polytope(net, cert), cellmap.bounds)
        if loop:
            out.append(f'<polygon points="{cv.pts(loop)}" fill="{color}" '
                       f'fill-opacity="0.18" stroke="{color}" stroke-width="1.5"/>')
        if box is not None:
            x1, y1 = cv.x(box.lo[0]), cv.y(box.hi[1])
            w = cv.x(box.hi[0]) - cv.x(box.lo[0])
            h = cv.y(box.lo[1]) - cv.y(box.hi[1])
            out.append(f'<rect x="{_fmt(x1)}" y="{_fmt(y1)}" width="{_fmt(w)}" '
                       f'height="{_fmt(h)}" fill="none" stroke="#1f77b4" '
                       f'stroke-width="2"/>')
        sx, sy = cv.x(cert.seed[0]), cv.y(cert.seed[1])
        out.append(f'<circle cx="{_fmt(sx)}" cy="{_fmt(sy)}" r="3.5" '
                   f'fill="#000000"/>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    try:
        with open(path, "w") as f:
            f.write(text)
    except OSError as e:
        raise IoError(f"cannot write SVG to {path}: {e}") from e
    return text
