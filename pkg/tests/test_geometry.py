import math

import numpy as np
import pytest

from relucert import DegenerateRegion, EmptyRegion
from relucert.geometry import (
    Box,
    chebyshev_center,
    containment_rows,
    log_volume,
    max_box_sum,
    max_box_volume,
    polytope_bounding_box,
    sample_region,
)
from relucert.pattern import Polytope, make_row


def poly_of(*rows):
    return Polytope(tuple(make_row(c, r, rel) for c, r, rel in rows))


def unit_quadrant(cap=2.0):
    # x+y <= cap, x >= 0, y >= 0
    return poly_of(([1, 1], cap, "le"), ([-1, 0], 0, "le"), ([0, -1], 0, "le"))


BOX01 = np.array([[0.0, 10.0], [0.0, 10.0]])


def test_containment_rows_signs():
    rows = containment_rows(poly_of(([1, 1], 2, "le")), delta_strict=0.0)
    # first row: min part on lo vars (zeros), max part on hi vars (ones)
    assert rows[0].coeffs == (0.0, 0.0, 1.0, 1.0)
    assert rows[0].rhs == 2.0
    rows = containment_rows(poly_of(([-1, 0], 0, "le")), delta_strict=0.0)
    assert rows[0].coeffs == (-1.0, 0.0, 0.0, 0.0)
    rows = containment_rows(poly_of(([1, -1], 1, "le")), delta_strict=0.0)
    assert rows[0].coeffs == (0.0, -1.0, 1.0, 0.0)


def test_containment_strict_tightening():
    rows = containment_rows(poly_of(([1, 0], 1, "lt")), delta_strict=1e-6)
    assert rows[0].rhs == 1 - 1e-6


def test_max_box_sum_triangle():
    box = max_box_sum(unit_quadrant(), BOX01)
    w = box.widths
    assert abs(w.sum() - 2.0) <= 1e-7
    assert np.all(np.asarray(box.lo) >= -1e-9)
    assert np.asarray(box.hi).sum() <= 2 + 1e-7


def test_max_box_sum_whole_box():
    poly = poly_of(([1, 0], 10, "le"), ([-1, 0], 0, "le"),
                   ([0, 1], 10, "le"), ([0, -1], 0, "le"))
    box = max_box_sum(poly, BOX01)
    assert np.allclose(box.lo, [0, 0])
    assert np.allclose(box.hi, [10, 10])


def test_max_box_sum_empty():
    poly = poly_of(([1, 0], -1, "le"), ([-1, 0], 0, "le"))
    with pytest.raises(EmptyRegion):
        max_box_sum(poly, BOX01)


def test_max_box_volume_triangle():
    # plain Frank-Wolfe zig-zags between the two cap vertices, so accuracy is
    # ~1e-3 under the 1e-8 relative-gain stop; the optimum is [0,1]x[0,1]
    box = max_box_volume(unit_quadrant(), BOX01, delta_strict=0.0)
    assert np.allclose(box.lo, [0, 0], atol=5e-3)
    assert np.allclose(box.hi, [1, 1], atol=2e-2)
    assert abs(log_volume(box)) <= 1e-2


def test_max_box_volume_whole_box():
    poly = poly_of(([1, 0], 2, "le"), ([-1, 0], 0, "le"),
                   ([0, 1], 3, "le"), ([0, -1], 0, "le"))
    box = max_box_volume(poly, np.array([[0.0, 2.0], [0.0, 3.0]]), delta_strict=0.0)
    assert abs(log_volume(box) - math.log(6)) <= 1e-6


def test_max_box_volume_degenerate_axis():
    poly = poly_of(([1, 0], 0.5, "le"), ([-1, 0], -0.5, "le"),
                   ([0, 1], 1, "le"), ([0, -1], 0, "le"))
    with pytest.raises(DegenerateRegion) as e:
        max_box_volume(poly, BOX01, delta_strict=0.0)
    assert e.value.axis == 0


def test_log_volume_values():
    assert log_volume(Box((0, 0, 0), (1, 1, 1))) == 0.0
    assert abs(log_volume(Box((0, 0), (2, 0.5)))) <= 1e-12
    assert abs(log_volume(Box((0, 0), (math.e, math.e))) - 2.0) <= 1e-12


def _random_poly(rng, d):
    """Random bounded polytope with nonempty interior around a center point."""
    center = rng.uniform(-0.5, 0.5, size=d)
    rows = []
    for _ in range(int(rng.integers(d, 3 * d + 2))):
        c = rng.normal(size=d)
        rhs = float(c @ center) + float(rng.uniform(0.3, 1.5))
        rows.append(make_row(c, rhs, "le"))
    box = np.array([[-3.0, 3.0]] * d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        rows.append(make_row(e, 3.0, "le"))
        rows.append(make_row(-e, 3.0, "le"))
    return Polytope(tuple(rows)), box


@pytest.mark.parametrize("seed", range(40))
def test_volume_dominates_sum_and_corners(seed):
    rng = np.random.default_rng(2000 + seed)
    d = int(rng.integers(2, 6))
    poly, box = _random_poly(rng, d)
    b_sum = max_box_sum(poly, box, delta_strict=0.0)
    try:
        b_vol = max_box_volume(poly, box, delta_strict=0.0)
    except DegenerateRegion:
        return
    assert log_volume(b_vol) >= log_volume(b_sum) - 1e-9
    for b in (b_sum, b_vol):
        lo = np.asarray(b.lo)
        hi = np.asarray(b.hi)
        assert np.all(hi - lo >= -1e-9)
        for mask in range(2 ** d):
            corner = np.where([(mask >> j) & 1 for j in range(d)], hi, lo)
            for r in poly.rows:
                assert float(np.dot(r.coeffs, corner)) <= r.rhs + 1e-7


@pytest.mark.parametrize("seed", range(15))
def test_adding_rows_never_helps(seed):
    rng = np.random.default_rng(4000 + seed)
    poly, box = _random_poly(rng, 3)
    extra = make_row(rng.normal(size=3), float(rng.uniform(0.2, 1.0)), "le")
    tighter = Polytope(poly.rows + (extra,))
    s1 = np.asarray(max_box_sum(poly, box, delta_strict=0.0).widths).sum()
    try:
        s2 = np.asarray(max_box_sum(tighter, box, delta_strict=0.0).widths).sum()
    except EmptyRegion:
        return
    assert s2 <= s1 + 1e-7

    def vol(p):
        try:
            return log_volume(max_box_volume(p, box, delta_strict=0.0))
        except (DegenerateRegion, EmptyRegion):
            return -np.inf
    assert vol(tighter) <= vol(poly) + 1e-6


def test_bounding_box_and_center():
    poly = unit_quadrant()
    bbox = polytope_bounding_box(poly, 2, delta_strict=0.0)
    assert np.allclose(bbox, [[0, 2], [0, 2]], atol=1e-8)
    c = chebyshev_center(poly, delta_strict=0.0)
    r = 2 - math.sqrt(2)  # inscribed circle of the right triangle
    assert np.allclose(c, [r, r], atol=1e-6)


def test_sample_region_rejection():
    poly = unit_quadrant()
    rng = np.random.default_rng(0)
    xs = sample_region(poly, 500, rng)
    assert xs.shape == (500, 2)
    assert poly.contains_batch(xs).all()


def test_sample_region_thin_slab():
    # rejection from the bounding box almost never hits this slab
    poly = poly_of(([1, 0], 1e-5, "le"), ([-1, 0], 1e-5, "le"),
                   ([0, 1], 1, "le"), ([0, -1], 1, "le"))
    rng = np.random.default_rng(1)
    xs = sample_region(poly, 200, rng, delta_strict=1e-9)
    assert xs.shape == (200, 2)
    assert poly.contains_batch(xs).all()
    assert np.abs(xs[:, 0]).max() <= 1e-5


def test_sample_region_strict_margin():
    poly = poly_of(([-1, 0], 0, "lt"), ([1, 0], 1, "le"),
                   ([0, 1], 1, "le"), ([0, -1], 0, "le"))
    rng = np.random.default_rng(2)
    xs = sample_region(poly, 300, rng)
    assert xs[:, 0].min() >= 1e-6  # delta_strict margin on the lt row
