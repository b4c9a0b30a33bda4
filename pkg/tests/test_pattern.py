import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relucert import (
    DC,
    OFF,
    ON,
    ActivationPattern,
    AlreadyUnconstrainedError,
    LinRow,
    PatternStructureError,
    frontier_layer,
    halfspaces,
    is_prefix_structured,
    is_subpattern,
    relax,
    supports,
)


def pat(*layers):
    return ActivationPattern.of(layers)


def test_key_roundtrip():
    p = pat([ON, OFF, DC], [DC, ON])
    assert p.key() == "10x-x1"
    assert ActivationPattern.from_key("10x-x1") == p


def test_complete_and_counts():
    assert pat([ON, OFF]).complete
    assert not pat([ON, DC]).complete
    assert pat([ON, DC], [OFF, DC]).num_constrained == 2
    assert list(pat([ON, DC], [OFF, DC]).constrained()) == [(0, 0, ON), (1, 0, OFF)]


def test_all_dc():
    p = ActivationPattern.all_dc((2, 3))
    assert p.shape == (2, 3)
    assert p.num_constrained == 0


def test_bad_status_rejected():
    with pytest.raises(ValueError):
        ActivationPattern.of([["maybe"]])


# -- sub-pattern relation ----------------------------------------------------

status = st.sampled_from([ON, OFF, DC])
shapes = st.lists(st.integers(1, 4), min_size=1, max_size=3)


@st.composite
def pattern_pairs(draw):
    shape = draw(shapes)
    mk = lambda: ActivationPattern.of([[draw(status) for _ in range(n)] for n in shape])
    return mk(), mk()


@st.composite
def single_patterns(draw):
    shape = draw(shapes)
    return ActivationPattern.of([[draw(status) for _ in range(n)] for n in shape])


@given(single_patterns())
def test_subpattern_reflexive(p):
    assert is_subpattern(p, p)


@given(single_patterns())
def test_all_dc_is_bottom(p):
    assert is_subpattern(ActivationPattern.all_dc(p.shape), p)


@given(pattern_pairs())
def test_subpattern_antisymmetric(pair):
    p, q = pair
    if is_subpattern(p, q) and is_subpattern(q, p):
        assert p == q


@given(pattern_pairs(), st.data())
def test_subpattern_transitive(pair, data):
    p, q = pair
    r = ActivationPattern.of(
        [[data.draw(status) for _ in range(n)] for n in p.shape])
    if is_subpattern(p, q) and is_subpattern(q, r):
        assert is_subpattern(p, r)


@given(single_patterns(), st.data())
def test_relax_gives_subpattern(p, data):
    constrained = list(p.constrained())
    if not constrained:
        return
    l, i, _ = data.draw(st.sampled_from(constrained))
    q = relax(p, l, i)
    assert is_subpattern(q, p)
    assert q.num_constrained == p.num_constrained - 1


def test_relax_whole_layer():
    p = pat([ON, OFF], [ON, ON])
    q = relax(p, 0)
    assert q == pat([DC, DC], [ON, ON])


def test_relax_already_dc():
    p = pat([DC, ON])
    with pytest.raises(AlreadyUnconstrainedError):
        relax(p, 0, 0)
    with pytest.raises(AlreadyUnconstrainedError):
        relax(pat([DC, DC]), 0)


# -- prefix structure ---------------------------------------------------------

def test_prefix_structured_cases():
    assert is_prefix_structured(pat([ON, OFF], [ON, ON]))    # complete
    assert is_prefix_structured(pat([ON, OFF], [DC, ON]))    # frontier = 1
    assert is_prefix_structured(pat([ON, DC], [DC, DC]))     # frontier = 0
    assert is_prefix_structured(pat([DC, DC], [DC, DC]))
    assert not is_prefix_structured(pat([ON, DC], [ON, DC]))
    assert not is_prefix_structured(pat([DC, DC], [ON, ON]))


def test_frontier_layer():
    assert frontier_layer(pat([ON, OFF], [ON, ON])) == 2
    assert frontier_layer(pat([ON, OFF], [DC, ON])) == 1
    assert frontier_layer(pat([DC, DC])) == 0


# -- halfspaces on the 1-D fixture --------------------------------------------

def test_halfspaces_fix1_on(fix1):
    poly = halfspaces(fix1, pat([ON]))
    # one pattern row -x < 0, then box rows x <= 2, -x <= 2
    assert poly.rows[0] == LinRow((-1.0,), 0.0, "lt")
    assert poly.rows[1] == LinRow((1.0,), 2.0, "le")
    assert poly.rows[2] == LinRow((-1.0,), 2.0, "le")
    assert poly.contains([1.0])
    assert not poly.contains([0.0])     # on rows are strict
    assert not poly.contains([-1.0])
    assert not poly.contains([3.0])


def test_halfspaces_fix1_off(fix1):
    poly = halfspaces(fix1, pat([OFF]))
    assert poly.rows[0] == LinRow((1.0,), -0.0, "le")
    assert poly.contains([0.0])         # off rows include the boundary
    assert poly.contains([-2.0])
    assert not poly.contains([0.5])


def test_halfspaces_fix1_dc(fix1):
    poly = halfspaces(fix1, pat([DC]))
    # no pattern rows, just the box
    assert len(poly.rows) == 2
    assert poly.contains([-2.0]) and poly.contains([2.0])
    assert not poly.contains([2.1])


def test_halfspaces_requires_prefix_structure(fix1):
    import relucert

    net = relucert.network_from_arrays(
        [[-1, 1], [-1, 1]],
        [np.eye(2), np.eye(2), np.eye(2)],
        [np.zeros(2), np.zeros(2), np.zeros(2)],
    )
    with pytest.raises(PatternStructureError):
        halfspaces(net, pat([ON, DC], [ON, DC]))


def test_supports_fix1(fix1):
    assert supports(fix1, pat([ON]), [1.0])
    assert not supports(fix1, pat([ON]), [0.0])     # boundary: pattern is off
    assert not supports(fix1, pat([ON]), [-1.0])
    assert supports(fix1, pat([OFF]), [0.0])
    assert supports(fix1, pat([DC]), [1.0])
    assert supports(fix1, pat([DC]), [-1.0])
    assert not supports(fix1, pat([DC]), [2.5])     # outside the box


def test_polytope_batch_matches_scalar(fix1):
    poly = halfspaces(fix1, pat([ON]))
    xs = np.linspace(-2.5, 2.5, 21).reshape(-1, 1)
    batch = poly.contains_batch(xs)
    scalar = np.array([poly.contains(x) for x in xs])
    assert np.array_equal(batch, scalar)
