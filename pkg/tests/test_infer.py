import numpy as np
import pytest

from relucert import (
    DC,
    OFF,
    ON,
    ActivationPattern,
    DegenerateMarginError,
    IncompletePatternError,
    PreconditionError,
    RangeError,
    forward_batch,
    network_from_arrays,
    pattern_of,
)
from relucert.geometry import sample_region
from relucert.infer import (
    MODE_BASELINE_AFFINE,
    MODE_BASELINE_MINIMAL,
    MODE_INTERPOLANT,
    DominanceProperty,
    RegionCertificate,
    build_interpolant,
    find_minimal,
    get_convex_region_baseline,
    infer_region_interpolant,
    region_polytope,
)
from relucert.verify import HOLDS, check_implies, dominance_property
from relucert.pattern import relax
from util import random_network


def pat(*layers):
    return ActivationPattern.of(layers)


def crossing_net():
    """1-D net whose on-cell is crossed by the separator: Y0-Y1 = relu(x) - 0.5."""
    return network_from_arrays([[-2.0, 2.0]], [[[1.0]], [[1.0], [0.0]]],
                               [[0.0], [-0.5, 0.0]])


# -- build_interpolant ------------------------------------------------------------

def test_interpolant_fix1_values(fix1):
    prop = DominanceProperty.for_net(fix1, 0)
    spec = build_interpolant(fix1, [1.0], prop, 0.5)
    assert np.allclose(spec.dw, [[2.0]])
    assert np.allclose(spec.db, [0.0])
    assert spec.epsilons == (1.0,)
    spec = build_interpolant(fix1, [1.0], prop, 0.9)
    assert spec.epsilons == (pytest.approx(1.8),)


def test_interpolant_range_error(fix1):
    prop = DominanceProperty.for_net(fix1, 0)
    for lf in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(RangeError):
            build_interpolant(fix1, [1.0], prop, lf)


def test_interpolant_tie_is_degenerate(fix1):
    prop = DominanceProperty.for_net(fix1, 0)
    with pytest.raises(DegenerateMarginError):
        build_interpolant(fix1, [-1.0], prop, 0.5)  # logits (0, 0)


def test_interpolant_misclassified(fix1):
    prop = DominanceProperty.for_net(fix1, 1)
    with pytest.raises(PreconditionError):
        build_interpolant(fix1, [1.0], prop, 0.5)  # Y1 < Y0 at x=1


# -- find_minimal -----------------------------------------------------------------

def test_find_minimal_fix1_interpolant(fix1):
    prop = DominanceProperty.for_net(fix1, 0)
    interp = build_interpolant(fix1, [1.0], prop, 0.5).to_linear(fix1)
    assert find_minimal(fix1, pat([ON]), interp) == pat([DC])


def test_find_minimal_fix1_dominance(fix1):
    linear = dominance_property(1, 2, 0)
    assert find_minimal(fix1, pat([ON]), linear) == pat([ON])


def test_find_minimal_requires_complete(fix1):
    with pytest.raises(IncompletePatternError):
        find_minimal(fix1, pat([DC]), dominance_property(1, 2, 0))


def test_find_minimal_precondition(fix1):
    # [off] cell has tied logits, so dominance fails up front
    with pytest.raises(PreconditionError):
        find_minimal(fix1, pat([OFF]), dominance_property(1, 2, 0))


def test_find_minimal_stops_at_frontier():
    """Deepest layer relaxes wholesale; the frontier keeps one neuron; the
    shallow layer is left untouched even if individually relaxable."""
    rng = np.random.default_rng(11)
    for _ in range(20):
        net = random_network(rng, input_dim=2, hidden=(3, 3))
        x = rng.uniform(-2, 2, size=2)
        sigma = pattern_of(net, x)
        prop = build_interpolant(
            net, x, DominanceProperty.for_net(net, _predicted(net, x)), 0.5
        ).to_linear(net)
        minimal = find_minimal(net, sigma, prop)
        layers = minimal.statuses
        frontier = None
        for l, layer in enumerate(layers):
            if any(s == DC for s in layer):
                frontier = l
                break
        if frontier is None:
            continue
        for layer in layers[frontier + 1:]:
            assert all(s == DC for s in layer)
        for l in range(frontier):
            assert layers[l] == sigma.statuses[l]


def _predicted(net, x):
    from relucert import forward

    return int(np.argmax(forward(net, x).logits))


def test_find_minimal_continue_past_frontier(fix1):
    # single-layer fixture: flag defaults agree when the frontier is layer 0
    linear = dominance_property(1, 2, 0)
    a = find_minimal(fix1, pat([ON]), linear)
    b = find_minimal(fix1, pat([ON]), linear, continue_past_frontier=True)
    assert a == b


# -- baseline regions -------------------------------------------------------------

def test_baseline_fix1(fix1):
    prop = DominanceProperty.for_net(fix1, 0)
    cert = get_convex_region_baseline(fix1, prop, [1.0])
    assert cert.mode == MODE_BASELINE_MINIMAL
    assert cert.pattern == pat([ON])
    assert cert.extra_rows == ()
    assert cert.logit_factor is None
    assert cert.epsilons == ()


def test_baseline_precondition(fix1):
    with pytest.raises(PreconditionError):
        get_convex_region_baseline(fix1, DominanceProperty.for_net(fix1, 1), [1.0])
    with pytest.raises(PreconditionError):
        get_convex_region_baseline(fix1, DominanceProperty.for_net(fix1, 0), [-1.0])


def test_baseline_else_branch():
    net = crossing_net()
    prop = DominanceProperty.for_net(net, 0)
    cert = get_convex_region_baseline(net, prop, [1.0])
    assert cert.mode == MODE_BASELINE_AFFINE
    assert cert.pattern == pat([ON])
    assert len(cert.extra_rows) == 1
    row = cert.extra_rows[0]
    assert row.rel == "lt"
    # dW = 1, db = -0.5: region row -x < -0.5
    assert np.allclose(row.coeffs, [-1.0])
    assert row.rhs == pytest.approx(-0.5)


def test_baseline_else_branch_region_matches_forward():
    net = crossing_net()
    prop = DominanceProperty.for_net(net, 0)
    cert = get_convex_region_baseline(net, prop, [1.0])
    poly = region_polytope(net, cert)
    xs = np.linspace(-2, 2, 401).reshape(-1, 1)
    inside = poly.contains_batch(xs)
    logits = forward_batch(net, xs)
    cell = xs[:, 0] > 0
    assert np.array_equal(inside, cell & (logits[:, 0] > logits[:, 1]))


# -- interpolant regions ----------------------------------------------------------

def test_interpolant_region_fix1(fix1):
    prop = DominanceProperty.for_net(fix1, 0)
    cert = infer_region_interpolant(fix1, [1.0], prop, 0.5)
    assert cert.mode == MODE_INTERPOLANT
    assert cert.pattern == pat([DC])
    assert len(cert.extra_rows) == 1
    row = cert.extra_rows[0]
    assert row.rel == "le"
    assert np.allclose(row.coeffs, [-2.0])   # 2x >= 1
    assert row.rhs == pytest.approx(-1.0)
    poly = region_polytope(fix1, cert)
    # region is x in [0.5, 2]
    assert poly.contains([0.5])
    assert poly.contains([2.0])
    assert not poly.contains([0.49])
    assert not poly.contains([2.01])


def test_seed_containment(fix1):
    rng = np.random.default_rng(3)
    for _ in range(25):
        net = random_network(rng, input_dim=2, hidden=(3,))
        x = rng.uniform(-2, 2, size=2)
        target = _predicted(net, x)
        prop = DominanceProperty.for_net(net, target)
        try:
            cert_b = get_convex_region_baseline(net, prop, x)
            cert_i = infer_region_interpolant(net, x, prop, 0.5)
        except (PreconditionError, DegenerateMarginError):
            continue
        assert region_polytope(net, cert_b).contains(x)
        assert region_polytope(net, cert_i).contains(x)


def test_region_soundness_sampling_fix1(fix1):
    prop = DominanceProperty.for_net(fix1, 0)
    rng = np.random.default_rng(9)
    for cert in (get_convex_region_baseline(fix1, prop, [1.0]),
                 infer_region_interpolant(fix1, [1.0], prop, 0.5)):
        poly = region_polytope(fix1, cert)
        xs = sample_region(poly, 2000, rng)
        logits = forward_batch(fix1, xs)
        assert np.all(logits[:, 0] > logits[:, 1])


def test_region_soundness_sampling_random():
    rng = np.random.default_rng(21)
    done = 0
    while done < 12:
        net = random_network(rng, input_dim=2, hidden=(4,))
        x = rng.uniform(-2, 2, size=2)
        target = _predicted(net, x)
        prop = DominanceProperty.for_net(net, target)
        try:
            certs = (get_convex_region_baseline(net, prop, x),
                     infer_region_interpolant(net, x, prop, 0.7))
        except (PreconditionError, DegenerateMarginError):
            continue
        done += 1
        for cert in certs:
            poly = region_polytope(net, cert)
            xs = sample_region(poly, 500, rng)
            logits = forward_batch(net, xs)
            rival = [j for j in range(net.num_classes) if j != target]
            margins = logits[:, target, None] - logits[:, rival]
            assert np.all(margins > 0)


def test_interpolant_initial_check_always_holds():
    rng = np.random.default_rng(33)
    done = 0
    while done < 30:
        net = random_network(rng, input_dim=2, hidden=(3, 2))
        x = rng.uniform(-2, 2, size=2)
        target = _predicted(net, x)
        prop = DominanceProperty.for_net(net, target)
        lf = float(rng.uniform(0.05, 0.95))
        try:
            spec = build_interpolant(net, x, prop, lf)
        except (PreconditionError, DegenerateMarginError):
            continue
        done += 1
        sigma = pattern_of(net, x)
        res = check_implies(net, sigma, spec.to_linear(net))
        assert res.status == HOLDS


def test_greedy_minimality_single_layer():
    """For single-hidden-layer nets the frontier covers every neuron, so any
    single relaxation of the result must break the property."""
    rng = np.random.default_rng(55)
    done = 0
    while done < 15:
        net = random_network(rng, input_dim=2, hidden=(4,))
        x = rng.uniform(-2, 2, size=2)
        target = _predicted(net, x)
        prop = DominanceProperty.for_net(net, target)
        try:
            spec = build_interpolant(net, x, prop, 0.5)
        except (PreconditionError, DegenerateMarginError):
            continue
        done += 1
        linear = spec.to_linear(net)
        minimal = find_minimal(net, pattern_of(net, x), linear)
        for l, i, _ in minimal.constrained():
            res = check_implies(net, relax(minimal, l, i), linear)
            assert res.status != HOLDS


def test_certificate_json_roundtrip(fix1):
    prop = DominanceProperty.for_net(fix1, 0)
    cert = infer_region_interpolant(fix1, [1.0], prop, 0.5)
    obj = cert.to_json()
    assert set(obj) == {"mode", "pattern", "extra_rows", "property", "seed",
                        "epsilons", "logit_factor", "net_sha256", "delta_strict"}
    assert obj["pattern"] == [["dc"]]
    assert obj["delta_strict"] == 1e-6
    back = RegionCertificate.from_json(obj)
    assert back == cert
