import numpy as np
import pytest

from relucert import (
    DC,
    OFF,
    ON,
    ActivationPattern,
    InfeasiblePattern,
    ResourceLimit,
    forward,
    is_subpattern,
    network_from_arrays,
)
from relucert.verify import (
    HOLDS,
    VIOLATED,
    LinearProperty,
    bound_propagate,
    check_implies,
    dominance_property,
    make_clause,
    validate_witness,
)
from bruteforce import oracle_check, random_clause, random_prefix_pattern
from util import random_network


def pat(*layers):
    return ActivationPattern.of(layers)


def prop_dominance(net):
    return dominance_property(net.input_dim, net.num_classes, 0)


def interp_clause_1d(dw, db, eps):
    # Y0 - Y1 > dw*x + db - eps
    return LinearProperty((make_clause([-dw], [1.0, -1.0], db - eps, "gt"),))


# -- bound propagation ---------------------------------------------------------

def test_bounds_fix1_dc(fix1):
    nb = bound_propagate(fix1, pat([DC]))
    assert np.allclose(nb.pre[0], [[-2.0, 2.0]])
    assert np.allclose(nb.post[0], [[0.0, 2.0]])


def test_bounds_fix1_on(fix1):
    nb = bound_propagate(fix1, pat([ON]))
    assert np.allclose(nb.pre[0], [[-2.0, 2.0]])
    assert np.allclose(nb.post[0], [[0.0, 2.0]])


def test_bounds_fix1_off(fix1):
    nb = bound_propagate(fix1, pat([OFF]))
    assert np.allclose(nb.post[0], [[0.0, 0.0]])


def test_bounds_infeasible_on():
    net = network_from_arrays([[-2, -1]], [[[1.0]], [[1.0], [-1.0]]],
                              [[0.0], [0.0, 0.0]])
    with pytest.raises(InfeasiblePattern):
        bound_propagate(net, pat([ON]))


def test_bounds_infeasible_off():
    net = network_from_arrays([[1, 2]], [[[1.0]], [[1.0], [-1.0]]],
                              [[0.0], [0.0, 0.0]])
    with pytest.raises(InfeasiblePattern):
        bound_propagate(net, pat([OFF]))


def test_bounds_two_layers():
    # second layer sees post of first: relu([-2,2]) = [0,2], pre2 = h - 1
    net = network_from_arrays(
        [[-2, 2]], [[[1.0]], [[1.0]], [[1.0], [-1.0]]], [[0.0], [-1.0], [0.0, 0.0]])
    nb = bound_propagate(net, pat([DC], [DC]))
    assert np.allclose(nb.pre[1], [[-1.0, 1.0]])


# -- pinned check_implies cases -------------------------------------------------

def test_check_fix1_on_dominance_holds(fix1):
    res = check_implies(fix1, pat([ON]), prop_dominance(fix1))
    assert res.status == HOLDS
    assert res.witness is None
    assert res.stats.lp_calls >= 1


def test_check_fix1_dc_dominance_violated(fix1):
    res = check_implies(fix1, pat([DC]), prop_dominance(fix1))
    assert res.status == VIOLATED
    assert res.witness is not None
    x = res.witness
    assert x[0] <= 1e-6                       # any x <= 0 ties the logits
    assert validate_witness(fix1, pat([DC]), prop_dominance(fix1), x)
    logits = forward(fix1, x).logits
    assert abs(logits[0] - logits[1]) <= 1e-6


def test_check_fix1_dc_interpolant_holds(fix1):
    res = check_implies(fix1, pat([DC]), interp_clause_1d(2.0, 0.0, 1.0))
    assert res.status == HOLDS


def test_check_empty_property_holds(fix1):
    res = check_implies(fix1, pat([DC]), LinearProperty(()))
    assert res.status == HOLDS


def test_check_infeasible_pattern_vacuous():
    net = network_from_arrays([[-2, -1]], [[[1.0]], [[1.0], [-1.0]]],
                              [[0.0], [0.0, 0.0]])
    res = check_implies(net, pat([ON]), dominance_property(1, 2, 1))
    assert res.status == HOLDS


def test_check_conjunction_clause_by_clause(fix1):
    # Y0 > Y1 fails on the dc pattern even though the always-true clause passes
    always = make_clause([0.0], [0.0, 0.0], -1.0, "gt")
    tie = make_clause([0.0], [1.0, -1.0], 0.0, "gt")
    res = check_implies(fix1, pat([DC]), LinearProperty((always, tie)))
    assert res.status == VIOLATED


def test_node_cap():
    # seed chosen so the uncapped search proves holds only after branching
    rng = np.random.default_rng(47)
    net = random_network(rng, input_dim=2, hidden=(4, 4))
    sigma = ActivationPattern.all_dc(net.hidden_sizes)
    prop = LinearProperty((random_clause(rng, net),))
    full = check_implies(net, sigma, prop)
    assert full.status == HOLDS
    assert full.stats.nodes > 5
    with pytest.raises(ResourceLimit):
        check_implies(net, sigma, prop, node_cap=2)


# -- validate_witness -----------------------------------------------------------

def test_validate_witness_fix1(fix1):
    p = prop_dominance(fix1)
    assert validate_witness(fix1, pat([DC]), p, [-1.0])
    assert not validate_witness(fix1, pat([ON]), p, [1.0])   # property holds there
    assert not validate_witness(fix1, pat([DC]), p, [3.0])   # outside the box
    assert not validate_witness(fix1, pat([ON]), p, [-1.0])  # pattern mismatch


# -- oracle equivalence ----------------------------------------------------------

def _oracle_trial(seed):
    rng = np.random.default_rng(seed)
    hidden = [(3,), (4,), (6,), (3, 3), (4, 3), (4, 4)][int(rng.integers(0, 6))]
    net = random_network(rng, input_dim=2, hidden=hidden)
    sigma, _ = random_prefix_pattern(rng, net)
    prop = LinearProperty((random_clause(rng, net),))
    res = check_implies(net, sigma, prop)
    want, _ = oracle_check(net, sigma, prop)
    return net, sigma, prop, res, want


@pytest.mark.parametrize("seed", range(60))
def test_oracle_equivalence(seed):
    net, sigma, prop, res, want = _oracle_trial(3000 + seed)
    assert res.status == want
    if res.status == VIOLATED:
        assert validate_witness(net, sigma, prop, res.witness)


@pytest.mark.parametrize("seed", range(25))
def test_monotonicity(seed):
    """Constraining a pattern further can only keep a held property held."""
    rng = np.random.default_rng(7000 + seed)
    net = random_network(rng, input_dim=2, hidden=(3, 3))
    box = net.input_box
    x = rng.uniform(box[:, 0], box[:, 1])
    from relucert import pattern_of

    complete = pattern_of(net, x)
    # chain of prefix-structured patterns from all-dc to complete
    chain = [ActivationPattern.all_dc(net.hidden_sizes)]
    statuses = [[DC] * n for n in net.hidden_sizes]
    for l, layer in enumerate(complete.statuses):
        for i, s in enumerate(layer):
            statuses[l][i] = s
            chain.append(ActivationPattern.of([list(r) for r in statuses]))
    prop = LinearProperty((random_clause(rng, net),))
    held = False
    for sigma in chain:
        status = check_implies(net, sigma, prop).status
        if held:
            assert status == HOLDS
        held = status == HOLDS
    for a, b in zip(chain, chain[1:]):
        assert is_subpattern(a, b)
