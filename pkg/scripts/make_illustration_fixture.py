#!/usr/bin/env python3
"""Search for and commit the 2-4-2 illustration fixture (fixtures/fix2.json).

Requirements the committed network must meet, all verified here by brute
force before anything is written:
  * at the committed seed (1, 0): prediction is strict, the baseline takes
    the holds branch, and greedy minimization leaves exactly 2 of the 4
    hidden neurons constrained;
  * at the committed logit factor, the interpolant region keeps exactly 1
    neuron constrained;
  * the largest inscribed box of the interpolant region has volume >= the
    baseline region's box;
  * some other point of the input box sends the baseline to the else branch
    (its cell is crossed by the class separator);
  * relaxing any single constrained neuron of either returned pattern flips
    the check to violated (greedy minimality, confirmed by the enumeration
    oracle as well as the in-repo engine).

Expected values land in fixtures/fix2_expected.json for the test suite.
"""

import itertools
import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))
from bruteforce import oracle_check  # noqa: E402

from relucert import (  # noqa: E402
    forward,
    network_from_arrays,
    network_to_json,
    pattern_of,
    relax,
)
from relucert.geometry import log_volume, max_box_volume  # noqa: E402
from relucert.infer import (  # noqa: E402
    MODE_BASELINE_AFFINE,
    MODE_BASELINE_MINIMAL,
    DominanceProperty,
    build_interpolant,
    get_convex_region_baseline,
    infer_region_interpolant,
    region_polytope,
)
from relucert.verify import HOLDS, VIOLATED, check_implies  # noqa: E402
from relucert.viz import enumerate_cells  # noqa: E402

SEED_POINT = np.array([1.0, 0.0])
LOGIT_FACTOR = 0.5
BOX = np.array([[-2.0, 2.0], [-2.0, 2.0]])
FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def candidate(rng):
    w1 = rng.normal(size=(4, 2))
    b1 = rng.normal(size=4) * 0.5
    w2 = rng.normal(size=(2, 4))
    b2 = rng.normal(size=2) * 0.5
    return network_from_arrays(BOX, [w1, w2], [b1, b2])


def else_branch_seed(net, prop_target_free=True):
    """First grid point whose cell fails dominance for its own predicted
    class (the baseline else branch)."""
    for x0v in np.linspace(-1.8, 1.8, 13):
        for x1v in np.linspace(-1.8, 1.8, 13):
            x0 = np.array([x0v, x1v])
            logits = forward(net, x0).logits
            if abs(logits[0] - logits[1]) < 1e-6:
                continue
            target = int(np.argmax(logits))
            prop = DominanceProperty.for_net(net, target)
            cert = get_convex_region_baseline(net, prop, x0)
            if cert.mode == MODE_BASELINE_AFFINE:
                return x0, target
    return None, None


def evaluate(net):
    logits = forward(net, SEED_POINT).logits
    if abs(logits[0] - logits[1]) < 1e-3:
        return None
    target = int(np.argmax(logits))
    prop = DominanceProperty.for_net(net, target)

    base = get_convex_region_baseline(net, prop, SEED_POINT)
    if base.mode != MODE_BASELINE_MINIMAL:
        return None
    if base.pattern.num_constrained != 2:
        return None

    interp = infer_region_interpolant(net, SEED_POINT, prop, LOGIT_FACTOR)
    if interp.pattern.num_constrained != 1:
        return None

    box_base = max_box_volume(region_polytope(net, base), BOX)
    box_interp = max_box_volume(region_polytope(net, interp), BOX)
    if log_volume(box_interp) < log_volume(box_base):
        return None

    else_seed, else_target = else_branch_seed(net)
    if else_seed is None:
        return None

    return {
        "target": target,
        "prop": prop,
        "base": base,
        "interp": interp,
        "logvol_base": log_volume(box_base),
        "logvol_interp": log_volume(box_interp),
        "else_seed": else_seed,
        "else_target": else_target,
    }


def brute_force_verify(net, found):
    """Independent confirmation of every committed claim."""
    prop = found["prop"].to_linear(net)
    spec = build_interpolant(net, SEED_POINT, found["prop"], LOGIT_FACTOR)
    interp_prop = spec.to_linear(net)

    for cert, linear, label in ((found["base"], prop, "baseline"),
                                (found["interp"], interp_prop, "interpolant")):
        status, _ = oracle_check(net, cert.pattern, linear)
        assert status == HOLDS, f"{label} pattern fails its property by oracle"
        assert check_implies(net, cert.pattern, linear).status == HOLDS
        for (l, i, _) in cert.pattern.constrained():
            relaxed = relax(cert.pattern, l, i)
            st_oracle, _ = oracle_check(net, relaxed, linear)
            st_engine = check_implies(net, relaxed, linear).status
            assert st_oracle == VIOLATED and st_engine == VIOLATED, (
                f"{label} pattern is not greedily minimal at neuron ({l},{i})")

    # else-branch seed: its complete cell must NOT imply dominance
    else_prop = DominanceProperty.for_net(net, found["else_target"]).to_linear(net)
    sigma = pattern_of(net, found["else_seed"])
    st, _ = oracle_check(net, sigma, else_prop)
    assert st == VIOLATED, "else seed's cell implies dominance after all"

    # interpolant guarantee at the committed seed for a spread of factors
    sigma0 = pattern_of(net, SEED_POINT)
    for lf in (0.1, 0.5, 0.9):
        sp = build_interpolant(net, SEED_POINT, found["prop"], lf)
        st, _ = oracle_check(net, sigma0, sp.to_linear(net))
        assert st == HOLDS, f"interpolant initial check fails at lf={lf}"


def main():
    for attempt in itertools.count():
        rng = np.random.default_rng(attempt)
        net = candidate(rng)
        found = evaluate(net)
        if found is None:
            continue
        brute_force_verify(net, found)
        cells = enumerate_cells(net, (-2.0, 2.0, -2.0, 2.0),
                                (found["target"],
                                 found["prop"].rivals[0]))
        os.makedirs(FIXTURES, exist_ok=True)
        net_path = os.path.join(FIXTURES, "fix2.json")
        with open(net_path, "w") as f:
            json.dump(network_to_json(net), f, indent=2)
            f.write("\n")
        expected = {
            "search_seed": attempt,
            "seed_point": [float(v) for v in SEED_POINT],
            "target": found["target"],
            "logit_factor": LOGIT_FACTOR,
            "baseline_mode": MODE_BASELINE_MINIMAL,
            "baseline_constrained": 2,
            "baseline_pattern_key": found["base"].pattern.key(),
            "interpolant_constrained": 1,
            "interpolant_pattern_key": found["interp"].pattern.key(),
            "logvol_baseline_box": found["logvol_base"],
            "logvol_interpolant_box": found["logvol_interp"],
            "else_seed": [float(v) for v in found["else_seed"]],
            "else_target": found["else_target"],
            "n_feasible_cells": len(cells.cells),
        }
        with open(os.path.join(FIXTURES, "fix2_expected.json"), "w") as f:
            json.dump(expected, f, indent=2)
            f.write("\n")
        print(f"committed fix2.json from search seed {attempt}")
        print(json.dumps(expected, indent=2))
        return 0


if __name__ == "__main__":
    raise SystemExit(main())
