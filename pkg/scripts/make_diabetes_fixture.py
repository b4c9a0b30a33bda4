#!/usr/bin/env python3
"""Build and commit the diabetes-scale fixture: a synthetic 768-row binary
classification CSV plus a trained 8-12-10-2 network.

The committed artifacts must satisfy, and this script verifies before
writing:
  * the two-logit conversion agrees with the sklearn model on every row;
  * for every realized seed and logit factor in {0.1, 0.5, 0.9} the
    interpolant's initial check on the seed's own cell holds (the inference
    loop never reaches its else branch);
  * the baseline else-branch count is positive;
  * at logit factor 0.5, interpolant training support >= baseline on >= 60%
    of seeds and strictly greater on >= 20%;
  * the average-support sweep over {0.05, 0.1, 0.25, 0.5, 0.75, 0.9} peaks
    at an interior grid point;
  * every comparison row is error-free (each certificate already re-passes
    the built-in region-soundness resample).

Writes fixtures/diabetes_synth.csv, fixtures/diabetes_synth_net.json, and
fixtures/diabetes_expected.json.
"""

import json
import os

import numpy as np
from sklearn.datasets import make_classification
from sklearn.neural_network import MLPClassifier

from relucert import forward, network_from_arrays, network_to_json, pattern_of
from relucert.harness import (
    compare,
    dataset_from_arrays,
    load_dataset,
    realized_seeds,
)
from relucert.infer import DominanceProperty, build_interpolant
from relucert.verify import HOLDS, check_implies

DATA_SEED = 1
NET_SEED = 2
CLASS_SEP = 1.5
ALPHA = 1e-3
SWEEP_GRID = [0.05, 0.1, 0.25, 0.5, 0.75, 0.9]
CHECK_FACTORS = (0.1, 0.5, 0.9)
FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def train():
    X, y = make_classification(
        n_samples=768, n_features=8, n_informative=5, n_redundant=1,
        n_clusters_per_class=2, class_sep=CLASS_SEP, flip_y=0.02,
        random_state=DATA_SEED)
    Xs = (X - X.min(axis=0)) / (X.max(axis=0) - X.min(axis=0))
    clf = MLPClassifier(hidden_layer_sizes=(12, 10), activation="relu",
                        solver="lbfgs", alpha=ALPHA, max_iter=3000,
                        random_state=NET_SEED)
    clf.fit(Xs, y)
    # split the single sigmoid logit z into two softmax-style logits
    # (-z/2, +z/2) so the class-1 decision z > 0 becomes an argmax
    W1, W2, W3 = [w.T for w in clf.coefs_]
    b1, b2, b3 = clf.intercepts_
    W3 = np.vstack([-W3 / 2.0, W3 / 2.0])
    b3 = np.array([-float(b3[0]) / 2.0, float(b3[0]) / 2.0])
    net = network_from_arrays(np.array([[0.0, 1.0]] * 8), [W1, W2, W3],
                              [b1, b2, b3])
    return net, Xs, y, clf


def main():
    net, Xs, y, clf = train()
    acc = float(clf.score(Xs, y))
    preds = np.array([int(np.argmax(forward(net, x).logits)) for x in Xs])
    assert np.array_equal(preds, clf.predict(Xs)), "logit split broke predictions"

    data = dataset_from_arrays(Xs, y)
    seeds = realized_seeds(net, data)
    n = len(seeds.entries)
    print(f"accuracy={acc:.4f} seeds={n} tied_rows={seeds.tied_rows}")

    holds_count = 0
    for key, row in seeds.entries:
        x0 = data.features[row]
        target = int(np.argmax(forward(net, x0).logits))
        prop = DominanceProperty.for_net(net, target)
        sigma = pattern_of(net, x0)
        if check_implies(net, sigma, prop.to_linear(net)).status == HOLDS:
            holds_count += 1
        for lf in CHECK_FACTORS:
            spec = build_interpolant(net, x0, prop, lf)
            st = check_implies(net, sigma, spec.to_linear(net)).status
            assert st == HOLDS, f"initial check failed: seed {key} lf {lf}"
    else_count = n - holds_count
    print(f"baseline modes: holds={holds_count} else={else_count}")
    assert else_count > 0, "no else-branch seeds"

    rows = compare(net, data, SWEEP_GRID)
    assert all(r.error == "" for r in rows), "comparison rows carry errors"
    half = [r for r in rows if r.lf == 0.5]
    ge = sum(r.support_interp >= r.support_baseline for r in half) / len(half)
    gt = sum(r.support_interp > r.support_baseline for r in half) / len(half)
    print(f"lf=0.5 trend: ge={ge:.2f} gt={gt:.2f}")
    assert ge >= 0.60 and gt >= 0.20, "support trend thresholds not met"

    curve = []
    for lf in SWEEP_GRID:
        vals = [r.support_interp for r in rows if r.lf == lf]
        curve.append(float(np.mean(vals)))
    best = int(np.argmax(curve))
    print("sweep curve:", [round(v, 2) for v in curve], "argmax", best)
    assert 0 < best < len(SWEEP_GRID) - 1, "sweep maximum is not interior"

    os.makedirs(FIXTURES, exist_ok=True)
    csv_path = os.path.join(FIXTURES, "diabetes_synth.csv")
    with open(csv_path, "w") as f:
        f.write(",".join([f"f{j}" for j in range(8)] + ["outcome"]) + "\n")
        for xrow, label in zip(Xs, y):
            f.write(",".join(repr(float(v)) for v in xrow) + f",{int(label)}\n")
    with open(os.path.join(FIXTURES, "diabetes_synth_net.json"), "w") as f:
        json.dump(network_to_json(net), f, indent=2)
        f.write("\n")

    # committed CSV must round-trip through the loader bit-exactly
    loaded = load_dataset(csv_path, "outcome")
    assert np.array_equal(loaded.features, Xs), "CSV round trip changed features"
    assert np.array_equal(loaded.labels, y), "CSV round trip changed labels"

    expected = {
        "data_seed": DATA_SEED,
        "net_seed": NET_SEED,
        "class_sep": CLASS_SEP,
        "alpha": ALPHA,
        "accuracy": acc,
        "n_rows": 768,
        "n_seeds": n,
        "tied_rows": seeds.tied_rows,
        "holds_count": holds_count,
        "else_count": else_count,
        "ge_fraction_at_half": ge,
        "gt_fraction_at_half": gt,
        "sweep_grid": SWEEP_GRID,
        "sweep_avg_support": curve,
        "sweep_argmax": best,
    }
    with open(os.path.join(FIXTURES, "diabetes_expected.json"), "w") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")
    print("committed diabetes_synth.csv / diabetes_synth_net.json")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
