"""Shared helpers for the test suite."""

import os

import numpy as np

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def fixture_path(name: str) -> str:
    return os.path.abspath(os.path.join(FIXTURES, name))


def crossing_net():
    """1-D net with logit gap relu(x) - 0.5: class 0 wins only for x > 0.5,
    so the on-cell (x > 0) does NOT certify dominance and the else branch
    (complete cell plus affine dominance rows) is exercised."""
    from relucert import network_from_arrays

    return network_from_arrays(
        np.array([[-2.0, 2.0]]),
        [np.array([[1.0]]), np.array([[1.0], [0.0]])],
        [np.array([0.0]), np.array([-0.5, 0.0])],
    )


def random_network(rng: np.random.Generator, input_dim=2, hidden=(3,), classes=2,
                   box_half=2.0, scale=1.0):
    """Small random net for oracle comparisons; biases jittered so activation
    boundaries rarely pass through sample points."""
    from relucert import network_from_arrays

    sizes = [input_dim, *hidden, classes]
    weights = [rng.normal(size=(sizes[k + 1], sizes[k])) * scale for k in range(len(sizes) - 1)]
    biases = [rng.normal(size=sizes[k + 1]) * 0.5 for k in range(len(sizes) - 1)]
    box = np.array([[-box_half, box_half]] * input_dim)
    return network_from_arrays(box, weights, biases)
