import pytest

from relucert import load_network
from util import fixture_path


@pytest.fixture(scope="session")
def fix1():
    """1-D net: one hidden neuron h = relu(x), logits (h, -h)."""
    return load_network(fixture_path("fix1.json"))


@pytest.fixture(scope="session")
def fix2():
    """2-4-2 illustration net (committed, generated by scripts/make_illustration_fixture.py)."""
    return load_network(fixture_path("fix2.json"))
