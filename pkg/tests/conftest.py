"""Pytest configuration and shared fixtures."""

import pytest

from lie.algebra import make_algebra
from lie.rng import make_rng
from network.model import init_params, parse_layers
from tasks.sp4 import gen_sp4_dataset

ALGEBRA_CASES = [("so3", None), ("sl3", None), ("sp4", None), ("gln", 3)]


@pytest.fixture
def rng():
    return make_rng(1234, "tests")


@pytest.fixture
def so3():
    return make_algebra("so3")


@pytest.fixture
def sp4():
    return make_algebra("sp4")


@pytest.fixture
def gl3():
    return make_algebra("gln", 3)


@pytest.fixture(params=ALGEBRA_CASES, ids=lambda case: case[0] if case[1] is None else f"gl{case[1]}")
def algebra(request):
    """Each algebra the layer properties are checked on."""
    name, n = request.param
    return make_algebra(name, n)


@pytest.fixture
def small_model(sp4):
    """A random four-layer sp4 model with two input channels."""
    specs = parse_layers("linear,relu,bracket,leaky_relu", 2, 4)
    return init_params(specs, seed=3, basis=sp4, head_hidden=6)


@pytest.fixture
def sp4_dataset():
    return gen_sp4_dataset(40, sigma=0.4, seed=11)


@pytest.fixture
def features(rng):
    """Factory for random ``[..., K, C]`` coordinate tensors."""

    def make(basis, *lead, channels=3, scale=1.0):
        return rng.normal(0.0, scale, size=(*lead, basis.K, channels))

    return make

