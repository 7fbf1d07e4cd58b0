import numpy as np
import pytest
from hypothesis import settings

from mmsobolev import _jit
from mmsobolev.space import DiscreteSpace

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run a test once per kernel backend."""
    old = _jit.set_backend(request.param)
    yield request.param
    _jit.set_backend(old)


@pytest.fixture
def two_node():
    return DiscreteSpace.from_edges([(0, 1, 1.0)], [1.0, 1.0])


@pytest.fixture
def path3():
    return DiscreteSpace.from_edges([(0, 1, 1.0), (1, 2, 1.0)], [1.0, 1.0, 1.0])


@pytest.fixture
def triangle():
    return DiscreteSpace.from_edges([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], [1.0, 1.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(0)
