import numpy as np
import pytest

from liepsido.groups import SU2, Torus

GROUPS = [Torus(1), Torus(2), SU2()]
GROUP_IDS = [repr(g) for g in GROUPS]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=GROUPS, ids=GROUP_IDS)
def group(request):
    return request.param


@pytest.fixture
def su2():
    return SU2()


@pytest.fixture
def t1():
    return Torus(1)
