import math

import numpy as np
import pytest

from eslees import build_circle, build_flat_torus, build_icosphere, build_sphere


@pytest.fixture(scope="session")
def circle():
    return build_circle(8, 1.0)


@pytest.fixture(scope="session")
def torus():
    return build_flat_torus(4, 4, 2 * math.pi, 2 * math.pi)


@pytest.fixture(scope="session")
def sphere():
    return build_sphere(4, 1.0)


@pytest.fixture(scope="session")
def ico():
    return build_icosphere(2, 1.0)


@pytest.fixture(scope="session", params=["circle", "torus", "sphere", "ico"])
def any_disc(request):
    return request.getfixturevalue(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
