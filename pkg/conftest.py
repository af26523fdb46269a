import pytest

from lib.bodies import ball, cube, ellipsoid
from lib.sphere_quadrature import make_grid
from lib.zonal_measures import discrete_poles, equatorial, lebesgue


@pytest.fixture(scope="session")
def grid():
    return make_grid(3, 16)


@pytest.fixture(scope="session")
def coarse_grid():
    return make_grid(3, 8)


@pytest.fixture
def unit_cube():
    return cube(1.0)


@pytest.fixture
def unit_ball():
    return ball(1.0)


@pytest.fixture
def prolate():
    return ellipsoid([2.0, 1.0, 1.0])


@pytest.fixture
def half_measures():
    return {
        "discrete": discrete_poles(0.5),
        "equatorial": equatorial(0.5),
        "lebesgue": lebesgue(0.5),
    }
