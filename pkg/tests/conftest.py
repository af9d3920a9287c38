import numpy as np
import pytest

from fppdt.geometry import PointSet, Window, build_delaunay, sample_poisson


@pytest.fixture(scope="session")
def poisson_small():
    """~200 points on a 10x10 window; shared by structural tests."""
    return sample_poisson(Window.square(10.0), 2.0, seed=42)


@pytest.fixture(scope="session")
def small_graph(poisson_small):
    return build_delaunay(poisson_small)


@pytest.fixture(scope="session")
def unit_square_points():
    w = Window((-1.0, -1.0), (2.0, 2.0), 0.5)
    return PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), w)
