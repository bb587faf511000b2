import numpy as np
import pytest

import entrodiff as ed


@pytest.fixture
def spec3():
    """Three species, alpha = (1, 1), first species non-diffusing."""
    return ed.SystemSpec(alpha=(1, 1), d=(0.0, 1.0, 1.0))


@pytest.fixture
def spec3_all():
    """Three species, all diffusing."""
    return ed.SystemSpec(alpha=(1, 1), d=(1.0, 1.0, 1.0))


@pytest.fixture
def grid64():
    return ed.Grid(lengths=(1.0,), n=(64,))


@pytest.fixture
def grid256():
    return ed.Grid(lengths=(1.0,), n=(256,))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_positive_state(spec, grid, rng, lo=0.2, hi=3.0):
    """Smooth strictly positive random state (low-frequency cosines)."""
    x = grid.cell_centers(0)
    a = np.empty((spec.m,) + grid.shape)
    for i in range(spec.m):
        base = rng.uniform(lo + 0.5, hi)
        field = np.full(grid.shape, base)
        for k in range(1, 4):
            c = rng.uniform(-0.3, 0.3) * base
            if grid.dim == 1:
                field = field + c * np.cos(np.pi * k * x / grid.lengths[0])
            else:
                xs, ys = grid.coordinate_fields()
                field = field + c * np.cos(np.pi * k * xs / grid.lengths[0]) * np.cos(
                    np.pi * k * ys / grid.lengths[1]
                )
        a[i] = np.maximum(field, lo)
    return ed.StateFields(t=0.0, a=a)
