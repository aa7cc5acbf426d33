import math

import numpy as np
import pytest
from hypothesis import settings

from cuspflow.vahlen import k_from_sphere, make_a, make_flow, make_u, vahlen_product

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


def random_vahlen(n, rng):
    """u_x a_t k g_y with random parameters; covers all of G up to the M factor."""
    x = rng.normal(size=n + 1)
    x /= np.linalg.norm(x)
    return vahlen_product(
        [
            make_u(n, list(rng.normal(size=n))),
            make_a(n, float(rng.normal())),
            k_from_sphere(x),
            make_flow(n, float(rng.normal())),
        ]
    )


def random_sl2c(rng, size):
    g = rng.normal(size=(size, 2, 2)) + 1j * rng.normal(size=(size, 2, 2))
    return g / np.sqrt(np.linalg.det(g))[:, None, None]


def regular_point(n, rng, margin=0.2):
    """Group element whose sphere angles stay `margin` away from the coordinate singularities."""
    from cuspflow.vahlen import cartesian_from_angles

    theta = rng.uniform(margin, math.pi - margin, size=n)
    k = k_from_sphere(cartesian_from_angles(theta))
    return vahlen_product([make_u(n, list(rng.normal(size=n))), make_a(n, float(rng.normal())), k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
