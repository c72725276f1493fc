import numpy as np
import pytest

from riemann_newton.manifolds import make_manifold

# (kind, dim) pairs covered by the geometry property suite
GEOMETRIES = [
    ("sphere", 3),
    ("sphere", 10),
    ("spd", 2),
    ("spd", 5),
    ("hyperboloid", 2),
    ("euclidean", 5),
]


def geometry_id(g):
    return f"{g[0]}{g[1]}"


def bounded_tangent(m, p, rng, max_norm):
    """Tangent vector at ``p`` with norm uniform-ish in (0, max_norm)."""
    v = m.random_unit_tangent(p, rng)
    return rng.uniform(0.05, 1.0) * max_norm * v


def sample_triple(m, rng, reach=1.5):
    """Random ``(p, q, v)`` with ``q`` inside the injectivity ball of ``p``."""
    p = m.random_point(rng)
    radius = min(reach, 0.9 * m.injectivity_radius(p))
    q = m.exp(p, bounded_tangent(m, p, rng, radius))
    v = m.random_tangent(p, rng)
    return p, q, v


@pytest.fixture(params=GEOMETRIES, ids=geometry_id)
def manifold(request):
    return make_manifold(*request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
