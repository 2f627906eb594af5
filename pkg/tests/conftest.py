import numpy as np
from hypothesis import HealthCheck, settings, strategies as st

from typmatch.typicality import JointDistribution

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def permutations(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    return np.array(draw(st.permutations(list(range(n)))), dtype=np.int64)


@st.composite
def joints(draw, nx=2, ny=2, allow_zero=True):
    w = draw(st.lists(st.integers(0 if allow_zero else 1, 20), min_size=nx * ny, max_size=nx * ny)
             .filter(lambda v: sum(v) > 0))
    w = np.array(w, dtype=float)
    return JointDistribution((w / w.sum()).reshape(nx, ny))


def random_joint(rng, nx=2, ny=2, zeros=False):
    p = rng.dirichlet(np.ones(nx * ny))
    if zeros:
        p[rng.random(p.size) < 0.25] = 0
        if p.sum() == 0:
            p[0] = 1
    return JointDistribution((p / p.sum()).reshape(nx, ny))
