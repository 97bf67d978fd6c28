import numpy as np
import pytest

from metastable import (
    IsotropicGaussian,
    build_graph,
    chain_closure,
    find_critical_points,
    get_objective,
    saddle_connections,
)

SIGMA2 = 2500.0  # sigma = 50 throughout the headline experiments


class Scene:
    def __init__(self, name):
        self.obj = get_objective(name)
        self.cps = find_critical_points(self.obj)
        self.conns = saddle_connections(self.obj, self.cps)
        self.noise = IsotropicGaussian(SIGMA2, self.obj.dim)
        self.graph = build_graph(self.cps, self.conns, self.noise)
        self.closed = chain_closure(self.graph)
        self.values = self.cps.values()


def camel_path_roles(scene):
    """Identify the camel path-graph nodes t - s_t - mid - s_mid - low.

    t is the global minimum, mid the highest-value minimum, low the third
    minimum; s_t joins t and mid, s_mid joins mid and low.
    """
    from metastable import Kind

    minima = sorted(
        (p for p in scene.cps if p.kind == Kind.MINIMUM), key=lambda p: p.value
    )
    t, low, mid = (p.index for p in minima)
    edges = scene.graph.edges
    saddles = [p.index for p in scene.cps if p.kind == Kind.SADDLE]
    (s_t,) = [s for s in saddles if (t, s) in edges and (mid, s) in edges]
    (s_mid,) = [s for s in saddles if (mid, s) in edges and (low, s) in edges]
    return {"t": t, "mid": mid, "low": low, "s_t": s_t, "s_mid": s_mid}


@pytest.fixture(scope="session")
def camel():
    return Scene("three_hump_camel_variant")


@pytest.fixture(scope="session")
def camel_roles(camel):
    return camel_path_roles(camel)


@pytest.fixture(scope="session")
def styblinski():
    return Scene("styblinski_tang_2d")


@pytest.fixture(scope="session")
def himmelblau():
    return Scene("himmelblau")


@pytest.fixture(scope="session")
def bowl():
    return Scene("quadratic_bowl")
