import numpy as np
import pytest

from curvflow.elements import ElementKind
from curvflow.fespace import build_space
from curvflow.mesh import build_disk_mesh, build_interval_mesh
from curvflow.model import FlowRegime
from curvflow.oracle import radial_solve

_PROFILE_CACHE = {}


def cached_profile(regime: FlowRegime, eps: float, R: float, n: int, resolution: int):
    key = (regime.sigma, regime.alpha, eps, R, n, resolution)
    if key not in _PROFILE_CACHE:
        _PROFILE_CACHE[key] = radial_solve(regime, eps, R, n, resolution=resolution)
    return _PROFILE_CACHE[key]


@pytest.fixture(scope="session")
def interval_mesh():
    return build_interval_mesh(1.0, 8)


@pytest.fixture(scope="session")
def disk_mesh():
    return build_disk_mesh(1.0, 0.45, q=1)


@pytest.fixture(scope="session")
def hermite3_space(interval_mesh):
    return build_space(interval_mesh, ElementKind("hermite", 3), constrained=False)


@pytest.fixture(scope="session")
def hermite5_space(interval_mesh):
    return build_space(interval_mesh, ElementKind("hermite", 5), constrained=True)


@pytest.fixture(scope="session")
def argyris_space(disk_mesh):
    return build_space(disk_mesh, ElementKind("argyris", 5), constrained=True)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
