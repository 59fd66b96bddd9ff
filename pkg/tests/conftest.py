"""Shared fixtures: a cached surface factory so expensive grids build once."""

import numpy as np
import pytest

from hkverify.hypersurface import build_geometry, gen_perturbed_sphere, gen_sphere

_CACHE = {}


def _surface(kind, **kw):
    key = (kind, tuple(sorted(kw.items())))
    if key not in _CACHE:
        if kind == "sphere":
            graph = gen_sphere(kw["radius"], kw.get("offset", 0.0),
                               n=kw.get("n", 2), grid=kw["grid"])
        elif kind == "perturbed":
            graph = gen_perturbed_sphere(kw["radius"], kw["amp"], kw["mode"],
                                         n=kw.get("n", 2), grid=kw["grid"])
        else:
            raise ValueError(kind)
        _CACHE[key] = (graph, build_geometry(graph))
    return _CACHE[key]


@pytest.fixture(scope="session")
def surface():
    """Factory returning a cached (graph, geometry) pair for a named shape."""
    return _surface


@pytest.fixture
def rng():
    return np.random.default_rng(1729)
