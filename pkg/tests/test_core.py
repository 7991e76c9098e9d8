import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import qhull_lower
from sepconvex import _core_py, assemble, core
from sepconvex.func1d import catalog_get

compiled = pytest.importorskip("sepconvex._core")


@given(st.integers(0, 10 ** 6), st.integers(3, 400))
def test_lower_hull_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    s = np.sort(rng.uniform(0, 4, n))
    s = np.unique(s)
    v = rng.normal(size=s.size)
    if rng.uniform() < 0.3:
        v = np.round(v, 1)  # collinear triples
    a = compiled.lower_hull(s, v)
    b = _core_py.lower_hull(s, v)
    assert np.array_equal(a, b)
    ref = qhull_lower(s, v)
    assert np.allclose(np.interp(s, s[a], v[a]), np.interp(s, s[ref], v[ref]), atol=1e-12)


def test_lower_hull_small_inputs():
    for be in (compiled, _core_py):
        assert list(be.lower_hull(np.array([0.0]), np.array([1.0]))) == [0]
        assert list(be.lower_hull(np.array([0.0, 1.0]), np.array([1.0, 0.0]))) == [0, 1]
        # a point on the chord is dropped
        assert list(be.lower_hull(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 2.0]))) == [0, 2]


@pytest.fixture(scope="module")
def family():
    return assemble.touching_family(catalog_get("example4_g"), (-1.0, 1.0), 41, K_budget=1e3)


@given(st.integers(0, 10 ** 6), st.booleans())
def test_family_sup_backends_agree(family, seed, prune):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.5, 1.5, (7, 5))
    Y = rng.uniform(-1.5, 1.5, (7, 5))
    f = family
    args = (f.u, f.gu, f.dgu, f.Cu, f.seg_ptr, f.knots, f.a, f.c, f.cum)
    a = compiled.family_sup(np.ascontiguousarray(X), np.ascontiguousarray(Y), *args, prune)
    b = _core_py.family_sup(X, Y, *args, prune)
    assert np.allclose(np.reshape(a, X.shape), b, rtol=1e-13, atol=1e-13)


def test_family_sup_matches_members(family):
    X, Y = np.meshgrid(np.linspace(-1, 1, 9), np.linspace(-1, 1, 9))
    direct = np.max([family.member(m)(X, Y) for m in range(family.u.size)], axis=0)
    assert np.allclose(family(X, Y), direct, atol=1e-12)
    assert np.allclose(family(X, Y, prune=False), direct, atol=1e-12)


def test_dispatch_prefers_compiled():
    assert core.COMPILED == (core.backend is compiled)
