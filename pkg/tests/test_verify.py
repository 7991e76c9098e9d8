import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sepconvex import verify
from sepconvex.func1d import Function1D, catalog_get
from sepconvex.kernels import Field2D, parabolic_kernel, smooth_kernel

NEG_XY = Field2D(lambda x, y: -x * y)
DIAG = (1 / math.sqrt(2), 1 / math.sqrt(2))


def test_grid_spec_validation():
    assert verify.GridSpec(-1, 1, 3).h == 1.0
    for bad in ((-1, 1, 2), (-1, 1, 4002), (1, -1, 11), (0, math.inf, 11)):
        with pytest.raises(ValueError):
            verify.GridSpec(*bad)


def test_margin_examples():
    m, v = verify.check_separate_convexity(NEG_XY, (-1, 1, 41))
    assert abs(m) <= 1e-12 and v == []
    sq = Field2D(lambda x, y: x * x + y * y)
    m, v = verify.check_separate_convexity(sq, (-1, 1, 41))
    assert m == pytest.approx(2 * 0.05 ** 2, rel=1e-9) and v == []
    neg = Field2D(lambda x, y: -x * x - y * y)
    m, v = verify.check_separate_convexity(neg, (-1, 1, 41))
    assert m == pytest.approx(-5e-3, rel=1e-9)
    assert len(v) == 2 * 41 * 39
    axis, fixed, pos, margin = v[0]
    assert axis in ("x", "y") and margin == pytest.approx(-5e-3, rel=1e-9)


def test_violation_coordinates():
    # a concave kink along x = 0.5 only
    f = Field2D(lambda x, y: -np.abs(x - 0.5))
    m, v = verify.check_separate_convexity(f, (0, 1, 11))
    assert m == pytest.approx(-0.2)
    assert {round(p, 12) for _, _, p, _ in v} == {0.5}
    assert all(axis == "x" for axis, *_ in v) and len(v) == 11


def test_trace_examples():
    t = verify.GridSpec(-2, 2, 201)
    assert verify.check_trace(parabolic_kernel(catalog_get("neg_square")),
                              catalog_get("neg_square"), t) <= 1e-9
    assert verify.check_trace(smooth_kernel(catalog_get("quadratic")),
                              catalog_get("quadratic"), t) <= 1e-9
    zero = Field2D(lambda x, y: np.zeros(np.broadcast(x, y).shape))
    assert verify.check_trace(zero, catalog_get("constant"), t) == 0.0
    assert verify.check_trace(zero, catalog_get("constant"), np.array([0.3, 0.7])) == 0.0


def test_directional_examples():
    d = verify.check_directional(NEG_XY, (0.0, 0.0), DIAG)
    assert d.verdict == verify.PASS and abs(d.total) <= 1e-5
    d = verify.check_directional(Field2D(lambda x, y: -np.abs(x + y) / 2), (0.0, 0.0), DIAG)
    assert d.verdict == verify.FAIL
    assert d.total == pytest.approx(-math.sqrt(2), rel=1e-12)
    # affine field: the quotients are exact at a dyadic point along an axis
    d = verify.check_directional(Field2D(lambda x, y: 3 * x - 2 * y + 1), (0.25, 0.5), (1.0, 0.0))
    assert d.verdict == verify.PASS and d.total == 0.0
    d = verify.check_directional(Field2D(lambda x, y: 3 * x - 2 * y + 1), (0.3, 0.1), DIAG)
    assert d.verdict == verify.PASS and abs(d.total) <= 1e-9


def test_directional_inconclusive_on_oscillation():
    # quotients alternate between -1 and -3/2 along the dyadic steps
    def fn(x, y):
        r = np.abs(x)
        k = np.round(-np.log2(np.where(r > 0, r, 1.0)))
        return -r * (1.0 + 0.5 * (k % 2))
    d = verify.check_directional(Field2D(fn), (0.0, 0.0), (1.0, 0.0))
    assert d.total == pytest.approx(-2.0)
    assert d.verdict == verify.INCONCLUSIVE
    rep = verify.verify_field(Field2D(fn), None, (-1, 1, 5), point=(0.0, 0.0), direction=(1.0, 0.0))
    assert rep.directional_check == verify.INCONCLUSIVE


def test_directional_argument_errors():
    with pytest.raises(ValueError, match="unit"):
        verify.check_directional(NEG_XY, (0, 0), (1, 1))
    with pytest.raises(ValueError, match="2-vectors"):
        verify.check_directional(NEG_XY, (0, 0, 0), (1, 0))


def test_report_structure_and_verdict():
    g = Function1D(lambda t: -t * t, name="neg_sq")
    rep = verify.verify_field(NEG_XY, g, (-1, 1, 51))
    assert rep.passed
    d = rep.as_dict()
    assert {"grid", "trace_max_abs_err", "convexity_min_margin", "margin_normalization",
            "violations", "directional_check", "passed"} <= set(d)
    assert d["grid"] == [-1.0, 1.0, 51]
    assert d["margin_normalization"] == pytest.approx(1e-8 + 1e-6 * 1.0)
    rep = verify.verify_field(Field2D(lambda x, y: -x * x - y * y), None, (-1, 1, 51))
    assert not rep.passed and rep.as_dict(max_violations=3)["violation_count"] > 3
    assert len(rep.as_dict(max_violations=3)["violations"]) == 3
    bad_trace = verify.verify_field(NEG_XY, catalog_get("quadratic"), (-1, 1, 51))
    assert not bad_trace.passed and bad_trace.trace_max_abs_err == pytest.approx(2.0)
    kink = verify.verify_field(Field2D(lambda x, y: -np.abs(x + y) / 2), None, (-1, 1, 51))
    assert kink.directional_check == verify.FAIL and not kink.passed


def test_tolerance_scales():
    vals = np.array([[10.0, -30.0]])
    assert verify.tol_conv(Field2D(lambda x, y: x, exact=True), vals) == pytest.approx(1e-8 + 3e-5)
    assert verify.tol_conv(Field2D(lambda x, y: x, exact=False), vals) == pytest.approx(3e-3)
    assert verify.tol_conv(Field2D(lambda x, y: x), np.zeros((2, 2))) == pytest.approx(1e-8 + 1e-6)


def test_non_finite_field_is_rejected():
    with np.errstate(divide="ignore", invalid="ignore"), pytest.raises(FloatingPointError):
        verify.check_separate_convexity(Field2D(lambda x, y: np.log(x)), (-1, 1, 5))


def test_grid_field_interpolates_nodes():
    xs = np.linspace(-1, 2, 7)
    ys = np.linspace(0, 1, 5)
    X, Y = np.meshgrid(xs, ys)
    f = verify.grid_field(xs, ys, X * Y)
    assert np.array_equal(f(X, Y), X * Y)
    assert f(0.25, 0.125) == pytest.approx(0.25 * 0.125)
    with pytest.raises(ValueError):
        verify.grid_field(xs, ys, (X * Y).T)


EXACT_FIELDS = [
    lambda x, y: -x * y,
    lambda x, y: x * y,
    lambda x, y: np.abs(x + y) / 2,
    lambda x, y: 2 * x - y + 3,
]


@given(st.sampled_from(range(len(EXACT_FIELDS))), st.floats(-5, -0.1), st.floats(0.1, 5),
       st.integers(3, 200))
def test_soundness_on_exact_fields(i, lo, hi, n):
    m, _ = verify.check_separate_convexity(Field2D(EXACT_FIELDS[i]), (lo, hi, n))
    assert m >= -1e-12 * (1 + max(abs(lo), hi)) ** 2


@given(st.floats(0.1, 3), st.integers(5, 100))
def test_scale_covariance(r, n):
    f = Field2D(lambda x, y: np.sin(x) * np.cos(y) + x * x)
    f10 = Field2D(lambda x, y: 10 * (np.sin(x) * np.cos(y) + x * x))
    m1, _ = verify.check_separate_convexity(f, (-r, r, n))
    m10, _ = verify.check_separate_convexity(f10, (-r, r, n))
    assert m10 == pytest.approx(10 * m1, rel=1e-9, abs=1e-12)


@given(st.integers(5, 60))
def test_refinement_keeps_convex_fields_passing(n):
    f = Field2D(lambda x, y: np.exp(x) + np.abs(y) - x * y)
    for k in (n, 2 * n - 1):
        assert verify.check_separate_convexity(f, (-1, 1, k))[1] == []
