import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import lp_envelope, qhull_lower
from sepconvex import core
from sepconvex.envelope import (PiecewiseParabola, Profile, envelope_integral_bound_check,
                                envelope_oracle, parabolic_envelope, phi_profile, solve_envelope_at)
from sepconvex.func1d import EX4_CENTERS, catalog_get


def random_profile(seed, n=None, r=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(8, 80))
    r = r or float(rng.uniform(0.3, 3.0))
    ys = np.concatenate(([0.0], np.sort(rng.uniform(0, r, n - 2)), [r]))
    ys = np.unique(ys)
    drops = rng.exponential(1.0, ys.size - 1) * (rng.uniform(size=ys.size - 1) < 0.6)
    phi = np.concatenate(([0.0], -np.cumsum(drops)))
    return Profile(ys, phi)


profiles = st.integers(0, 10 ** 6).map(random_profile)


def test_profile_validation():
    with pytest.raises(ValueError):
        Profile(np.array([0.0, 1.0]), np.array([0.0, 0.5]))
    with pytest.raises(ValueError):
        Profile(np.array([0.0, 1.0, 2.0]), np.array([0.0, -1.0, -0.5]))
    with pytest.raises(ValueError):
        Profile(np.array([0.1, 1.0]), np.array([0.0, -1.0]))


def test_square_profile_is_its_own_envelope():
    p = Profile.from_function(lambda y: -y * y, 1.0)
    e = parabolic_envelope(p)
    xs = np.linspace(0, 1, 101)
    assert np.allclose(e.alpha(xs), -xs * xs, atol=1e-12)
    assert np.all(e.alpha(np.linspace(1, 5, 9)) == -1.0)
    assert envelope_oracle(p, 0.5) == pytest.approx(-0.25, abs=2e-3)
    lhs, rhs, holds = envelope_integral_bound_check(p, e)
    assert lhs == pytest.approx(-2.0, abs=1e-6) and rhs == pytest.approx(-5.0, abs=1e-3) and holds


def test_zero_profile():
    p = Profile(np.linspace(0, 1, 11), np.zeros(11))
    e = parabolic_envelope(p)
    assert np.all(e.alpha(np.linspace(0, 3, 31)) == 0.0)
    assert envelope_oracle(p, 0.7) == 0.0
    assert envelope_integral_bound_check(p, e) == (0.0, 0.0, True)


def test_ramp_profile():
    # phi = -max(0, y - 1/2): the best parabola through (1, -1/2) gives -x^2/2
    p = Profile.from_function(lambda y: -np.maximum(0.0, y - 0.5), 1.0, n=4097)
    e = parabolic_envelope(p)
    xs = np.linspace(0.01, 1.0, 100)
    assert np.allclose(e.alpha(xs), -xs * xs / 2, atol=1e-9)
    assert e.alpha(1.0) == pytest.approx(-0.5)
    oracle = np.array([envelope_oracle(p, x) for x in xs[::10]])
    assert np.all(np.abs(oracle - e.alpha(xs[::10])) <= 5e-3)


def test_linear_profile_oracle_at_r():
    p = Profile.from_function(lambda y: -y, 2.0)
    assert envelope_oracle(p, 2.0) == pytest.approx(-2.0, abs=2e-3)


def test_hull_matches_qhull():
    for seed in range(20):
        p = random_profile(seed)
        s = p.ys ** 2
        mine = core.lower_hull(s, p.phi)
        ref = qhull_lower(s, p.phi)
        # compare the hull as a function, collinear points may differ
        assert np.allclose(np.interp(s, s[mine], p.phi[mine]), np.interp(s, s[ref], p.phi[ref]),
                           atol=1e-12)


@given(profiles)
def test_envelope_against_linear_program(p):
    e = parabolic_envelope(p)
    for x in np.linspace(0.0, 1.2 * p.r, 13)[1:]:
        assert e.alpha(x) == pytest.approx(lp_envelope(p.ys, p.phi, x), abs=1e-9 * (1 + abs(e.alpha(x))))


@given(profiles)
def test_envelope_properties(p):
    e = parabolic_envelope(p)
    ys = np.linspace(0, p.r, 300)
    assert np.all(e.alpha(ys) <= p(ys) + 1e-12)
    assert e.alpha(0.0) == 0.0
    assert np.all(e.alpha(np.linspace(p.r, 3 * p.r, 7)) == p.flat_value)
    coeffs = np.array([e.coeff(x) for x in ys[1:]])
    assert np.all(np.diff(coeffs[:, 0]) >= -1e-9)
    assert np.all(coeffs <= 0.0)
    assert np.allclose(coeffs[:, 0] * ys[1:] ** 2 + coeffs[:, 1], e.alpha(ys[1:]), atol=1e-12)
    lhs, rhs, holds = envelope_integral_bound_check(p, e)
    assert holds


@given(profiles)
def test_envelope_is_lipschitz_with_three_m(p):
    e = parabolic_envelope(p)
    xs = np.geomspace(1e-6, 2 * p.r, 2000)
    M = float(np.max(-e.alpha(xs) / xs))
    slopes = np.abs(np.diff(e.alpha(xs)) / np.diff(xs))
    assert np.all(slopes <= 3 * M * (1 + 1e-9) + 1e-12)


@given(profiles)
def test_derivative_relation(p):
    e = parabolic_envelope(p)
    xs = np.linspace(0, p.r, 200)[1:-1]
    kn = e.alpha.knots
    xs = xs[np.min(np.abs(xs[:, None] - kn[None, :]), axis=1) > 1e-4]
    h = 1e-7
    d = (e.alpha(xs + h) - e.alpha(xs - h)) / (2 * h)
    a = np.array([e.coeff(x)[0] for x in xs])
    assert np.all(np.abs(d / xs - 2 * a) <= 1e-3 * (1 + np.abs(a)))


def test_envelope_dominates_feasible_parabolas():
    rng = np.random.default_rng(7)
    for seed in range(5):
        p = random_profile(seed)
        e = parabolic_envelope(p)
        s = p.ys ** 2
        a = -rng.exponential(5.0, 2000)
        c = np.minimum(0.0, np.min(p.phi[None, :] - a[:, None] * s[None, :], axis=1))
        x = rng.uniform(0, 1.5 * p.r, 2000)
        assert np.all(a * x * x + c <= e.alpha(x) + 1e-12)


def test_ternary_solve_agrees_with_hull():
    for seed in range(5):
        p = random_profile(seed)
        e = parabolic_envelope(p)
        for x in np.linspace(0.05, p.r, 7):
            val, a, c = solve_envelope_at(p, x)
            assert val == pytest.approx(e.alpha(x), abs=1e-7)


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_alpha_over_x_vanishes_at_zero(eps):
    ys = np.concatenate(([0.0], np.geomspace(1e-12, 1.0, 4000)))
    p = Profile(ys, -ys ** 1.5)
    e = parabolic_envelope(p)
    d0 = eps ** 2  # phi(y) >= -eps y on [0, d0]
    delta = -eps * d0 ** 2 / (2 * p.flat_value)
    xs = np.geomspace(delta * 1e-3, delta, 50)
    assert np.all(e.alpha(xs) >= -eps * xs)


def test_closed_form_integral_over_t2():
    pp = PiecewiseParabola.from_coeffs([0, 1, 2], [-1.0, -0.5, 0.0], [0.0, -0.5, -2.5])
    # int_0^1 -1 dt + int_1^1.5 (-0.5 - 0.5/t^2) dt
    expected = -1 + (-0.25 - 0.5 * (1 - 1 / 1.5))
    assert pp.integral_over_t2(1.5) == pytest.approx(expected)
    assert pp.beta(1.5) == pytest.approx(-1.5 * expected)
    with pytest.raises(ValueError):
        PiecewiseParabola.from_coeffs([0, 1], [-1.0, 0.0], [-1.0, 0.0])


def test_phi_profile_examples():
    p = phi_profile(catalog_get("quadratic"), 0.3, (-1, 1))
    assert np.all(p.phi == 0.0)
    p = phi_profile(catalog_get("neg_square"), 0.0, (-1, 1))
    ys = np.linspace(0, 1, 33)
    assert np.allclose(p(ys), -ys * ys, atol=1e-12)
    assert p.r == 2.0


def test_phi_profile_of_neg_abs_against_grid_min():
    g = catalog_get("neg_abs")
    for window in ((0.0, 1.0), (-1.0, 1.0)):
        p = phi_profile(g, 0.5, window)
        a, b = window
        for x in (0.2, 0.6, 0.9):
            t = np.linspace(-x, x, 20001)
            t = t[(0.5 + t >= a) & (0.5 + t <= b)]
            oracle = min(0.0, float(np.min(g(0.5 + t) - g(0.5) - g.deriv(0.5) * t)))
            assert p(x) == pytest.approx(oracle, abs=1e-3)
    # on [-1, 1] the kink at 0 is reachable: phi(0.6) = -0.2
    assert phi_profile(g, 0.5, (-1.0, 1.0))(0.6) == pytest.approx(-0.2, abs=1e-3)


def test_phi_profile_errors():
    with pytest.raises(ValueError):
        phi_profile(catalog_get("neg_abs"), 0.0, (-1, 1))
    with pytest.raises(ValueError):
        phi_profile(catalog_get("neg_square"), 2.0, (-1, 1))


def test_example4_profiles_satisfy_the_bound():
    g = catalog_get("example4_g")
    for u in EX4_CENTERS:
        p = phi_profile(g, u, (-1, 1))
        assert envelope_integral_bound_check(p, parabolic_envelope(p))[2]
