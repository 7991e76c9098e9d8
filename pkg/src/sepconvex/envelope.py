"""Parabolic envelopes of non-increasing non-positive profiles.

For a profile phi on [0, r] the envelope is the pointwise sup of the
downward parabolas ``a x^2 + c`` (a, c <= 0) lying below phi.  In the
variable ``s = x^2`` a parabola is a line, so when phi is stored as a
function that is piecewise linear in ``s`` the envelope is exactly the lower
convex hull of the sample points (s_j, phi_j), continued by the constant
phi(r).  The result is a :class:`PiecewiseParabola` whose integral against
``1/t^2`` is available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .func1d import Function1D

PROFILE_TOL = 1e-12
TERNARY_ITERS = 200
ORACLE_GRID = 2000


@dataclass(frozen=True, eq=False)
class Profile:
    """Non-increasing profile sampled on ``ys``; linear in ``y^2`` between samples."""

    ys: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        ys = np.asarray(self.ys, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if ys.ndim != 1 or ys.shape != phi.shape or ys.size < 2:
            raise ValueError("profile needs matching 1-D arrays of length >= 2")
        if ys[0] != 0.0 or np.any(np.diff(ys) <= 0):
            raise ValueError("profile grid must start at 0 and increase strictly")
        if not np.all(np.isfinite(phi)):
            raise ValueError("profile values must be finite")
        if np.any(phi > PROFILE_TOL) or abs(phi[0]) > PROFILE_TOL:
            raise ValueError("profile must be non-positive with phi(0) = 0")
        if np.any(np.diff(phi) > PROFILE_TOL):
            j = int(np.argmax(np.diff(phi)))
            raise ValueError(f"profile increases between y={ys[j]} and y={ys[j + 1]}")
        phi = np.minimum(phi, 0.0)
        phi[0] = 0.0
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "phi", np.minimum.accumulate(phi))

    @classmethod
    def from_function(cls, fn, r: float, n: int = 1025) -> "Profile":
        ys = np.linspace(0.0, float(r), n)
        vals = np.minimum(np.asarray(fn(ys), dtype=float), 0.0)
        vals[0] = 0.0
        return cls(ys, np.minimum.accumulate(vals))

    @property
    def r(self) -> float:
        return float(self.ys[-1])

    @property
    def flat_value(self) -> float:
        return float(self.phi[-1])

    def __call__(self, x):
        xa = np.abs(np.asarray(x, dtype=float))
        out = np.interp(xa * xa, self.ys * self.ys, self.phi)
        return out if out.ndim else float(out)

    def integral_over_x2(self, upper: float | None = None) -> float:
        """Exact ``int_0^upper phi(y)/y^2 dy`` for the s-linear interpolant."""
        upper = self.r if upper is None else min(float(upper), self.r)
        if upper <= 0.0:
            return 0.0
        s = self.ys * self.ys
        q = np.diff(self.phi) / np.diff(s)
        p = self.phi[:-1] - q * s[:-1]
        y0 = self.ys[:-1]
        y1 = np.minimum(self.ys[1:], upper)
        keep = y0 < upper
        p, q, y0, y1 = p[keep], q[keep], y0[keep], y1[keep]
        # first segment has p = 0 because phi(0) = 0
        inv = np.zeros_like(y0)
        inv[1:] = 1.0 / y0[1:] - 1.0 / y1[1:]
        return float(np.sum(p * inv) + np.sum(q * (y1 - y0)))


@dataclass(frozen=True, eq=False)
class PiecewiseParabola(Function1D):
    """Even function equal to ``a_k x^2 + c_k`` on ``[knots_k, knots_{k+1})``."""

    knots: np.ndarray = field(default_factory=lambda: np.zeros(1))
    a: np.ndarray = field(default_factory=lambda: np.zeros(1))
    c: np.ndarray = field(default_factory=lambda: np.zeros(1))
    cum: np.ndarray = field(default_factory=lambda: np.zeros(1))

    @classmethod
    def from_coeffs(cls, knots, a, c, name: str = "piecewise_parabola") -> "PiecewiseParabola":
        knots = np.asarray(knots, dtype=float)
        a = np.asarray(a, dtype=float)
        c = np.asarray(c, dtype=float)
        if knots[0] != 0.0 or np.any(np.diff(knots) <= 0) or not (knots.shape == a.shape == c.shape):
            raise ValueError("knots must start at 0 and increase; one (a, c) per knot")
        if c[0] != 0.0:
            raise ValueError("first segment must pass through the origin")
        x0, x1 = knots[:-1], knots[1:]
        seg = a[:-1] * (x1 - x0)
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = seg + np.where(c[:-1] != 0.0, c[:-1] * (1.0 / x0 - 1.0 / x1), 0.0)
        cum = np.concatenate(([0.0], np.cumsum(seg)))

        def index(s):
            return np.clip(np.searchsorted(knots, s, side="right") - 1, 0, knots.size - 1)

        def fn(x):
            s = np.abs(x)
            k = index(s)
            return a[k] * s * s + c[k]

        def d1(x):
            return 2.0 * a[index(np.abs(x))] * x

        def d2(x):
            return 2.0 * a[index(np.abs(x))]

        slope = float(np.max(np.abs(2.0 * a[:-1] * x1))) if knots.size > 1 else 0.0
        kinks = tuple(sorted({float(v) for k in knots[1:] for v in (k, -k)}))
        return cls(fn=fn, d1=d1, d2=d2, nondiff_points=kinks,
                   lipschitz_hint=((-math.inf, math.inf, slope),), name=name,
                   params={"segments": int(knots.size)},
                   knots=knots, a=a, c=c, cum=cum)

    def segment(self, x):
        return np.clip(np.searchsorted(self.knots, np.abs(x), side="right") - 1, 0, self.knots.size - 1)

    def integral_over_t2(self, x):
        """``int_0^|x| alpha(t)/t^2 dt`` in closed form."""
        s = np.abs(np.asarray(x, dtype=float))
        k = self.segment(s)
        xk, ck = self.knots[k], self.c[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where((ck != 0.0) & (s > 0), ck * (1.0 / np.where(xk > 0, xk, 1.0) - 1.0 / np.where(s > 0, s, 1.0)), 0.0)
        out = self.cum[k] + self.a[k] * (s - xk) + tail
        return out if out.ndim else float(out)

    def beta(self, x):
        s = np.abs(np.asarray(x, dtype=float))
        out = -s * self.integral_over_t2(s)
        return out if np.ndim(out) else float(out)

    def total_integral(self) -> float:
        """``int_0^inf alpha/t^2``; finite only when the last segment is flat."""
        if self.a[-1] != 0.0:
            return -math.inf if self.a[-1] < 0 else math.inf
        last = self.knots[-1]
        if last == 0.0:
            return 0.0 if self.c[-1] == 0.0 else -math.inf
        return float(self.cum[-1] + self.c[-1] / last)


@dataclass(frozen=True, eq=False)
class Envelope:
    alpha: PiecewiseParabola
    r: float
    flat_value: float
    profile: Profile

    def coeff(self, x) -> tuple[float, float]:
        """Coefficients (a_x, c_x) of an optimal parabola at ``x``."""
        if abs(x) >= self.r:
            return 0.0, self.flat_value
        k = int(self.alpha.segment(float(x)))
        return float(self.alpha.a[k]), float(self.alpha.c[k])

    def beta(self, x):
        return self.alpha.beta(x)


def parabolic_envelope(p: Profile) -> Envelope:
    s = p.ys * p.ys
    hull = core.lower_hull(s, p.phi)
    hs, hv = s[hull], p.phi[hull]
    slopes = np.diff(hv) / np.diff(hs)
    a = np.concatenate((np.minimum(slopes, 0.0), [0.0]))
    c = np.concatenate((hv[:-1] - a[:-1] * hs[:-1], [p.flat_value]))
    c[0] = 0.0
    c = np.minimum(c, 0.0)
    knots = np.sqrt(hs)
    return Envelope(PiecewiseParabola.from_coeffs(knots, a, c, name="envelope"),
                    p.r, p.flat_value, p)


def _inner(p: Profile, a: float) -> float:
    return min(0.0, float(np.min(p.phi - a * p.ys * p.ys)))


def solve_envelope_at(p: Profile, x: float) -> tuple[float, float, float]:
    """Ternary search for the optimal parabola at ``x``; returns (alpha, a, c)."""
    x = abs(float(x))
    if x == 0.0:
        return 0.0, 0.0, 0.0
    lo, hi = 2.0 * float(np.min(p.phi)) / (x * x) - 1.0, 0.0
    for _ in range(TERNARY_ITERS):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if m1 * x * x + _inner(p, m1) < m2 * x * x + _inner(p, m2):
            lo = m1
        else:
            hi = m2
    a = 0.5 * (lo + hi)
    c = _inner(p, a)
    return a * x * x + c, a, c


def envelope_oracle(p: Profile, x: float, n: int = ORACLE_GRID) -> float:
    """Brute force over an (a, c) grid; never above the true envelope."""
    x = abs(float(x))
    if x == 0.0:
        return 0.0
    mn = float(np.min(p.phi))
    if mn == 0.0:
        return 0.0
    s = p.ys * p.ys
    a_grid = np.linspace(2.0 * mn / (x * x) - 1.0, 0.0, n)
    c_grid = np.linspace(mn, 0.0, n)
    best = -math.inf
    for chunk in np.array_split(a_grid, max(1, n // 200)):
        cmax = np.minimum(np.min(p.phi[None, :] - chunk[:, None] * s[None, :], axis=1), 0.0)
        k = np.searchsorted(c_grid, cmax + 1e-15, side="right") - 1
        ok = k >= 0
        if np.any(ok):
            best = max(best, float(np.max(chunk[ok] * x * x + c_grid[k[ok]])))
    return best


def envelope_integral_bound_check(p: Profile, e: Envelope) -> tuple[float, float, bool]:
    lhs = e.alpha.total_integral()
    rhs = 2.0 * p.flat_value / p.r + 3.0 * p.integral_over_x2()
    return lhs, rhs, bool(lhs >= rhs - 1e-6)


def phi_profile(g: Function1D, u: float, window: tuple[float, float], n: int = 2049) -> Profile:
    """Tangent-gap profile of ``g`` at ``u`` restricted to ``window``."""
    a, b = map(float, window)
    if not a < u < b:
        raise ValueError(f"center {u} outside the open window ({a}, {b})")
    if not g.is_differentiable_at(u):
        raise ValueError(f"g is not differentiable at {u}")
    r = b - a
    # the distances to both window ends are where one side of the gap stops
    t = np.unique(np.concatenate((np.linspace(0.0, r, n), [u - a, b - u])))
    gu = float(g(u))
    du = float(g.deriv(u))

    def gap(tt):
        pts = u + tt
        inside = (pts >= a) & (pts <= b)
        out = np.full(tt.shape, math.inf)
        out[inside] = g(pts[inside]) - gu - du * tt[inside]
        return out

    vals = np.minimum(np.minimum(gap(t), gap(-t)), 0.0)
    vals[0] = 0.0
    return Profile(t, np.minimum.accumulate(vals))
