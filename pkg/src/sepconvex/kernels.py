"""Explicit separately convex extension kernels.

Each builder returns a :class:`Field2D`.  Inputs are one-dimensional
functions on the diagonal (alpha) and antidiagonal (beta); the kernels are
affine on every axis-parallel segment joining the two diagonals, and convex
across them when the monotonicity preconditions hold.  Preconditions are
certified on log-spaced test grids and a kernel is refused, not silently
built, when one fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate

from ._quad import CumulativeIntegral
from .diagnostics import CONVERGENT, classify, default_schedule
from .func1d import DomainError, Function1D

MONO_SLACK = 1e-9
TEST_POINTS = 2048
LOG_LOWER = 1e-4
CHECK_HALVINGS = 60


class KernelPreconditionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Field2D:
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    domain: tuple[float, float, float, float] | None = None
    provenance: Mapping[str, object] = field(default_factory=dict)
    exact: bool = True
    open_domain: bool = False

    def _check(self, x: np.ndarray, y: np.ndarray) -> None:
        if self.domain is None:
            return
        x0, x1, y0, y1 = self.domain
        if self.open_domain:
            bad = (x <= x0) | (x >= x1) | (y <= y0) | (y >= y1)
        else:
            bad = (x < x0) | (x > x1) | (y < y0) | (y > y1)
        if np.any(bad):
            raise DomainError(f"field evaluated outside its domain {self.domain}")

    def eval(self, x, y):
        xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        self._check(xa, ya)
        out = np.asarray(self.fn(xa, ya), dtype=float)
        return out if out.ndim else float(out)

    __call__ = eval

    def trace(self, t):
        return self.eval(t, t)


def _deriv(f: Function1D, x: np.ndarray) -> np.ndarray:
    if f.d1 is not None:
        return np.asarray(f.d1(x), dtype=float)
    h = 1e-6 * np.maximum(1.0, np.abs(x))
    return (f.fn(x + h) - f.fn(x - h)) / (2.0 * h)


def _test_grid(radius: float, kinks=()) -> np.ndarray:
    xs = np.geomspace(LOG_LOWER * radius, radius, TEST_POINTS)
    k = np.abs(np.asarray(kinks, dtype=float))
    if k.size:
        xs = xs[np.min(np.abs(xs[:, None] - k[None, :]), axis=1) > 1e-9 * radius]
    return xs


def _first_decrease(name: str, xs: np.ndarray, vals: np.ndarray) -> None:
    scale = 1.0 + float(np.max(np.abs(vals)))
    drops = np.diff(vals) < -MONO_SLACK * scale
    if np.any(drops):
        j = int(np.argmax(drops))
        raise KernelPreconditionError(
            f"{name} decreases between x={xs[j]:.6g} and x={xs[j + 1]:.6g} "
            f"({vals[j]:.6g} -> {vals[j + 1]:.6g})")


@dataclass(frozen=True)
class KernelInputs:
    alpha1: Function1D
    alpha2: Function1D
    beta1: Function1D
    beta2: Function1D


def check_kernel_inputs(k: KernelInputs, radius: float = 2.0) -> None:
    """Evenness, vanishing slope at 0 and the four monotone combinations."""
    named = {"alpha1": k.alpha1, "alpha2": k.alpha2, "beta1": k.beta1, "beta2": k.beta2}
    kinks = [p for f in named.values() for p in f.nondiff_points]
    xs = _test_grid(radius, kinks)
    for name, f in named.items():
        v, w = f(xs), f(-xs)
        if np.max(np.abs(v - w)) > 1e-9 * (1.0 + np.max(np.abs(v))):
            raise KernelPreconditionError(f"{name} is not even")
        small = xs[:8]
        if np.max(np.abs(f(small)) / small) > 1e-2 * (1.0 + np.max(np.abs(v))):
            raise KernelPreconditionError(f"{name}(x)/x does not vanish at 0")
    for i, al in ((1, k.alpha1), (2, k.alpha2)):
        for j, be in ((1, k.beta1), (2, k.beta2)):
            a, b = al(xs), be(xs)
            da, db = _deriv(al, xs), _deriv(be, xs)
            _first_decrease(f"alpha{i}' + (beta{j} - alpha{i})/x", xs, da + (b - a) / xs)
            _first_decrease(f"beta{j}' + (alpha{i} - beta{j})/x", xs, db + (a - b) / xs)


def generic_kernel(k: KernelInputs, check: bool = True, radius: float = 2.0) -> Field2D:
    if check:
        check_kernel_inputs(k, radius)
    a1, a2, b1, b2 = k.alpha1, k.alpha2, k.beta1, k.beta2

    def fn(x, y):
        out = np.zeros(np.broadcast(x, y).shape)
        ax, ay = np.abs(x), np.abs(y)
        cases = (
            ((x >= ay) & (x != 0), x, y, a1, b1),
            ((x <= -ay) & (x != 0), x, y, a2, b2),
            (y > ax, y, x, a1, b2),
            (y < -ax, y, x, a2, b1),
        )
        done = np.zeros(out.shape, dtype=bool)
        for mask, m, o, al, be in cases:
            mask = mask & ~done
            if np.any(mask):
                mm, oo = m[mask], o[mask]
                s = np.abs(mm)
                out[mask] = ((mm + oo) * al(s) + (mm - oo) * be(s)) / (2.0 * mm)
            done |= mask
        return out

    doms = [f.domain for f in (a1, a2, b1, b2)]
    lim = min(min(abs(lo), abs(hi)) for lo, hi in doms)
    domain = None if math.isinf(lim) else (-lim, lim, -lim, lim)
    return Field2D(fn, domain, {"kernel": "generic"})


def _convergence_partials(fn: Callable[[float], float], top: float) -> list[float]:
    # deeper than the diagnostics schedule: power-law tails need ~60 halvings
    bs = default_schedule(top, CHECK_HALVINGS)
    uppers = [top] + bs[:-1]
    total, out = 0.0, []
    for b, up in zip(bs, uppers):
        val, _ = integrate.quad(fn, b, up, epsabs=1e-12, epsrel=1e-10, limit=200)
        total += val
        out.append(total)
    return out


def beta_from_alpha(alpha: Function1D, radius: float = 4.0, check: bool = True) -> Function1D:
    """The antidiagonal partner ``beta(x) = -|x| int_0^|x| alpha/t^2``."""
    exact = hasattr(alpha, "integral_over_t2")
    if check:
        xs = _test_grid(radius if not exact else max(radius, 1.0), alpha.nondiff_points)
        _first_decrease("alpha'(x)/x", xs, _deriv(alpha, xs) / xs)
    if exact:
        itg = alpha.integral_over_t2
        lim = math.inf
    else:
        top = min(1.0, radius)
        partials = _convergence_partials(lambda t: float(alpha(t)) / (t * t), top)
        if classify(partials) != CONVERGENT:
            raise KernelPreconditionError("int_0 alpha(t)/t^2 dt does not converge")
        table = CumulativeIntegral(lambda t: alpha.fn(t) / (t * t), radius,
                                   breaks=alpha.nondiff_points)
        itg = table
        lim = radius

    def fn(x):
        s = np.abs(x)
        return -s * itg(s)

    def d1(x):
        s = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.sign(x) * (-itg(s) - alpha.fn(s) / np.where(s > 0, s, 1.0))
        return np.where(s > 0, out, 0.0)

    return Function1D(fn=fn, domain=(-lim, lim), d1=d1, nondiff_points=alpha.nondiff_points,
                      name="beta", params={"exact": exact})


def _two_branch(alpha_fn, beta_fn):
    def fn(x, y):
        swap = np.abs(y) > np.abs(x)
        m = np.where(swap, y, x)
        o = np.where(swap, x, y)
        s = np.abs(m)
        safe = np.where(m != 0, m, 1.0)
        out = ((m + o) * alpha_fn(s) + (m - o) * beta_fn(s)) / (2.0 * safe)
        return np.where(m != 0, out, 0.0)
    return fn


def parabolic_kernel(alpha: Function1D, radius: float = 4.0, check: bool = True) -> Field2D:
    beta = beta_from_alpha(alpha, radius, check)
    lim = min(abs(beta.domain[0]), abs(beta.domain[1]), abs(alpha.domain[0]), abs(alpha.domain[1]))
    domain = None if math.isinf(lim) else (-lim, lim, -lim, lim)
    exact = bool(beta.params.get("exact"))
    return Field2D(_two_branch(alpha.fn, beta.fn), domain,
                   {"kernel": "parabolic", "alpha": alpha.name, "beta_exact": exact},
                   exact=exact)


def kernel_upper_bound_check(alpha: Function1D, p: float,
                             grid: tuple[float, float, int] = (-5.0, 5.0, 201)) -> bool:
    """Upper bound by ``alpha((x+y)/2) + beta((x-y)/2) + C``."""
    tail = np.linspace(p, 10.0 * p, 257)[1:]
    q = _deriv(alpha, tail) / tail
    if np.ptp(q) > 1e-9 * (1.0 + np.max(np.abs(q))):
        raise KernelPreconditionError(f"alpha'(x)/x is not constant on [{p}, inf)")
    lo, hi, n = grid
    beta = beta_from_alpha(alpha, radius=max(abs(lo), abs(hi)) * 2.0 + 1.0, check=False)
    F = Field2D(_two_branch(alpha.fn, beta.fn))
    C = 0.5 * p * float(alpha.right_deriv(p)) - float(alpha(p))
    xs = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(xs, xs)
    lhs = F(X, Y)
    rhs = alpha((X + Y) / 2.0) + beta((X - Y) / 2.0) + C
    return bool(np.all(lhs <= rhs + 1e-9 * (1.0 + np.abs(rhs))))


def smooth_kernel(G: Function1D, radius: float = 2.0, n: int = 4097) -> Field2D:
    """Extension of a C^2 function through the generic kernel."""
    if G.d1 is None or G.d2 is None:
        raise KernelPreconditionError("smooth_kernel needs first and second derivatives")
    G0 = float(G(0.0))
    D0 = float(G.deriv(0.0))
    y = np.linspace(0.0, radius, n)
    yp = y[1:]

    def ghat(t):
        return G.fn(t) - G0 - D0 * t

    a1, a2 = ghat(yp), ghat(-yp)
    d1, d2 = G.d1(yp) - D0, -(G.d1(-yp) - D0)
    dd1, dd2 = G.d2(yp), G.d2(-yp)
    th1 = d1 / yp - a1 / (yp * yp)
    th2 = d2 / yp - a2 / (yp * yp)
    c0 = 0.5 * float(G.d2(0.0))
    thp = np.concatenate(([c0], np.minimum(th1, th2)))
    theta = integrate.cumulative_trapezoid(thp, y, initial=0.0)
    sup = np.concatenate(([0.0], np.maximum(-yp * dd1 + d1, -yp * dd2 + d2)))
    sup = np.maximum.accumulate(sup)
    eta = -theta + sup
    ratio = np.concatenate(([-c0], eta[1:] / yp))
    B = integrate.cumulative_trapezoid(ratio, y, initial=0.0)

    def beta_fn(x):
        s = np.abs(x)
        return s * np.interp(s, y, B)

    alpha1 = Function1D(fn=lambda x: ghat(np.abs(x)), domain=(-radius, radius), name="alpha1")
    alpha2 = Function1D(fn=lambda x: ghat(-np.abs(x)), domain=(-radius, radius), name="alpha2")
    beta = Function1D(fn=beta_fn, domain=(-radius, radius), name="beta")
    core = generic_kernel(KernelInputs(alpha1, alpha2, beta, beta), check=False)

    def fn(x, yy):
        return core.fn(x, yy) + G0 + D0 * (x + yy) / 2.0

    return Field2D(fn, (-radius, radius, -radius, radius),
                   {"kernel": "smooth", "G": G.name, "n": n}, exact=False)


def _fd(f: Callable, x: np.ndarray, h: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    if order == 1:
        terms = (f(x + h), -f(x - h))
        den = 2.0 * h
    elif order == 2:
        terms = (f(x + h), -2.0 * f(x), f(x - h))
        den = h * h
    else:
        terms = (f(x + 2 * h), -2.0 * f(x + h), 2.0 * f(x - h), -f(x - 2 * h))
        den = 2.0 * h ** 3
    val = sum(terms) / den
    noise = 1e-9 * sum(np.abs(t) for t in terms) / np.abs(den)
    return val, noise


def check_log_conditions(gamma: Function1D, c: float, n: int = 400) -> None:
    xs = c + np.geomspace(1e-2, 1e3, n)
    h = 0.05 * (xs - c)
    v = gamma.fn(xs)
    if np.any(v < -1e-12 * (1.0 + np.abs(v))):
        j = int(np.argmax(v < 0))
        raise KernelPreconditionError(f"gamma < 0 at x={xs[j]:.6g}")
    for order, sign in ((1, -1.0), (2, 1.0), (3, -1.0)):
        val, noise = _fd(gamma.fn, xs, h, order)
        bad = sign * val < -np.maximum(noise, 1e-6 * (np.abs(v) + 1e-300) / h ** order)
        if np.any(bad):
            j = int(np.argmax(bad))
            raise KernelPreconditionError(
                f"gamma derivative of order {order} has the wrong sign at x={xs[j]:.6g}")


def log_kernel(gamma: Function1D, c: float = 0.0, check: bool = True) -> Field2D:
    """Extension on ``(-e^-c, e^-c)^2`` with trace ``-t gamma(log 1/t)`` for t > 0."""
    if check:
        check_log_conditions(gamma, c)
    g1 = gamma.d1 if gamma.d1 is not None else (lambda x: _fd(gamma.fn, x, 1e-5 * np.maximum(1.0, x - c), 1)[0])
    R = math.exp(-c)

    def fn(x, y):
        swap = np.abs(y) > np.abs(x)
        P = np.where(swap, y, x)
        Q = np.where(swap, x, y)
        s = np.abs(P)
        # the origin is masked below; gamma may blow up at L = 0 there
        L = np.log(1.0 / np.where(s > 0, s, 0.5 * R))
        gv, gd = gamma.fn(L), g1(L)
        safe = np.where(P != 0, P, 1.0)
        pos = -gv * (2 * Q - P) - gd * (P - Q) * (2 * P - Q) / (2.0 * safe)
        neg = -gv * (2 * P - Q) - gd * 1.5 * (Q - P)
        out = np.where(P > 0, pos, neg)
        return np.where(P != 0, out, 0.0)

    return Field2D(fn, (-R, R, -R, R), {"kernel": "log", "gamma": gamma.name, "c": c},
                   exact=not gamma.params.get("series", False), open_domain=True)


def majorant_from_steps(a: np.ndarray, scale: float, c: float, weights: np.ndarray | None = None,
                        name: str = "majorant") -> Function1D:
    """``scale * sum_i w_i 2 a_i / ((x - c) + a_i)`` with ``w_i = 2^-i`` by default."""
    a = np.asarray(a, dtype=float)
    w = 2.0 ** -np.arange(1, a.size + 1) if weights is None else np.asarray(weights, dtype=float)

    def deriv(k: int):
        sign = (-1.0) ** k * math.factorial(k)

        def f(x):
            z = np.asarray(x, dtype=float)[..., None] - c
            return scale * sign * np.sum(w * 2.0 * a / (z + a) ** (k + 1), axis=-1)
        return f

    return Function1D(fn=deriv(0), domain=(c, math.inf), d1=deriv(1), d2=deriv(2),
                      name=name, params={"a": tuple(a), "scale": scale, "c": c,
                                         "series": True, "d3": deriv(3)},
                      open_domain=True)


def smooth_majorant(kappa: Function1D, c: float, x_max: float | None = None,
                    n: int = 20001, tail_tol: float = 1e-12) -> Function1D:
    """Completely monotone majorant of ``kappa`` on ``(c, x_max]``."""
    top = c + 1e6 if x_max is None else float(x_max)
    xs = c + np.geomspace(1e-9, top - c, n)
    k = np.asarray(kappa.fn(xs), dtype=float)
    if not np.all(np.isfinite(k)):
        raise KernelPreconditionError("kappa is not finite on the sampling grid")
    s = float(np.max(k))
    if s <= 0.0:
        return majorant_from_steps(np.ones(0), 0.0, c, name="majorant_zero")
    tail = k[xs > c + 0.5 * (top - c)]
    if tail.size and np.max(tail) > 0.5 * s:
        raise KernelPreconditionError("no decay of kappa detected on the sampling window")
    steps = []
    i = 1
    while 2.0 ** (-i + 1) >= tail_tol:
        thr = 2.0 ** -i
        above = np.nonzero(k / s > thr)[0]
        if above.size == 0:
            steps.append(1.0)
        else:
            j = int(above[-1])
            lo = float(xs[j])
            if j + 1 < xs.size:
                # refine the last crossing between neighbouring samples
                hi = float(xs[j + 1])
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if float(kappa.fn(np.asarray(mid))) / s > thr:
                        lo = mid
                    else:
                        hi = mid
            steps.append(max(1.0, lo - c))
        i += 1
    g = majorant_from_steps(np.array(steps), s, c, name="majorant")
    params = dict(g.params)
    params["certified_up_to"] = top
    return Function1D(fn=g.fn, domain=g.domain, d1=g.d1, d2=g.d2, name=g.name,
                      params=params, open_domain=True)


def odd_trace_extension(h: Function1D, a: float = 1.0, x_max: float = 700.0) -> Field2D:
    """Field on ``(-a, a)^2`` with odd trace below ``h`` on ``[0, a)``."""
    ts = 2.0 ** -np.arange(5, 41, dtype=float) * a
    if abs(float(h(0.0))) > 1e-12:
        raise KernelPreconditionError("h(0) must be 0")
    q = np.abs(h(ts)) / ts
    if q[-1] > max(1e-3, 0.25 * float(np.max(q))) or np.any(np.diff(q[-10:]) > 1e-12 * (1.0 + q[-10:-1])):
        raise KernelPreconditionError("h(t)/t does not tend to 0")
    c = math.log(1.0 / a)

    def kappa_fn(x):
        e = np.exp(-x)
        return -h.fn(e) / e

    kappa = Function1D(fn=kappa_fn, domain=(c, math.inf), name="kappa", open_domain=True)
    gamma = smooth_majorant(kappa, c, x_max=x_max)
    f = log_kernel(gamma, c, check=False)
    prov = dict(f.provenance)
    prov.update({"kernel": "odd_trace", "h": h.name})
    return Field2D(f.fn, f.domain, prov, exact=False, open_domain=True)


@dataclass(frozen=True, eq=False)
class ModulusAlpha(Function1D):
    """``alpha = -2 Omega(|x|)`` with a closed-form integral against ``1/t^2``."""

    integral_fn: Callable[[np.ndarray], np.ndarray] | None = None
    omega_tilde: Callable[[np.ndarray], np.ndarray] | None = None

    def integral_over_t2(self, x):
        out = np.asarray(self.integral_fn(np.abs(np.asarray(x, dtype=float))), dtype=float)
        return out if out.ndim else float(out)


def modulus_alpha(omega: Function1D, p: float = 1.0, n: int = 4097) -> ModulusAlpha:
    ts = np.geomspace(p * 1e-12, p, n)
    w = np.asarray(omega.fn(ts), dtype=float)
    if np.any(w < -1e-14) or np.any(np.diff(w) < -1e-12 * (1.0 + np.abs(w[1:]))):
        raise KernelPreconditionError("omega must be non-negative and non-decreasing")
    partials = _convergence_partials(lambda t: float(omega.fn(np.asarray(t))) / t, p)
    verdict = classify(partials, rising=True)
    if verdict != CONVERGENT:
        raise KernelPreconditionError(
            "int_0 omega(t)/t dt " + ("diverges" if verdict != "inconclusive" else "is not certified convergent"))
    q = w / ts
    if np.all(np.diff(q) <= 1e-12 * (1.0 + q[:-1])):
        def wt(t):
            return np.asarray(omega.fn(t), dtype=float)
        normalized = False
    else:
        Q = np.maximum.accumulate(q[::-1])[::-1]
        logt = np.log(ts)

        def wt(t):
            tt = np.maximum(np.asarray(t, dtype=float), ts[0])
            return np.asarray(t, dtype=float) * np.interp(np.log(tt), logt, Q)
        normalized = True
    qp = float(wt(np.asarray(p))) / p
    Om = CumulativeIntegral(wt, p)
    Wt = CumulativeIntegral(lambda t: wt(t) / np.where(t > 0, t, 1.0), p)
    Om_p, Wt_p = float(Om(p)), float(Wt(p))

    def omega_t(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= p, wt(np.minimum(t, p)), qp * t)

    def Omega(t):
        t = np.asarray(t, dtype=float)
        inside = np.minimum(t, p)
        return np.where(t <= p, Om(inside), Om_p + 0.5 * qp * (t * t - p * p))

    def fn(x):
        return -2.0 * Omega(np.abs(x))

    def d1(x):
        return -2.0 * np.sign(x) * omega_t(np.abs(x))

    def integral(s):
        s = np.asarray(s, dtype=float)
        inside = np.minimum(s, p)
        wint = np.where(s <= p, Wt(inside), Wt_p + qp * (s - p))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(s > 0, Omega(s) / np.where(s > 0, s, 1.0), 0.0)
        return -2.0 * (-ratio + wint)

    return ModulusAlpha(fn=fn, d1=d1, name="modulus_alpha",
                        params={"omega": omega.name, "p": p, "normalized": normalized},
                        integral_fn=integral, omega_tilde=omega_t)
