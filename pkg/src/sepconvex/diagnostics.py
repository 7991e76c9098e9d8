"""Necessary-condition diagnostics for a candidate trace g.

The central object is the second-order central difference
``omega_g(x, t) = g(x+t) + g(x-t) - 2 g(x)`` and its greatest non-increasing
minorant ``omega*_g(x, .)``.  A trace of a separately convex function keeps
``int omega*/t^2`` bounded below locally; the functions here compute those
integrals along a dyadic schedule of lower limits and classify the partials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np
from scipy import integrate

from .func1d import Function1D

CAUCHY_TOL = 1e-6
DIV_DELTA = 1e-3
N_HALVINGS = 40
NODES_PER_HALVING = 1024
LIMINF_MU = 1e-6
LIMINF_TAIL = 10

CONVERGENT = "convergent"
DIVERGENT = "divergent_to_minus_infinity"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DifferenceProfile:
    x: float
    ts: np.ndarray
    omega: np.ndarray
    omega_star: np.ndarray


@dataclass(frozen=True)
class IntegralVerdict:
    value: float
    partials: list[tuple[float, float]]
    classification: str
    running_inf: float = math.nan

    @property
    def divergent(self) -> bool:
        return self.classification == DIVERGENT

    def as_dict(self) -> dict:
        return {"value": self.value, "classification": self.classification,
                "running_inf": self.running_inf,
                "partials": [[b, v] for b, v in self.partials]}


@dataclass(frozen=True)
class LiminfVerdict:
    passed: bool
    margin: float

    def as_dict(self) -> dict:
        return {"verdict": "pass" if self.passed else "fail", "margin": self.margin}


@dataclass(frozen=True)
class ChainWitness:
    x: float
    p: np.ndarray
    r: np.ndarray
    terms: np.ndarray
    partial_sums: np.ndarray
    family: tuple[float, float] | None = field(default=None)

    @property
    def best(self) -> float:
        return float(np.max(self.partial_sums)) if self.partial_sums.size else 0.0


def central_difference(g: Function1D, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    out = g(x + t) + g(x - t) - 2.0 * g(x)
    return out if np.ndim(out) else float(out)


def _omega_floored(g: Function1D, x: float, ts: np.ndarray, gx: float | None = None) -> np.ndarray:
    """omega_g(x, ts) with differences below the rounding level of the three
    evaluations replaced by the Taylor term g''(x) t^2 (or 0 without g'')."""
    g0 = float(g(x)) if gx is None else gx
    gp, gm = g(x + ts), g(x - ts)
    om = gp + gm - 2.0 * g0
    noise = 8.0 * np.finfo(float).eps * (np.abs(gp) + np.abs(gm) + 2.0 * np.abs(g0))
    lost = np.abs(om) <= noise
    if not np.any(lost):
        return om
    return np.where(lost, _taylor(g, x, ts), om)


def _taylor(g: Function1D, x: float, ts: np.ndarray) -> np.ndarray:
    if g.d2 is None or not g.is_differentiable_at(x):
        return np.zeros_like(ts)
    kinks = np.array(g.nondiff_points, dtype=float)
    reach = np.min(np.abs(kinks - x)) if kinks.size else math.inf
    c = float(g.d2(np.asarray(x, dtype=float)))
    if not math.isfinite(c):
        return np.zeros_like(ts)
    return np.where(ts < reach, c * ts * ts, 0.0)


def _running_star(omega: np.ndarray) -> np.ndarray:
    return np.minimum.accumulate(np.minimum(omega, 0.0))


def difference_profile(g: Function1D, x: float, T: float, n: int = 512,
                       t_min: float | None = None) -> DifferenceProfile:
    if n < 2:
        raise ValueError("need n >= 2")
    t_min = T * 2.0 ** -20 if t_min is None else t_min
    ts = np.geomspace(t_min, T, n)
    omega = central_difference(g, x, ts)
    omega = np.asarray(omega, dtype=float)
    return DifferenceProfile(float(x), ts, omega, _running_star(omega))


def default_schedule(T: float, n: int = N_HALVINGS) -> list[float]:
    return [T * 2.0 ** (-k) for k in range(1, n + 1)]


def classify(partials: Sequence[float], rising: bool = False) -> str:
    """Deterministic verdict from the partial integrals along the schedule.

    ``rising`` flips the sign convention for integrals that diverge to +inf.
    """
    p = np.asarray(partials, dtype=float)
    if rising:
        p = -p
    if p.size >= 5 and np.ptp(p[-5:]) <= CAUCHY_TOL:
        return CONVERGENT
    if p.size >= 11 and np.all(np.diff(p[-11:]) <= -DIV_DELTA):
        return DIVERGENT
    return INCONCLUSIVE


def _verdict(bs: Sequence[float], partials: Sequence[float], plain: bool) -> IntegralVerdict:
    cls = classify(partials)
    run_inf = float(np.min(partials))
    if cls == DIVERGENT:
        value = -math.inf
    elif plain:
        # liminf surrogate: infimum over the tail of the schedule
        value = float(np.min(partials[-LIMINF_TAIL:]))
    else:
        value = float(partials[-1])
    return IntegralVerdict(value, list(zip(map(float, bs), map(float, partials))), cls, run_inf)


def _check_schedule(schedule: Sequence[float], T: float) -> None:
    if any(b <= 0 or b >= T for b in schedule) or any(
            b2 >= b1 for b1, b2 in zip(schedule, schedule[1:])):
        raise ValueError("schedule must decrease strictly inside (0, T)")


def _check_window(g: Function1D, x: float, T: float) -> None:
    lo, hi = g.domain
    if g.open_domain:
        ok = lo < x - T and x + T < hi
    else:
        ok = lo <= x - T and x + T <= hi
    if not ok:
        raise ValueError(f"[x-T, x+T] = [{x - T}, {x + T}] leaves the domain {g.domain}")


def necessary_integral_star(g: Function1D, x: float, T: float = 1.0,
                            schedule: Sequence[float] | None = None) -> IntegralVerdict:
    _check_window(g, x, T)
    bs = list(default_schedule(T) if schedule is None else schedule)
    _check_schedule(bs, T)
    # log grid aligned to the schedule, seeded a few halvings below its end
    lo = bs[-1] * 2.0 ** -8
    n = int(math.ceil(math.log2(T / lo) * NODES_PER_HALVING)) + 1
    ts = np.unique(np.concatenate((np.geomspace(lo, T, n), bs)))
    star = _running_star(_omega_floored(g, x, ts))
    # exact integral of the linear interpolant of omega* against 1/t^2
    t0, t1 = ts[:-1], ts[1:]
    w0, w1 = star[:-1], star[1:]
    q = (w1 - w0) / (t1 - t0)
    p = w0 - q * t0
    seg = p * (1.0 / t0 - 1.0 / t1) + q * np.log(t1 / t0)
    tail = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
    idx = np.searchsorted(ts, bs)
    partials = [float(tail[i]) for i in idx]
    return _verdict(bs, partials, plain=False)


def necessary_integral_plain(g: Function1D, x: float, T: float = 1.0,
                             schedule: Sequence[float] | None = None) -> IntegralVerdict:
    _check_window(g, x, T)
    bs = list(default_schedule(T) if schedule is None else schedule)
    _check_schedule(bs, T)

    gx = float(g(x))

    def integrand(t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        return float((_omega_floored(g, x, tt, gx) / (tt * tt))[0])

    uppers = [T] + bs[:-1]
    total = 0.0
    partials = []
    for b, top in zip(bs, uppers):
        # sub-panels no wider than a factor 2, so narrow features are not skipped
        k = max(1, int(math.ceil(math.log2(top / b) - 1e-12)))
        edges = np.geomspace(b, top, k + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-9, epsrel=1e-9, limit=200)
            total += val
        partials.append(total)
    return _verdict(bs, partials, plain=True)


def diagonal_liminf_check(g: Function1D, x: float, t_min: float, t_max: float,
                          n: int = 400) -> LiminfVerdict:
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    _check_window(g, x, t_max)
    ts = np.geomspace(t_min, t_max, n)
    q = _omega_floored(g, x, ts) / ts
    # sup of q over [t_min, s] for s in the lower half of the window
    lower = q[: n // 2]
    margin = float(np.max(lower))
    return LiminfVerdict(margin > -LIMINF_MU, margin)


def chain_terms(g: Function1D, x: float, p: np.ndarray, r: np.ndarray) -> np.ndarray:
    g0 = float(g(np.asarray(x, dtype=float)))
    pi, pn = p[:-1], p[1:]
    ri, rn = r[:-1], r[1:]
    first = (pi - pn) * (g(x + rn) - g0) / ((pi + rn) * (pn + rn))
    second = (ri - rn) * (g(x - pi) - g0) / ((pi + rn) * (pi + ri))
    return -(first + second)


def chain_sum(g: Function1D, x: float, p: Sequence[float], r: Sequence[float]) -> ChainWitness:
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if p.shape != r.shape or p.ndim != 1:
        raise ValueError("p and r must be 1-D sequences of equal length")
    if p.size < 2:
        raise ValueError("need at least two terms")
    if np.any(np.diff(p) >= 0) or np.any(np.diff(r) >= 0):
        raise ValueError("p and r must be strictly decreasing")
    if np.any(p <= 0) or np.any(r <= 0) or p[0] > 1 or r[0] > 1:
        raise ValueError("p and r must lie in (0, 1]")
    terms = chain_terms(g, x, p, r)
    return ChainWitness(float(x), p, r, terms, np.cumsum(terms))


def chain_search(g: Function1D, x: float, depth: int = 40) -> ChainWitness:
    """Best geometric chain p_i = a rho^i, r_i = rho^i over a fixed (a, rho) grid."""
    if depth > 60:
        raise ValueError("depth must be <= 60")
    best: ChainWitness | None = None
    for a in np.arange(11, 31) / 10.0:
        for rho in np.arange(6, 19) / 20.0:
            i = np.arange(1, depth + 1, dtype=float)
            p = a * rho ** i
            r = rho ** i
            keep = (p <= 1) & _inside(g, x - p) & _inside(g, x + r)
            if keep.sum() < 2:
                continue
            w = ChainWitness(float(x), p[keep], r[keep], *_sums(g, x, p[keep], r[keep]),
                             family=(float(a), float(rho)))
            if best is None or w.best > best.best:
                best = w
    assert best is not None
    return best


def _inside(g: Function1D, pts: np.ndarray) -> np.ndarray:
    lo, hi = g.domain
    if g.open_domain:
        return (pts > lo) & (pts < hi)
    return (pts >= lo) & (pts <= hi)


def _sums(g, x, p, r):
    terms = chain_terms(g, x, p, r)
    return terms, np.cumsum(terms)


def one_sided_integral(g: Function1D, x: float, upper: float,
                       breaks: Sequence[float] = ()) -> float:
    """``-int_0^upper (g(x+t) - g(x))/t^2 dt`` by adaptive quadrature."""
    if upper <= 0:
        raise ValueError("upper limit must be positive")
    gx = float(g(x))

    def integrand(t):
        return -(float(g(x + t)) - gx) / (t * t)

    pts = sorted(b for b in breaks if 0 < b < upper)
    val, _ = integrate.quad(integrand, 0.0, upper, points=pts or None,
                            epsabs=1e-12, epsrel=1e-12, limit=400)
    return float(val)


def fitted_modulus(g: Function1D, centers: Sequence[float],
                   curvature_breaks: Sequence[float] = (), dps: int | None = None) -> Function1D:
    """Smallest modulus compatible with the midpoint inequality at ``centers``.

    Any modulus of semi-convexity of g satisfies
    ``omega(t) >= -2 omega_g(a, t/2)/t`` for every center a.  Points where g''
    jumps are mapped to the t values where the fitted modulus bends, which
    :func:`modulus_integral` uses as quadrature breakpoints.

    With ``dps`` set, ``g.fn`` is evaluated on mpmath numbers at that many
    digits.  This is needed when the features of g sit far below double
    precision relative to its values (g.fn must then accept scalar objects).
    """
    cs = np.asarray(centers, dtype=float)
    if cs.ndim != 1 or cs.size == 0:
        raise ValueError("need a non-empty 1-D list of centers")

    if dps is None:
        gc = np.asarray(g(cs), dtype=float)

        def fn(t):
            tt = np.abs(np.asarray(t, dtype=float))
            pos = tt[..., None] > 0
            half = 0.5 * tt[..., None]
            gp, gm = g(cs + half), g(cs - half)
            om = gp + gm - 2.0 * gc
            noise = 8.0 * np.finfo(float).eps * (np.abs(gp) + np.abs(gm) + 2.0 * np.abs(gc))
            om = np.where(np.abs(om) <= noise, 0.0, om)
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(pos, -2.0 * om / np.where(pos, tt[..., None], 1.0), 0.0)
            out = np.maximum(np.max(q, axis=-1), 0.0)
            return out if out.ndim else float(out)
    else:
        def scalar(t):
            if t == 0.0:
                return 0.0
            with mpmath.workdps(dps):
                tt = mpmath.mpf(abs(t))
                best = mpmath.mpf(0)
                for a in cs:
                    a = mpmath.mpf(a)
                    om = g.fn(a + tt / 2) + g.fn(a - tt / 2) - 2 * g.fn(a)
                    best = max(best, mpmath.mpf(-2 * om / tt))
                return float(best)

        def fn(t):
            out = np.vectorize(scalar, otypes=[float])(np.asarray(t, dtype=float))
            return out if out.ndim else float(out)

    kinks = sorted({2.0 * abs(float(p) - float(a))
                    for a in cs for p in (*curvature_breaks, *g.nondiff_points)} - {0.0})
    return Function1D(fn, name="fitted_modulus",
                      params={"centers": tuple(map(float, cs)), "breaks": tuple(kinks),
                              "dps": dps})


def modulus_integral(omega: Function1D, upper: float, breaks: Sequence[float] = ()) -> float:
    """``int_0^upper omega(t)/t dt``, split at ``breaks`` and ``omega.params['breaks']``.

    The first panel is integrated in t, the others in log t, so that breaks
    spread over many decades cost the same as nearby ones.
    """
    if upper <= 0:
        raise ValueError("upper limit must be positive")
    pts = sorted({float(b) for b in (*breaks, *omega.params.get("breaks", ())) if 0 < b < upper})
    edges = [*pts, float(upper)]
    first, _ = integrate.quad(lambda t: float(omega(t)) / t if t > 0 else 0.0, 0.0, edges[0],
                              epsabs=1e-11, epsrel=1e-10, limit=200)
    total = first
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda u: float(omega(math.exp(u))), math.log(lo), math.log(hi),
                                epsabs=1e-11, epsrel=1e-10, limit=200)
        total += val
    return float(total)
