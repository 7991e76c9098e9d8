"""One-dimensional functions: traces, smooth parts, kernels and moduli.

Every function is a :class:`Function1D`: a vectorised evaluator plus optional
first and second derivatives, a domain, the points where the first derivative
is undefined and optional Lipschitz hints.  The module also ships a catalog of
the example functions used throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]

SERIES_TOL = 1e-14
LIPSCHITZ_SAFETY = 0.1


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Function1D:
    fn: ArrayFn
    domain: tuple[float, float] = (-math.inf, math.inf)
    d1: ArrayFn | None = None
    d2: ArrayFn | None = None
    nondiff_points: tuple[float, ...] = ()
    lipschitz_hint: tuple[tuple[float, float, float], ...] = ()
    name: str = ""
    params: Mapping[str, object] = field(default_factory=dict)
    truncation: int | None = None
    open_domain: bool = False

    def _check(self, x: np.ndarray) -> None:
        lo, hi = self.domain
        if self.open_domain:
            bad = (x <= lo) | (x >= hi)
        else:
            bad = (x < lo) | (x > hi)
        if np.any(bad):
            raise DomainError(f"{self.name or 'function'}: argument outside domain {self.domain}")

    def eval(self, x):
        xa = np.asarray(x, dtype=float)
        self._check(xa)
        out = np.asarray(self.fn(xa), dtype=float)
        return out if out.ndim else float(out)

    __call__ = eval

    def deriv(self, x):
        if self.d1 is None:
            raise ValueError(f"{self.name or 'function'} has no first derivative")
        xa = np.asarray(x, dtype=float)
        self._check(xa)
        out = np.asarray(self.d1(xa), dtype=float)
        return out if out.ndim else float(out)

    def deriv2(self, x):
        if self.d2 is None:
            raise ValueError(f"{self.name or 'function'} has no second derivative")
        xa = np.asarray(x, dtype=float)
        self._check(xa)
        out = np.asarray(self.d2(xa), dtype=float)
        return out if out.ndim else float(out)

    def right_deriv(self, x, h: float = 1e-8):
        """Right derivative, from d1 off the non-differentiability set."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xa)
        kinks = np.array(self.nondiff_points, dtype=float)
        at_kink = np.zeros(xa.shape, dtype=bool)
        if kinks.size:
            at_kink = np.min(np.abs(xa[:, None] - kinks[None, :]), axis=1) < 1e-12
        if self.d1 is not None:
            out[~at_kink] = self.d1(xa[~at_kink])
        else:
            at_kink[:] = True
        if np.any(at_kink):
            p = xa[at_kink]
            out[at_kink] = (self.fn(p + h) - self.fn(p)) / h
        return out if np.ndim(x) else float(out[0])

    def is_differentiable_at(self, x: float, tol: float = 1e-12) -> bool:
        return self.d1 is not None and all(abs(x - p) > tol for p in self.nondiff_points)


# ---------------------------------------------------------------------------
# plumbing


def from_samples(xs: Sequence[float], ys: Sequence[float]) -> Function1D:
    """Piecewise-linear interpolant through the samples."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need matching 1-D sample arrays of length >= 2")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("samples must be finite")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")
    slopes = np.diff(ys) / np.diff(xs)

    def d1(x):
        k = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, slopes.size - 1)
        return slopes[k]

    return Function1D(
        fn=lambda x: np.interp(x, xs, ys),
        domain=(float(xs[0]), float(xs[-1])),
        d1=d1,
        d2=lambda x: np.zeros_like(x, dtype=float),
        nondiff_points=tuple(float(v) for v in xs),
        lipschitz_hint=((float(xs[0]), float(xs[-1]), float(np.max(np.abs(slopes)))),),
        name="samples",
        params={"n": int(xs.size)},
    )


def lipschitz_on(f: Function1D, interval: tuple[float, float], n: int = 20001) -> float:
    lo, hi = map(float, interval)
    for a, b, L in f.lipschitz_hint:
        if a <= lo and hi <= b:
            return float(L)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("unbounded interval needs a Lipschitz hint")
    xs = np.linspace(lo, hi, n)
    if f.d1 is not None:
        kinks = np.array(f.nondiff_points, dtype=float)
        pts = xs
        if kinks.size:
            pts = xs[np.min(np.abs(xs[:, None] - kinks[None, :]), axis=1) > 1e-12]
        L = float(np.max(np.abs(f.d1(pts)))) if pts.size else 0.0
        # one-sided slopes at the kinks themselves
        if kinks.size:
            inside = kinks[(kinks >= lo) & (kinks <= hi)]
            h = (hi - lo) / (n - 1) * 1e-3
            for p in inside:
                for q in (max(lo, p - h), min(hi, p + h)):
                    if q != p:
                        L = max(L, abs(float(f.fn(np.asarray(q))) - float(f.fn(np.asarray(p)))) / abs(q - p))
    else:
        ys = f.fn(xs)
        L = float(np.max(np.abs(np.diff(ys) / np.diff(xs))))
    return L * (1.0 + LIPSCHITZ_SAFETY)


# ---------------------------------------------------------------------------
# catalog


def _even(fn: ArrayFn) -> ArrayFn:
    return lambda x: fn(np.abs(x))


def _odd_deriv(d: ArrayFn) -> ArrayFn:
    return lambda x: np.sign(x) * d(np.abs(x))


def _neg_square(p):
    return Function1D(lambda x: -x * x, d1=lambda x: -2.0 * x,
                      d2=lambda x: np.full_like(x, -2.0, dtype=float))


def _quadratic(p):
    k = float(p.get("k", 1.0))
    return Function1D(lambda x: k * x * x, d1=lambda x: 2.0 * k * x,
                      d2=lambda x: np.full_like(x, 2.0 * k, dtype=float))


def _linear(p):
    c = float(p.get("c", 1.0))
    b = float(p.get("b", 0.0))
    return Function1D(lambda x: c * x + b, d1=lambda x: np.full_like(x, c, dtype=float),
                      d2=lambda x: np.zeros_like(x, dtype=float),
                      lipschitz_hint=((-math.inf, math.inf, abs(c) * (1 + LIPSCHITZ_SAFETY)),))


def _constant(p):
    c = float(p.get("c", 0.0))
    return Function1D(lambda x: np.full_like(x, c, dtype=float),
                      d1=lambda x: np.zeros_like(x, dtype=float),
                      d2=lambda x: np.zeros_like(x, dtype=float),
                      lipschitz_hint=((-math.inf, math.inf, 0.0),))


def _abs(p):
    return Function1D(np.abs, d1=np.sign, d2=lambda x: np.zeros_like(x, dtype=float),
                      nondiff_points=(0.0,),
                      lipschitz_hint=((-math.inf, math.inf, 1.0 + LIPSCHITZ_SAFETY),))


def _neg_abs(p):
    return Function1D(lambda x: -np.abs(x), d1=lambda x: -np.sign(x),
                      d2=lambda x: np.zeros_like(x, dtype=float), nondiff_points=(0.0,),
                      lipschitz_hint=((-math.inf, math.inf, 1.0 + LIPSCHITZ_SAFETY),))


def _neg_power(p):
    q = float(p.get("p", 1.5))
    if q <= 1:
        raise ValueError("neg_power needs p > 1")
    return Function1D(lambda x: -np.abs(x) ** q,
                      d1=lambda x: -q * np.sign(x) * np.abs(x) ** (q - 1),
                      d2=lambda x: _power_d2(x, q))


def _power_d2(x, q):
    with np.errstate(divide="ignore"):
        return -q * (q - 1) * np.abs(x) ** (q - 2)


def _custom_poly(p):
    coeffs = [float(c) for c in p.get("coeffs", [0.0])]
    P = np.polynomial.Polynomial(coeffs)
    dP, d2P = P.deriv(1), P.deriv(2)
    return Function1D(lambda x: P(x), d1=lambda x: dP(x) + 0 * x, d2=lambda x: d2P(x) + 0 * x)


def _ex1_value(x):
    ax = np.abs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ax / np.log(ax)
    return np.where(ax == 0, 0.0, out)


def _ex1_d1(s):
    # derivative of s/log s for s > 0, limit 0 at 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ls = np.log(s)
        out = (ls - 1.0) / (ls * ls)
    return np.where(s == 0, 0.0, out)


def _ex1_d2(s):
    with np.errstate(divide="ignore", invalid="ignore"):
        ls = np.log(s)
        out = (2.0 - ls) / (s * ls ** 3)
    return np.where(s == 0, -np.inf, out)


def _example1(p):
    variant = p.get("variant", "local")
    if variant == "local":
        return Function1D(_ex1_value, domain=(-1.0, 1.0), open_domain=True,
                          d1=_odd_deriv(_ex1_d1), d2=_even(_ex1_d2))
    if variant != "global":
        raise ValueError("example1 variant must be 'local' or 'global'")
    s0 = 0.5
    v0 = float(_ex1_value(np.asarray(s0)))
    k0 = float(_ex1_d1(np.asarray(s0)))

    def fn(x):
        ax = np.abs(x)
        return np.where(ax <= s0, _ex1_value(np.minimum(ax, s0)), v0 + k0 * (ax - s0))

    def d1(x):
        ax = np.abs(x)
        return np.sign(x) * np.where(ax <= s0, _ex1_d1(np.minimum(ax, s0)), k0)

    def d2(x):
        ax = np.abs(x)
        return np.where(ax <= s0, _ex1_d2(np.minimum(ax, s0)), 0.0)

    return Function1D(fn, d1=d1, d2=d2)


def _example1_odd(p):
    def fn(x):
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = x / np.log(ax)
        return np.where(ax == 0, 0.0, out)

    return Function1D(fn, domain=(-1.0, 1.0), open_domain=True,
                      d1=_even(_ex1_d1), d2=_odd_deriv(_ex1_d2))


def _h(x):
    return np.maximum(1.0 - x * x, 0.0)


def _example3_h(p):
    return Function1D(_h, d1=lambda x: np.where(np.abs(x) < 1, -2.0 * x, 0.0),
                      d2=lambda x: np.where(np.abs(x) < 1, -2.0, 0.0),
                      nondiff_points=(-1.0, 1.0),
                      lipschitz_hint=((-math.inf, math.inf, 2.0 * (1 + LIPSCHITZ_SAFETY)),))


def _example3_g(p):
    # the n-th term has sup-norm 3^-n
    N = int(math.floor(-math.log(SERIES_TOL) / math.log(3.0)))
    while 3.0 ** (-N) >= SERIES_TOL:
        N += 1
    N -= 1

    def index(x):
        with np.errstate(divide="ignore"):
            n = np.floor(-np.log(np.where(x > 0, x, 1.0)) / math.log(3.0)) + 1
        return np.where(x > 0, n, 0).astype(int)

    def fn(x):
        xa = np.asarray(x, dtype=float)
        n0 = index(xa)
        out = np.zeros_like(xa)
        for shift in (-1, 0, 1):
            n = n0 + shift
            ok = (n >= 1) & (n <= N) & (xa > 0) & (xa < 1)
            scale = 3.0 ** (-np.where(ok, n, 1).astype(float))
            out = np.maximum(out, np.where(ok, scale * _h(xa / scale - 2.0), 0.0))
        return out

    def d1(x):
        xa = np.asarray(x, dtype=float)
        n = index(xa)
        ok = (n >= 1) & (n <= N) & (xa > 0) & (xa < 1)
        z = np.where(ok, xa * 3.0 ** np.where(ok, n, 0).astype(float) - 2.0, 2.0)
        return np.where(ok & (np.abs(z) < 1), -2.0 * z, 0.0)

    kinks = (0.0,) + tuple(3.0 ** (-n) for n in range(0, N + 1))
    return Function1D(fn, d1=d1, nondiff_points=kinks, truncation=N,
                      lipschitz_hint=((-math.inf, math.inf, 2.0 * (1 + LIPSCHITZ_SAFETY)),))


def _bump(x):
    return np.where(np.abs(x) <= 1, -(np.cos(np.pi * x) + 1.0) / 2.0, 0.0)


def _bump_d1(x):
    return np.where(np.abs(x) <= 1, np.pi / 2.0 * np.sin(np.pi * x), 0.0)


def _bump_d2(x):
    return np.where(np.abs(x) < 1, np.pi ** 2 / 2.0 * np.cos(np.pi * x), 0.0)


def _bump_phi(p):
    return Function1D(_bump, d1=_bump_d1, d2=_bump_d2, nondiff_points=(),
                      lipschitz_hint=((-math.inf, math.inf, math.pi / 2 * (1 + LIPSCHITZ_SAFETY)),))


def _psi_terms(first: int = 10) -> tuple[np.ndarray, np.ndarray]:
    idx = []
    i = first
    while 1.0 / (i * 2.0 ** i) >= SERIES_TOL:
        idx.append(i)
        i += 1
    i_arr = np.array(idx, dtype=float)
    return 2.0 ** (-i_arr), 1.0 / (i_arr * 2.0 ** i_arr)


PSI_CENTERS, PSI_WIDTHS = _psi_terms()


def _psi_parts(x, which):
    xa = np.asarray(x, dtype=float)
    out = np.zeros_like(xa)
    first = 10
    last = first + PSI_CENTERS.size - 1
    with np.errstate(divide="ignore"):
        i0 = np.rint(-np.log2(np.where(xa > 0, xa, 1.0))).astype(int)
    for shift in (-1, 0, 1):
        i = i0 + shift
        ok = (xa > 0) & (i >= first) & (i <= last)
        k = np.where(ok, i - first, 0)
        t, u = PSI_CENTERS[k], PSI_WIDTHS[k]
        z = (xa - t) / u
        near = ok & (np.abs(z) <= 1)
        if which == 0:
            v = u * _bump(z)
        elif which == 1:
            v = _bump_d1(z)
        else:
            v = _bump_d2(z) / u
        out = out + np.where(near, v, 0.0)
    return out


def _example2_psi(p):
    return Function1D(lambda x: _psi_parts(x, 0), d1=lambda x: _psi_parts(x, 1),
                      d2=lambda x: _psi_parts(x, 2), truncation=int(9 + PSI_CENTERS.size),
                      params={"first": 10, "last": int(9 + PSI_CENTERS.size)},
                      lipschitz_hint=((-math.inf, math.inf, math.pi / 2 * (1 + LIPSCHITZ_SAFETY)),))


def _example2_xi(p):
    def fn(x):
        xa = np.asarray(x, dtype=float)
        return np.where(xa >= 0, _psi_parts(np.abs(xa), 0), -_psi_parts(np.abs(xa), 0))

    return Function1D(fn, d1=lambda x: _psi_parts(np.abs(x), 1),
                      d2=lambda x: np.sign(x) * _psi_parts(np.abs(x), 2),
                      truncation=int(9 + PSI_CENTERS.size),
                      params={"first": 10, "last": int(9 + PSI_CENTERS.size)},
                      lipschitz_hint=((-math.inf, math.inf, math.pi / 2 * (1 + LIPSCHITZ_SAFETY)),))


def gdl_value(x, delta: float, lam: float):
    ax = np.abs(x)
    return np.where(ax <= delta, -(lam / delta) * ax * ax + lam * lam - lam * delta,
                    np.where(ax <= lam, -2.0 * lam * ax + lam * lam, -ax * ax))


def gdl_d1(x, delta: float, lam: float):
    ax = np.abs(x)
    s = np.where(ax <= delta, -2.0 * lam / delta * ax, np.where(ax <= lam, -2.0 * lam, -2.0 * ax))
    return np.sign(x) * s


def gdl_d2(x, delta: float, lam: float):
    ax = np.abs(x)
    return np.where(ax < delta, -2.0 * lam / delta, np.where(ax < lam, 0.0, -2.0))


def delta_for(lam: float) -> float:
    return lam * math.exp(-1.0 / lam)


def _example4_gdl(p):
    lam = float(p.get("lam", 0.5))
    delta = float(p.get("delta", delta_for(lam)))
    if not (1 > lam >= delta > 0):
        raise ValueError("example4_gdl needs 1 > lam >= delta > 0")
    return Function1D(lambda x: gdl_value(x, delta, lam), d1=lambda x: gdl_d1(x, delta, lam),
                      d2=lambda x: gdl_d2(x, delta, lam), params={"delta": delta, "lam": lam})


EX4_LAMBDAS = (0.2, 0.1, 0.05, 0.025, 0.0125)
EX4_CENTERS = (0.75, 0.42, 0.23, 0.13, 0.07)


def _example4_g(p):
    lams = [float(v) for v in p.get("lam", EX4_LAMBDAS)]
    cents = [float(v) for v in p.get("a", EX4_CENTERS)]
    if len(lams) != len(cents) or not lams:
        raise ValueError("example4_g needs equally long non-empty 'a' and 'lam'")
    deltas = [delta_for(l) for l in lams]
    for n, (a, l, d) in enumerate(zip(cents, lams, deltas)):
        if not (1 > l >= d > 0) or not (0 <= a <= 1):
            raise ValueError(f"example4_g: invalid term {n}")
        if n + 1 < len(lams) and not (a - l > cents[n + 1] + lams[n + 1]):
            raise ValueError("example4_g: intervals a_n +- lam_n must be separated")

    def piece(x, which):
        xa = np.asarray(x, dtype=float)
        if which == 0:
            out = -xa * xa
        elif which == 1:
            out = -2.0 * xa
        else:
            out = np.full_like(xa, -2.0)
        for a, l, d in zip(cents, lams, deltas):
            inside = np.abs(xa - a) <= l
            if which == 0:
                v = gdl_value(xa - a, d, l) - 2 * a * xa + a * a
            elif which == 1:
                v = gdl_d1(xa - a, d, l) - 2 * a
            else:
                v = gdl_d2(xa - a, d, l)
            out = np.where(inside, v, out)
        return out

    return Function1D(lambda x: piece(x, 0), d1=lambda x: piece(x, 1), d2=lambda x: piece(x, 2),
                      params={"a": tuple(cents), "lam": tuple(lams), "delta": tuple(deltas)},
                      truncation=len(lams))


CATALOG: dict[str, Callable[[Mapping[str, object]], Function1D]] = {
    "neg_square": _neg_square,
    "abs": _abs,
    "neg_abs": _neg_abs,
    "neg_power": _neg_power,
    "example1": _example1,
    "example1_odd": _example1_odd,
    "example3_h": _example3_h,
    "example3_g": _example3_g,
    "example2_psi": _example2_psi,
    "example2_xi": _example2_xi,
    "example4_gdl": _example4_gdl,
    "example4_g": _example4_g,
    "bump_phi": _bump_phi,
    "quadratic": _quadratic,
    "linear": _linear,
    "constant": _constant,
    "custom_poly": _custom_poly,
}


def catalog_get(name: str, params: Mapping[str, object] | None = None) -> Function1D:
    if name not in CATALOG:
        raise KeyError(f"unknown catalog entry {name!r}")
    params = dict(params or {})
    f = CATALOG[name](params)
    merged = dict(params)
    merged.update(f.params)
    return Function1D(f.fn, f.domain, f.d1, f.d2, f.nondiff_points, f.lipschitz_hint,
                      name=name, params=merged, truncation=f.truncation, open_domain=f.open_domain)


def load_function(spec: Mapping[str, object]) -> Function1D:
    """Build a function from a JSON spec (catalog entry or samples)."""
    kind = spec.get("kind")
    if kind == "catalog":
        return catalog_get(str(spec["name"]), spec.get("params") or {})
    if kind == "samples":
        return from_samples(spec["xs"], spec["ys"])
    raise ValueError(f"unknown function spec kind {kind!r}")
