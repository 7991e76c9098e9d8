"""Global constructions: sup of touching functions, modulus extensions, gluing.

A touching family consists of separately convex functions f_u, one per center
u, with f_u(u, u) = g(u) and f_u(v, v) <= g(v) on the window.  Their finite
max is separately convex and reproduces g on the centers.  The per-center
kernels come from parabolic envelopes of the tangent-gap profile of g at u.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import DEFAULT_SEED, core
from .diagnostics import DIVERGENT, necessary_integral_plain, necessary_integral_star
from .envelope import Envelope, PiecewiseParabola, parabolic_envelope, phi_profile
from .func1d import Function1D, lipschitz_on
from .kernels import (Field2D, KernelPreconditionError, modulus_alpha, parabolic_kernel,
                      smooth_kernel)

JITTER = 1e-6
PILOT_SIZE = 33


class BudgetError(ValueError):
    """The integral hypothesis fails at some center."""

    def __init__(self, u: float, integral: float, budget: float, partials=()):
        super().__init__(f"integral budget violated at u={u:.6g}: "
                         f"int phi_u/x^2 = {integral:.6g} < -{budget:.6g}")
        self.u = u
        self.integral = integral
        self.budget = budget
        self.partials = list(partials)


class NotATraceError(ValueError):
    """A necessary condition fails, so no separately convex extension exists."""

    def __init__(self, x: float, verdict):
        super().__init__(f"not a trace: the lower integral diverges at x={x:.6g}")
        self.x = x
        self.verdict = verdict


class GlueError(ValueError):
    pass


def workers() -> int:
    cap = os.environ.get("SEPCONVEX_THREADS")
    n = os.cpu_count() or 1
    return max(1, min(n, int(cap))) if cap else n


def _pmap(fn, items):
    items = list(items)
    if workers() == 1 or len(items) < 8:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers()) as pool:
        return list(pool.map(fn, items))


def centers(g: Function1D, window: tuple[float, float], size: int) -> np.ndarray:
    """Equispaced interior points nudged off the non-differentiability set."""
    a, b = window
    D = np.linspace(a, b, size + 2)[1:-1]
    kinks = np.asarray(g.nondiff_points, dtype=float)
    if kinks.size:
        close = np.min(np.abs(D[:, None] - kinks[None, :]), axis=1) < JITTER
        D = np.where(close, D + JITTER, D)
    return D


def hypothesis_integral(g: Function1D, u: float, window, eps: float, n: int = 2049) -> float:
    return phi_profile(g, u, window, n).integral_over_x2(eps)


@dataclass(frozen=True, eq=False)
class TouchingFamily:
    window: tuple[float, float]
    u: np.ndarray
    gu: np.ndarray
    dgu: np.ndarray
    envelopes: list[Envelope]
    Cu: np.ndarray
    integrals: np.ndarray
    budget: float
    lipschitz: float
    seg_ptr: np.ndarray = field(repr=False)
    knots: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    cum: np.ndarray = field(repr=False)

    @classmethod
    def pack(cls, window, u, gu, dgu, envelopes, integrals, budget, lipschitz) -> "TouchingFamily":
        alphas = [e.alpha for e in envelopes]
        sizes = [al.knots.size for al in alphas]
        Cu = np.array([max(0.0, -al.total_integral()) for al in alphas])
        return cls(tuple(window), np.asarray(u, float), np.asarray(gu, float),
                   np.asarray(dgu, float), list(envelopes), Cu, np.asarray(integrals, float),
                   float(budget), float(lipschitz),
                   np.concatenate(([0], np.cumsum(sizes))).astype(np.intp),
                   np.concatenate([al.knots for al in alphas]),
                   np.concatenate([al.a for al in alphas]),
                   np.concatenate([al.c for al in alphas]),
                   np.concatenate([al.cum for al in alphas]))

    @property
    def constant(self) -> float:
        """The growth constant 4L + 3K' with K' the largest measured |int phi_u/x^2|."""
        return 4.0 * self.lipschitz + 3.0 * float(np.max(np.abs(self.integrals), initial=0.0))

    def __call__(self, x, y, prune: bool = True):
        X, Y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = core.family_sup(np.ascontiguousarray(X), np.ascontiguousarray(Y), self.u, self.gu,
                              self.dgu, self.Cu, self.seg_ptr, self.knots, self.a, self.c,
                              self.cum, prune)
        out = np.reshape(out, X.shape)
        return out if out.ndim else float(out)

    def member(self, m: int) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        F = parabolic_kernel(self.envelopes[m].alpha, check=False)
        u, gu, du = self.u[m], self.gu[m], self.dgu[m]
        return lambda x, y: F.fn(x - u, y - u) + gu + du * (x + y - 2 * u) / 2.0


def default_budget(g: Function1D, window, eps: float, n_profile: int = 2049) -> float:
    pilot = centers(g, window, PILOT_SIZE)
    vals = np.abs([hypothesis_integral(g, float(u), window, eps, n_profile) for u in pilot])
    return 10.0 * max(float(np.median(vals)), 0.1)


def touching_family(g: Function1D, window: tuple[float, float], D_size: int = 201,
                    K_budget: float | None = None, n_profile: int = 2049,
                    D: Sequence[float] | None = None) -> TouchingFamily:
    a, b = map(float, window)
    if not a < b:
        raise ValueError("window must satisfy a < b")
    eps = min(1.0, (b - a) / 2.0)
    L = lipschitz_on(g, (a, b))
    budget = default_budget(g, (a, b), eps, n_profile) if K_budget is None else float(K_budget)
    us = centers(g, (a, b), D_size) if D is None else np.asarray(D, dtype=float)

    def build(u):
        prof = phi_profile(g, float(u), (a, b), n_profile)
        return prof, prof.integral_over_x2(eps)

    built = _pmap(build, us)
    integrals = np.array([I for _, I in built])
    bad = np.nonzero(integrals < -budget)[0]
    if bad.size:
        m = int(bad[np.argmin(integrals[bad])])
        prof = built[m][0]
        partials = [(float(e), prof.integral_over_x2(e)) for e in eps * 2.0 ** -np.arange(0, 12)]
        raise BudgetError(float(us[m]), float(integrals[m]), budget, partials)
    envs = _pmap(parabolic_envelope, [p for p, _ in built])
    return TouchingFamily.pack((a, b), us, g(us), g.deriv(us), envs, integrals, budget, L)


def touching_extension(g: Function1D, window: tuple[float, float], D_size: int = 201,
                       K_budget: float | None = None, n_profile: int = 2049) -> Field2D:
    fam = touching_family(g, window, D_size, K_budget, n_profile)
    return Field2D(lambda x, y: fam(x, y), None,
                   {"method": "touching", "window": list(fam.window), "D_size": int(fam.u.size),
                    "budget": fam.budget, "C": fam.constant, "family": fam})


def check_concave(g: Function1D, window, n: int = 257, tol: float = 1e-9) -> None:
    a, b = window
    xs = np.linspace(a, b, n)[1:-1]
    for x in xs:
        T = min(x - a, b - x)
        ts = np.linspace(0.0, T, 65)[1:]
        om = g(x + ts) + g(x - ts) - 2.0 * g(x)
        if np.max(om) > tol:
            raise KernelPreconditionError(f"g is not concave near x={x:.6g}")


def concave_budget(g: Function1D, window, n_x: int = 33) -> float:
    """Budget from the lower integrals of a concave g; raises if one diverges.

    For concave g the minorant integral is below the plain one, so it screens
    every grid point cheaply; the plain integral confirms a divergence.
    """
    a, b = map(float, window)
    eps = min(1.0, (b - a) / 2.0)
    worst = 0.0
    for x in np.linspace(a, b, n_x + 2)[1:-1]:
        T = min(eps, x - a, b - x) * 0.999
        v = necessary_integral_star(g, float(x), T)
        if v.classification == DIVERGENT:
            plain = necessary_integral_plain(g, float(x), T)
            if plain.classification == DIVERGENT:
                raise NotATraceError(float(x), plain)
        worst = max(worst, abs(v.value) if math.isfinite(v.value) else abs(v.running_inf))
    return 10.0 * max(worst, 0.1)


def extend_concave(g: Function1D, window: tuple[float, float], D_size: int = 201,
                   n_x: int = 33, n_profile: int = 2049) -> Field2D:
    check_concave(g, window)
    budget = concave_budget(g, window, n_x)
    f = touching_extension(g, window, D_size, budget, n_profile)
    prov = dict(f.provenance, method="concave")
    return replace(f, provenance=prov)


def field_sum(*fields: Field2D) -> Field2D:
    doms = [f.domain for f in fields if f.domain is not None]
    dom = None
    if doms:
        dom = (max(d[0] for d in doms), min(d[1] for d in doms),
               max(d[2] for d in doms), min(d[3] for d in doms))
    return Field2D(lambda x, y: sum(f.fn(x, y) for f in fields), dom,
                   {"method": "sum", "parts": [dict(f.provenance) for f in fields]},
                   exact=all(f.exact for f in fields))


def extend_semiconcave(concave_part: Function1D, smooth_part: Function1D,
                       window: tuple[float, float], D_size: int = 201) -> Field2D:
    a, b = window
    radius = max(abs(a), abs(b))
    parts = []
    if not _is_zero(concave_part, window):
        parts.append(extend_concave(concave_part, window, D_size))
    parts.append(smooth_kernel(smooth_part, radius=radius))
    f = field_sum(*parts)
    return replace(f, provenance=dict(f.provenance, method="semiconcave"))


def _is_zero(g: Function1D, window) -> bool:
    xs = np.linspace(window[0], window[1], 101)
    return bool(np.all(g(xs) == 0.0))


def check_semiconvexity(g: Function1D, omega: Function1D, window, trials: int = 10_000,
                        seed: int = DEFAULT_SEED, tol: float = 1e-9) -> None:
    rng = np.random.default_rng(seed)
    a, b = window
    x = rng.uniform(a, b, trials)
    y = rng.uniform(a, b, trials)
    lam = rng.uniform(0.0, 1.0, trials)
    d = np.abs(x - y)
    lhs = g(lam * x + (1 - lam) * y)
    rhs = lam * g(x) + (1 - lam) * g(y) + lam * (1 - lam) * d * omega(d)
    bad = lhs > rhs + tol
    if np.any(bad):
        j = int(np.argmax(bad))
        raise KernelPreconditionError(
            f"semi-convexity with the given modulus fails at x={x[j]:.6g}, y={y[j]:.6g}, "
            f"lambda={lam[j]:.6g}")


def extend_with_modulus(g: Function1D, omega: Function1D, window: tuple[float, float] = (-1.0, 1.0),
                        D_size: int = 801, p: float = 1.0, n_table: int = 20001,
                        seed: int = DEFAULT_SEED) -> Field2D:
    """Sup over a center grid of ``F(x-u, y-u) + g(u) + g'_+(u)(x+y-2u)/2``."""
    a, b = map(float, window)
    check_semiconvexity(g, omega, (a, b), seed=seed)
    alpha = modulus_alpha(omega, p)
    F = parabolic_kernel(alpha, check=False)
    us = np.linspace(a, b, D_size)
    gu = np.asarray(g(us), dtype=float)
    du = np.asarray(g.right_deriv(us), dtype=float)
    # the kernel depends on (dx, dy) only: tabulate alpha and beta once
    reach = 2.0 * (b - a) + 2.0
    # geometric nodes near 0 keep alpha(s)/s -> 0 under linear interpolation
    ss = np.unique(np.concatenate((np.linspace(0.0, reach, n_table),
                                   np.geomspace(1e-12 * reach, 1e-2 * reach, 400))))
    A = alpha(ss)
    Bt = -ss * alpha.integral_over_t2(ss)

    def kernel(dx, dy):
        swap = np.abs(dy) > np.abs(dx)
        m = np.where(swap, dy, dx)
        o = np.where(swap, dx, dy)
        s = np.abs(m)
        al = np.interp(s, ss, A)
        be = np.interp(s, ss, Bt)
        safe = np.where(m != 0, m, 1.0)
        return np.where(m != 0, ((m + o) * al + (m - o) * be) / (2.0 * safe), 0.0)

    def fn(x, y):
        X = np.asarray(x, dtype=float)
        Y = np.asarray(y, dtype=float)
        if np.any(np.maximum(np.abs(X - a), np.abs(X - b)) > reach - 1.0) or \
                np.any(np.maximum(np.abs(Y - a), np.abs(Y - b)) > reach - 1.0):
            raise ValueError("query too far from the window")
        best = np.full(X.shape, -np.inf)
        for m in range(us.size):
            dx, dy = X - us[m], Y - us[m]
            best = np.maximum(best, kernel(dx, dy) + gu[m] + du[m] * (dx + dy) / 2.0)
        return best

    lo, hi = a - 1.0, b + 1.0
    return Field2D(fn, (lo, hi, lo, hi),
                   {"method": "modulus", "window": [a, b], "D_size": D_size, "p": p,
                    "alpha": alpha, "kernel_table": n_table, "F": F},
                   exact=False)


# ---------------------------------------------------------------------------
# local to global


def bump_function() -> Function1D:
    def fn(u):
        return -2.0 * np.maximum(0.0, 1.0 - u * u) ** 3

    def d1(u):
        return 12.0 * u * np.maximum(0.0, 1.0 - u * u) ** 2

    def d2(u):
        w = np.maximum(0.0, 1.0 - u * u)
        return 12.0 * w * w - 48.0 * u * u * w

    return Function1D(fn, d1=d1, d2=d2, name="glue_bump")


@dataclass(frozen=True)
class GlueSpec:
    levels: int = 2
    work_radius: float | None = None
    margin: float = 1e-3
    epsilon: float | None = None
    alphas: tuple[float, ...] | None = None
    bump: Function1D = field(default_factory=bump_function)
    local_tol: float = 5e-3

    def intervals(self) -> list[tuple[float, float]]:
        out = [(-1.0, 1.0)]
        for k in range(self.levels):
            out += [(2.0 ** k, 2.0 ** (k + 1)), (-(2.0 ** (k + 1)), -(2.0 ** k))]
        return out

    @property
    def radius(self) -> float:
        return self.work_radius if self.work_radius is not None else 2.0 ** (self.levels + 1) + 2.0


def _penalty(core_iv: tuple[float, float], depth: float) -> Function1D:
    a, b = core_iv

    def tau(u):
        return np.maximum(0.0, np.maximum(a - u, u - b))

    def sgn(u):
        return np.where(u > b, 1.0, np.where(u < a, -1.0, 0.0))

    return Function1D(lambda u: -depth * tau(u) ** 3,
                      d1=lambda u: -3.0 * depth * tau(u) ** 2 * sgn(u),
                      d2=lambda u: -6.0 * depth * tau(u), name="glue_penalty")


def _grid_square(h: float, n: int = 41):
    xs = np.linspace(-h, h, n)
    return np.meshgrid(xs, xs)


def glue_local(g: Function1D, local_builder: Callable[[Function1D, tuple[float, float]], Field2D],
               spec: GlueSpec = GlueSpec()) -> Field2D:
    """Glue local extensions over a dyadic cover into one field on the work square."""
    W = spec.radius
    us = np.linspace(-W, W, 4001)
    starred: dict[tuple[float, float], Field2D] = {}
    for iv in spec.intervals():
        a, b = iv
        loc = local_builder(g, (a - 1.0, b + 1.0))
        core_pts = np.linspace(a, b, 101)
        err = float(np.max(np.abs(loc(core_pts, core_pts) - g(core_pts))))
        if err > spec.local_tol:
            raise GlueError(f"local builder misses g on [{a}, {b}] by {err:.3g}")
        outside = (us < a - 1.0) | (us > b + 1.0)
        deficit = np.maximum(0.0, loc(us[outside], us[outside]) - g(us[outside]))
        depth = float(np.max(deficit, initial=0.0)) + spec.margin
        pen = smooth_kernel(_penalty(iv, depth), radius=W, n=8193)
        starred[iv] = Field2D(lambda x, y, f=loc, P=pen: f.fn(x, y) + P.fn(x, y),
                              (-W, W, -W, W), {"interval": [a, b], "depth": depth}, exact=False)
    Fb = smooth_kernel(spec.bump, radius=W, n=8193)
    eps = spec.epsilon
    if eps is None:
        eps = 0.5
        while np.max(Fb(*_grid_square(eps))) > -1.0:
            eps /= 2.0
            if eps < 1e-6:
                raise GlueError("no square where the bump extension stays below -1")
    members = [starred[(-1.0, 1.0)]]
    alphas = []
    for k in range(spec.levels):
        pos = starred[(2.0 ** k, 2.0 ** (k + 1))]
        neg = starred[(-(2.0 ** (k + 1)), -(2.0 ** k))]
        scale = 2.0 ** k
        X, Y = _grid_square(scale * eps)

        def level(alpha, pos=pos, neg=neg, scale=scale):
            return lambda x, y: (np.maximum(pos.fn(x, y), neg.fn(x, y))
                                 + alpha * Fb.fn(x / scale, y / scale))

        if spec.alphas is not None:
            ak = float(spec.alphas[k])
        else:
            ak = _min_alpha(lambda al: float(np.max(level(al)(X, Y))))
        alphas.append(ak)
        members.append(Field2D(level(ak), (-W, W, -W, W), exact=False))

    def fn(x, y):
        return np.maximum.reduce([m.fn(x, y) for m in members])

    final = replace(spec, epsilon=eps, alphas=tuple(alphas))
    return Field2D(fn, (-W, W, -W, W), {"method": "glue", "epsilon": eps,
                                        "alphas": list(alphas), "spec": final}, exact=False)


def _min_alpha(peak: Callable[[float], float], cap: float = 1e6) -> float:
    if peak(0.0) <= 0.0:
        return 0.0
    if peak(cap) > 0.0:
        raise GlueError("bump scaling exceeds the cap")
    lo, hi = 0.0, 1.0
    while peak(hi) > 0.0:
        lo, hi = hi, min(2.0 * hi, cap)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if peak(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# example fields


def example3_field(depth: int | None = None) -> Field2D:
    """Sup of rescaled copies of the extension of ``max(1 - x^2, 0)``."""
    base = PiecewiseParabola.from_coeffs([0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], name="-min(x^2,1)")
    F = parabolic_kernel(base, check=False)
    if depth is None:
        depth = 1
        while 3.0 ** -(depth + 1) >= 1e-14:
            depth += 1

    def fn(x, y):
        # copies outside their square equal |x - y|, which is also the limit term
        out = np.abs(x - y)
        for n in range(1, depth + 1):
            s = 3.0 ** n
            out = np.maximum(out, (F.fn(s * x - 2.0, s * y - 2.0) + 1.0) / s)
        return out

    return Field2D(fn, None, {"method": "example3", "depth": depth})
