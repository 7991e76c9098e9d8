"""Independent reference computations used by the tests.

None of these share code with the package: envelopes come from a linear
program, hulls from qhull, integrals from mpmath quadrature.
"""

import math

import mpmath
import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull


def lp_envelope(ys, phi, x):
    """max a x^2 + c subject to a y_j^2 + c <= phi_j, a <= 0, c <= 0."""
    s = np.asarray(ys, dtype=float) ** 2
    A = np.column_stack((s, np.ones_like(s)))
    res = linprog([-x * x, -1.0], A_ub=A, b_ub=np.asarray(phi, dtype=float),
                  bounds=[(None, 0.0), (None, 0.0)], method="highs")
    assert res.status == 0, res.message
    return -res.fun


def qhull_lower(s, v):
    """Indices of the lower hull vertices of (s, v), sorted by s."""
    pts = np.column_stack((s, v))
    hull = ConvexHull(pts)
    keep = set()
    for simplex, eq in zip(hull.simplices, hull.equations):
        if eq[1] < -1e-12:
            keep.update(int(i) for i in simplex)
    return np.array(sorted(keep, key=lambda i: s[i]))


def mp_integral(fn, lo, hi, points=()):
    edges = [lo, *sorted(p for p in points if lo < p < hi), hi]
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda t: fn(float(t)), edges))


def tangent_sup(g, dg, us, x, y):
    """Sup of the planes g(u) + g'(u) (x + y - 2u)/2 over the centers."""
    us = np.asarray(us, dtype=float)
    vals = g(us)[None, :] + dg(us)[None, :] * (np.ravel(x)[:, None] + np.ravel(y)[:, None]
                                             - 2.0 * us[None, :]) / 2.0
    return vals.max(axis=1).reshape(np.shape(x))


def second_differences(F):
    return (F[:, 2:] + F[:, :-2] - 2.0 * F[:, 1:-1],
            F[2:, :] + F[:-2, :] - 2.0 * F[1:-1, :])


def grid(lo, hi, n):
    xs = np.linspace(lo, hi, n)
    return np.meshgrid(xs, xs)


def log_log(b):
    return 2.0 * math.log(abs(math.log(b)))
