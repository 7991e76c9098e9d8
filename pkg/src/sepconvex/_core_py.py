"""Pure numpy fallback for the compiled kernels in ``_core``."""

from __future__ import annotations

import numpy as np


def lower_hull(s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points sorted by s (monotone chain)."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    hull: list[int] = []
    for i in range(s.size):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            # drop k if it lies on or above the chord j -> i
            if (s[k] - s[j]) * (v[i] - v[j]) - (v[k] - v[j]) * (s[i] - s[j]) <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.intp)


def _kernel_values(dx, dy, knots, a, c, cum):
    big = np.abs(dx) >= np.abs(dy)
    m = np.where(big, dx, dy)
    o = np.where(big, dy, dx)
    s = np.abs(m)
    k = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, knots.size - 1)
    ak, ck, xk = a[k], c[k], knots[k]
    alpha = ak * s * s + ck
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(xk > 0, 1.0 / xk, 0.0) - np.where(s > 0, 1.0 / s, 0.0)
        integ = cum[k] + ak * (s - xk) + np.where(ck != 0.0, ck * inv, 0.0)
        beta = -s * integ
        F = ((m + o) * alpha + (m - o) * beta) / (2.0 * m)
    return np.where(s > 0, F, 0.0)


def family_sup(X, Y, u, gu, dgu, Cu, seg_ptr, knots, a, c, cum, prune=True):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    best = np.full(X.shape, -np.inf)
    for m in range(u.size):
        lo, hi = seg_ptr[m], seg_ptr[m + 1]
        dx = X - u[m]
        dy = Y - u[m]
        if prune:
            bound = Cu[m] * np.maximum(np.abs(dx), np.abs(dy)) + gu[m] + np.abs(dgu[m]) * np.abs(dx + dy) / 2.0
            live = bound > best
            if not np.any(live):
                continue
            dx, dy = dx[live], dy[live]
        else:
            live = slice(None)
        val = _kernel_values(dx, dy, knots[lo:hi], a[lo:hi], c[lo:hi], cum[lo:hi])
        val = val + gu[m] + dgu[m] * (dx + dy) / 2.0
        best[live] = np.maximum(best[live], val)
    return best
