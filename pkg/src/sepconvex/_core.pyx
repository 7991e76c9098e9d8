# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: lower hull and the pruned sup over a touching family."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


def lower_hull(s, v):
    cdef double[::1] S = np.ascontiguousarray(s, dtype=np.float64)
    cdef double[::1] V = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = S.shape[0], i, j, k, top = 0
    out = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] H = out
    for i in range(n):
        while top >= 2:
            j = H[top - 2]
            k = H[top - 1]
            if (S[k] - S[j]) * (V[i] - V[j]) - (V[k] - V[j]) * (S[i] - S[j]) <= 0.0:
                top -= 1
            else:
                break
        H[top] = i
        top += 1
    return out[:top].copy()


cdef inline double _kernel(double dx, double dy, const double[::1] knots, const double[::1] a,
                           const double[::1] c, const double[::1] cum, Py_ssize_t lo, Py_ssize_t hi) nogil:
    cdef double m, o, s, xk, ak, ck, alpha, integ, beta
    cdef Py_ssize_t left, right, mid
    if fabs(dx) >= fabs(dy):
        m = dx
        o = dy
    else:
        m = dy
        o = dx
    s = fabs(m)
    if s == 0.0:
        return 0.0
    # last knot <= s within [lo, hi)
    left = lo
    right = hi - 1
    while left < right:
        mid = (left + right + 1) // 2
        if knots[mid] <= s:
            left = mid
        else:
            right = mid - 1
    xk = knots[left]
    ak = a[left]
    ck = c[left]
    alpha = ak * s * s + ck
    integ = cum[left] + ak * (s - xk)
    if ck != 0.0:
        integ += ck * (1.0 / xk - 1.0 / s)
    beta = -s * integ
    return ((m + o) * alpha + (m - o) * beta) / (2.0 * m)


def family_sup(X, Y, u, gu, dgu, Cu, seg_ptr, knots, a, c, cum, bint prune=True):
    shape = np.shape(X)
    cdef double[::1] xs = np.ascontiguousarray(X, dtype=np.float64).ravel()
    cdef double[::1] ys = np.ascontiguousarray(Y, dtype=np.float64).ravel()
    cdef double[::1] U = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] GU = np.ascontiguousarray(gu, dtype=np.float64)
    cdef double[::1] DG = np.ascontiguousarray(dgu, dtype=np.float64)
    cdef double[::1] CU = np.ascontiguousarray(Cu, dtype=np.float64)
    cdef Py_ssize_t[::1] P = np.ascontiguousarray(seg_ptr, dtype=np.intp)
    cdef double[::1] K = np.ascontiguousarray(knots, dtype=np.float64)
    cdef double[::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] Cc = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[::1] I = np.ascontiguousarray(cum, dtype=np.float64)
    cdef Py_ssize_t npts = xs.shape[0], nu = U.shape[0], p, m
    out = np.empty(npts, dtype=np.float64)
    cdef double[::1] O = out
    cdef double best, dx, dy, bound, val, mx
    with nogil:
        for p in range(npts):
            best = -INFINITY
            for m in range(nu):
                dx = xs[p] - U[m]
                dy = ys[p] - U[m]
                if prune:
                    mx = fabs(dx) if fabs(dx) > fabs(dy) else fabs(dy)
                    bound = CU[m] * mx + GU[m] + fabs(DG[m]) * fabs(dx + dy) * 0.5
                    if bound <= best:
                        continue
                val = _kernel(dx, dy, K, A, Cc, I, P[m], P[m + 1]) + GU[m] + DG[m] * (dx + dy) * 0.5
                if val > best:
                    best = val
            O[p] = best
    return out.reshape(shape)
