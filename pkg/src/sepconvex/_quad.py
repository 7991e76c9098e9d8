"""Cumulative Gauss-Legendre tables for integrals of the form int_0^x f."""

from __future__ import annotations

from typing import Callable

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(10)


def _panel(fn: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[..., None] + half[..., None] * _NODES
    return half * np.sum(fn(pts) * _WEIGHTS, axis=-1)


class CumulativeIntegral:
    """x -> int_0^x fn on [0, upper], exact up to panel quadrature error.

    Panels are geometric towards 0 so integrable singularities there are
    resolved; the first panel [0, upper*tiny] is integrated as well.  Kinks of
    the integrand passed as ``breaks`` become panel boundaries.
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], upper: float,
                 tiny: float = 1e-14, per_decade: int = 24, linear: int = 256,
                 breaks=()):
        self.fn = fn
        self.upper = float(upper)
        geo = self.upper * np.logspace(np.log10(tiny), -2, int(per_decade * (-2 - np.log10(tiny))) + 1)
        lin = np.linspace(self.upper * 1e-2, self.upper, linear + 1)[1:]
        extra = [b for b in np.abs(np.asarray(breaks, dtype=float)) if 0 < b < self.upper]
        self.knots = np.unique(np.concatenate(([0.0], geo, lin, extra)))
        vals = _panel(fn, self.knots[:-1], self.knots[1:])
        self.table = np.concatenate(([0.0], np.cumsum(vals)))

    def __call__(self, x) -> np.ndarray:
        xa = np.asarray(x, dtype=float)
        if np.any(xa < 0) or np.any(xa > self.upper * (1 + 1e-12)):
            raise ValueError(f"cumulative integral queried outside [0, {self.upper}]")
        xa = np.minimum(xa, self.upper)
        k = np.clip(np.searchsorted(self.knots, xa, side="right") - 1, 0, self.knots.size - 1)
        lo = self.knots[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            part = _panel(self.fn, lo, np.maximum(xa, lo))
        return self.table[k] + np.where(xa > lo, part, 0.0)
