"""Grid certificates for assembled fields.

Separate convexity is checked with second differences along grid rows and
columns, the trace by direct comparison on the diagonal, and the one-sided
directional inequality ``D+_v f + D+_{-v} f >= 0`` with a dyadic stencil.
All verdicts are statements about the sampled grid, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .func1d import Function1D
from .kernels import Field2D

EXACT_ABS = 1e-8
EXACT_REL = 1e-6
NUMERIC_REL = 1e-4
DIRECTIONAL_TOL = 1e-4
DIRECTIONAL_STEPS = tuple(range(4, 21))
DIRECTIONAL_TAIL = 6
MIN_NODES, MAX_NODES = 3, 4001

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GridSpec:
    xmin: float
    xmax: float
    n: int

    def __post_init__(self):
        if not (MIN_NODES <= int(self.n) <= MAX_NODES):
            raise ValueError(f"grid n must lie in [{MIN_NODES}, {MAX_NODES}], got {self.n}")
        if not (math.isfinite(self.xmin) and math.isfinite(self.xmax) and self.xmin < self.xmax):
            raise ValueError("grid needs finite xmin < xmax")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, int(self.n))

    @property
    def h(self) -> float:
        return (self.xmax - self.xmin) / (self.n - 1)

    def as_tuple(self) -> tuple[float, float, int]:
        return float(self.xmin), float(self.xmax), int(self.n)


def _as_grid(grid) -> GridSpec:
    return grid if isinstance(grid, GridSpec) else GridSpec(*grid)


def grid_field(xs, ys, values, exact: bool = True, provenance: dict | None = None) -> Field2D:
    """Bilinear field through tabulated nodes; ``values[j, i]`` sits at ``(xs[i], ys[j])``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (ys.size, xs.size):
        raise ValueError(f"values must have shape {(ys.size, xs.size)}, got {values.shape}")
    interp = RegularGridInterpolator((ys, xs), values, method="linear")

    def fn(x, y):
        pts = np.stack((np.ravel(y), np.ravel(x)), axis=-1)
        return interp(pts).reshape(np.shape(x))

    prov = {"source": "grid", "nodes": [int(xs.size), int(ys.size)], **(provenance or {})}
    return Field2D(fn, (float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1])), prov, exact=exact)


def tol_conv(f: Field2D, values: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(values))))
    if f.exact:
        return EXACT_ABS + EXACT_REL * scale
    return NUMERIC_REL * scale


def _grid_values(f: Field2D, grid: GridSpec) -> np.ndarray:
    xs = grid.nodes
    X, Y = np.meshgrid(xs, xs)
    vals = np.asarray(f(X, Y), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("field is not finite on the grid")
    return vals


def _margins(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # rows vary x at fixed y, columns vary y at fixed x
    along_x = vals[:, 2:] + vals[:, :-2] - 2.0 * vals[:, 1:-1]
    along_y = vals[2:, :] + vals[:-2, :] - 2.0 * vals[1:-1, :]
    return along_x, along_y


def check_separate_convexity(f: Field2D, grid, tol: float | None = None,
                             values: np.ndarray | None = None) -> tuple[float, list[tuple]]:
    """Minimum axis-parallel second difference and every margin below ``-tol``.

    Violations are ``(axis, fixed_coordinate, position, margin)`` with the raw
    margin, so another threshold can be applied later.
    """
    grid = _as_grid(grid)
    vals = _grid_values(f, grid) if values is None else values
    tol = tol_conv(f, vals) if tol is None else tol
    xs = grid.nodes
    mx, my = _margins(vals)
    violations = []
    for j, i in zip(*np.nonzero(mx < -tol)):
        violations.append(("x", float(xs[j]), float(xs[i + 1]), float(mx[j, i])))
    for j, i in zip(*np.nonzero(my < -tol)):
        violations.append(("y", float(xs[i]), float(xs[j + 1]), float(my[j, i])))
    return float(min(mx.min(), my.min())), violations


def check_trace(f: Field2D, g: Function1D, diag_grid) -> float:
    ts = _as_grid(diag_grid).nodes if not isinstance(diag_grid, np.ndarray) else diag_grid
    return float(np.max(np.abs(np.asarray(f(ts, ts), dtype=float) - np.asarray(g(ts), dtype=float))))


@dataclass(frozen=True)
class DirectionalVerdict:
    verdict: str
    total: float
    d_plus: float
    d_minus: float
    steps: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "sum": self.total,
                "d_plus": self.d_plus, "d_minus": self.d_minus}


def _upper_derivative(f: Field2D, p: np.ndarray, v: np.ndarray, f0: float) -> tuple[float, np.ndarray]:
    hs = 2.0 ** -np.asarray(DIRECTIONAL_STEPS, dtype=float)
    q = (np.asarray(f(p[0] + hs * v[0], p[1] + hs * v[1]), dtype=float) - f0) / hs
    return float(np.max(q[-DIRECTIONAL_TAIL:])), q


def check_directional(f: Field2D, point, v) -> DirectionalVerdict:
    """Compare the upper one-sided derivatives of f along ``v`` and ``-v``."""
    p = np.asarray(point, dtype=float)
    v = np.asarray(v, dtype=float)
    if p.shape != (2,) or v.shape != (2,):
        raise ValueError("point and direction must be 2-vectors")
    if abs(float(np.hypot(*v)) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    f0 = float(f(p[0], p[1]))
    dp, qp = _upper_derivative(f, p, v, f0)
    dm, qm = _upper_derivative(f, p, -v, f0)
    total = dp + dm
    sums = qp + qm
    tail = sums[-DIRECTIONAL_TAIL:]
    if total >= -DIRECTIONAL_TOL:
        verdict = PASS
    elif np.all(tail < -DIRECTIONAL_TOL) and np.ptp(tail) <= 0.1 * abs(total):
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return DirectionalVerdict(verdict, total, dp, dm, [float(s) for s in sums])


@dataclass(frozen=True)
class VerificationReport:
    grid: tuple[float, float, int]
    trace_max_abs_err: float
    convexity_min_margin: float
    margin_normalization: float
    violations: list[tuple]
    directional_check: str
    passed: bool
    trace_tol: float = 0.0
    directional: DirectionalVerdict | None = None

    def as_dict(self, max_violations: int = 100) -> dict:
        return {
            "grid": list(self.grid),
            "trace_max_abs_err": self.trace_max_abs_err,
            "trace_tol": self.trace_tol,
            "convexity_min_margin": self.convexity_min_margin,
            "margin_normalization": self.margin_normalization,
            "violation_count": len(self.violations),
            "violations": [list(v) for v in self.violations[:max_violations]],
            "directional_check": self.directional_check,
            "directional": self.directional.as_dict() if self.directional else None,
            "passed": self.passed,
        }


def verify_field(f: Field2D, g: Function1D | None, grid, trace_tol: float = 1e-6,
                 tol: float | None = None, point=None, direction=None) -> VerificationReport:
    """Run every certificate on ``grid`` and combine them into one verdict.

    Without ``g`` the trace check is skipped (reported as 0).  The directional
    check defaults to the grid center along the diagonal.
    """
    grid = _as_grid(grid)
    vals = _grid_values(f, grid)
    norm = tol_conv(f, vals) if tol is None else float(tol)
    margin, violations = check_separate_convexity(f, grid, norm, vals)
    trace_err = check_trace(f, g, grid) if g is not None else 0.0
    if point is None:
        point = (0.5 * (grid.xmin + grid.xmax),) * 2
    if direction is None:
        direction = (1.0 / math.sqrt(2.0),) * 2
    directional = check_directional(f, point, direction)
    passed = trace_err <= trace_tol and margin >= -norm and directional.verdict != FAIL
    return VerificationReport(grid.as_tuple(), trace_err, margin, norm, violations,
                              directional.verdict, bool(passed), trace_tol, directional)
