"""Small numerical kernels: bisection and kink-aware composite Simpson.

Integrands in this package are piecewise smooth with known breakpoints
(consumption caps, marginal-value knots), so the quadrature splits the
interval at the supplied breakpoints and runs composite Simpson on each
smooth piece.  That keeps the panels away from kinks and makes the rule
exact for the polynomial pieces the shipped families produce.
"""

from __future__ import annotations

import numpy as np

from .errors import NoRootError

DEFAULT_SIMPSON_PANELS = 10_000


def bisect(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Find a root of ``f`` on [lo, hi] by bisection.

    Requires a sign change (or an exact zero at an endpoint); raises
    NoRootError otherwise.  The returned point is within ``tol`` of a root
    of any continuous ``f`` with these endpoint signs.
    """
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise NoRootError(
            f"no sign change on [{lo:.6g}, {hi:.6g}]: f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}",
            lo_value=f_lo,
            hi_value=f_hi,
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0 or (hi - lo) <= tol:
            return mid
        if f_lo * f_mid < 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def composite_simpson(fn, a: float, b: float, subintervals: int) -> float:
    """Composite Simpson on [a, b] with an even number of subintervals."""
    if b <= a:
        return 0.0
    n = max(2, int(subintervals))
    if n % 2:
        n += 1
    x = np.linspace(a, b, n + 1)
    y = np.asarray(fn(x), dtype=float)
    h = (b - a) / n
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def simpson_breakpoints(fn, points, total_subintervals: int = DEFAULT_SIMPSON_PANELS) -> float:
    """Integrate ``fn`` over [points[0], points[-1]] splitting at each breakpoint.

    The subinterval budget is distributed across pieces proportionally to
    their length, with a floor so short pieces still get a Simpson rule.
    """
    pts = sorted(set(float(p) for p in points))
    if len(pts) < 2:
        return 0.0
    total_len = pts[-1] - pts[0]
    if total_len <= 0.0:
        return 0.0
    out = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        share = max(8, int(round(total_subintervals * (b - a) / total_len)))
        out += composite_simpson(fn, a, b, share)
    return out


def cumulative_trapezoid(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid integral of samples ``y`` over grid ``x``; starts at 0."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out
