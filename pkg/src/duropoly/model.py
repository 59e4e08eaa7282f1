"""Model primitives for a durable-goods monopoly with freely disposable goods.

A buyer of type ``theta`` handed an allocation ``x`` consumes the amount
that maximizes ``v(c) + theta*c`` over ``0 <= c <= x`` and discards the
rest at no cost, so utility is flat in ``x`` beyond the satiation point
``efficient_consumption(theta)``.  The seller screens against a regular
type distribution through the virtual value
``phi(theta) = theta - (1 - F(theta)) / f(theta)``.

This module houses the two value-function families, the type
distributions, the immutable ``Primitives`` bundle, and grid-based checks
of the regularity assumptions the downstream solvers rely on.  Every
operation is a pure function of its arguments and accepts scalars or
numpy arrays where that is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .numerics import bisect, simpson_breakpoints

QUADRATIC = "QUADRATIC"
PIECEWISE_MARGINAL = "PIECEWISE_MARGINAL"
UNIFORM = "UNIFORM"
LINEAR_DENSITY = "LINEAR_DENSITY"

_ASSUMPTION_GRID = 1001


def _maybe_scalar(arr, scalar_in: bool):
    return float(arr) if scalar_in else arr


@dataclass(frozen=True)
class ValueFunction:
    """Strictly concave consumption value ``v`` with ``v(0) = 0``.

    QUADRATIC: ``v(x) = a*x - b*x^2/2`` with curvature ``b > 0`` (``a`` is the
    marginal value at zero and may be negative).

    PIECEWISE_MARGINAL: ``v(x)`` integrates a piecewise-linear, strictly
    decreasing marginal value given by ``knots = ((z0, v'(z0)), ...)`` with
    ``z0 = 0``; the marketing-list reading is that profile ``z`` has
    standalone value ``v'(z)``.
    """

    family: str
    a: float = 0.0
    b: float = 1.0
    knots: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.family == QUADRATIC:
            if self.b <= 0.0:
                raise DomainError("quadratic curvature b must be positive")
        elif self.family == PIECEWISE_MARGINAL:
            z = np.array([k[0] for k in self.knots], dtype=float)
            vp = np.array([k[1] for k in self.knots], dtype=float)
            if len(z) < 2:
                raise DomainError("piecewise marginal value needs at least two knots")
            if z[0] != 0.0:
                raise DomainError("first knot must sit at z = 0")
            if np.any(np.diff(z) <= 0.0):
                raise DomainError("knot positions must be strictly increasing")
            if np.any(np.diff(vp) >= 0.0):
                raise DomainError("marginal values must be strictly decreasing")
        else:
            raise DomainError(f"unknown value-function family {self.family!r}")

    # -- family internals ------------------------------------------------
    def _knot_arrays(self):
        z = np.array([k[0] for k in self.knots], dtype=float)
        vp = np.array([k[1] for k in self.knots], dtype=float)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (vp[1:] + vp[:-1]) * np.diff(z))))
        return z, vp, cum

    def v(self, x):
        """Value of consuming exactly ``x``."""
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        if self.family == QUADRATIC:
            out = self.a * x_arr - 0.5 * self.b * x_arr**2
        else:
            z, vp, cum = self._knot_arrays()
            xc = np.clip(x_arr, z[0], z[-1])
            idx = np.clip(np.searchsorted(z, xc, side="right") - 1, 0, len(z) - 2)
            vp_x = np.interp(xc, z, vp)
            out = cum[idx] + 0.5 * (vp[idx] + vp_x) * (xc - z[idx])
        return _maybe_scalar(out, scalar)

    def vprime(self, x):
        """Marginal value ``v'(x)``; strictly decreasing under A1."""
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        if self.family == QUADRATIC:
            out = self.a - self.b * x_arr
        else:
            z, vp, _ = self._knot_arrays()
            out = np.interp(x_arr, z, vp)
        return _maybe_scalar(out, scalar)

    def vprime_inv(self, y, x_max: float):
        """Solve ``v'(x) = y`` on [0, x_max]; clamps outside the range of v'.

        Both shipped families invert exactly (algebra / segment
        interpolation).  A family without an exact inverse would fall back
        to ``_vprime_inv_bisect``; v' strictly decreasing makes that exact
        too, just slower.
        """
        y_arr = np.asarray(y, dtype=float)
        scalar = y_arr.ndim == 0
        if self.family == QUADRATIC:
            out = (self.a - y_arr) / self.b
        else:
            z, vp, _ = self._knot_arrays()
            out = np.interp(y_arr, vp[::-1], z[::-1])
        out = np.clip(out, 0.0, x_max)
        return _maybe_scalar(out, scalar)

    def _vprime_inv_bisect(self, y: float, x_max: float) -> float:
        if self.vprime(0.0) <= y:
            return 0.0
        if self.vprime(x_max) >= y:
            return x_max
        return bisect(lambda x: self.vprime(x) - y, 0.0, x_max, tol=1e-12)

    def breakpoints(self, x_max: float) -> list:
        """Interior kinks of v' on [0, x_max] (quadrature panel boundaries)."""
        if self.family == QUADRATIC:
            return []
        return [k[0] for k in self.knots if 0.0 < k[0] < x_max]


@dataclass(frozen=True)
class TypeDistribution:
    """Buyer type distribution on [theta_lo, theta_hi] with bounded density.

    UNIFORM needs no parameters beyond the support; LINEAR_DENSITY tilts the
    density by ``slope`` and renormalizes, so ``f(theta) = base +
    slope*(theta - theta_lo)`` with ``base`` pinned by integration to one.
    """

    family: str
    theta_lo: float
    theta_hi: float
    slope: float = 0.0

    def __post_init__(self):
        if self.family not in (UNIFORM, LINEAR_DENSITY):
            raise DomainError(f"unknown distribution family {self.family!r}")
        if self.family == UNIFORM and self.slope != 0.0:
            raise DomainError("uniform distribution takes no slope")
        if not self.theta_lo < self.theta_hi:
            raise DomainError("need theta_lo < theta_hi")
        if self.f_min <= 0.0:
            raise DomainError("density must stay strictly positive on the support")

    @property
    def width(self) -> float:
        return self.theta_hi - self.theta_lo

    @property
    def _base(self) -> float:
        w = self.width
        return (1.0 - 0.5 * self.slope * w * w) / w

    @property
    def f_min(self) -> float:
        return min(self._base, self._base + self.slope * self.width)

    @property
    def f_max(self) -> float:
        return max(self._base, self._base + self.slope * self.width)

    def in_support(self, theta) -> bool:
        t = np.asarray(theta, dtype=float)
        eps = 1e-12 * max(1.0, abs(self.theta_hi))
        return bool(np.all((t >= self.theta_lo - eps) & (t <= self.theta_hi + eps)))

    def f(self, theta):
        t = np.asarray(theta, dtype=float)
        scalar = t.ndim == 0
        out = np.full_like(t, self._base, dtype=float) + self.slope * (t - self.theta_lo)
        return _maybe_scalar(out, scalar)

    def F(self, theta):
        t = np.asarray(theta, dtype=float)
        scalar = t.ndim == 0
        d = np.clip(t, self.theta_lo, self.theta_hi) - self.theta_lo
        out = self._base * d + 0.5 * self.slope * d * d
        return _maybe_scalar(out, scalar)


@dataclass(frozen=True)
class Primitives:
    """The model: value function, type distribution, allocation interval, patience."""

    value: ValueFunction
    dist: TypeDistribution
    x_lo: float
    x_hi: float
    delta: float

    def __post_init__(self):
        if self.x_lo <= 0.0:
            raise DomainError("smallest feasible allocation x_lo must be positive")
        if self.x_lo > self.x_hi:
            raise DomainError("need x_lo <= x_hi")
        if not 0.0 <= self.delta < 1.0:
            raise DomainError("discount factor must lie in [0, 1)")

    @property
    def theta_lo(self) -> float:
        return self.dist.theta_lo

    @property
    def theta_hi(self) -> float:
        return self.dist.theta_hi


@dataclass(frozen=True)
class AssumptionRecord:
    id: str
    holds: bool
    margin: float
    witness: Optional[float] = None
    note: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    records: Tuple[AssumptionRecord, ...]

    def record(self, assumption_id: str) -> AssumptionRecord:
        for rec in self.records:
            if rec.id == assumption_id:
                return rec
        raise KeyError(assumption_id)

    def holds(self, ids: Sequence[str]) -> bool:
        return all(self.record(i).holds for i in ids)

    def as_table(self) -> str:
        lines = [f"{'id':<4} {'holds':<6} {'margin':>14}  witness / note"]
        for r in self.records:
            wit = "" if r.witness is None else f"{r.witness:.6g}"
            lines.append(f"{r.id:<4} {str(r.holds):<6} {r.margin:>14.6e}  {wit} {r.note}".rstrip())
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def efficient_consumption(prim: Primitives, theta):
    """Satiation consumption for type ``theta``: the unique maximizer of
    ``v(c) + theta*c`` on [0, x_hi].  Weakly increasing and continuous in
    ``theta``; total on the reals (corners clamp)."""
    return prim.value.vprime_inv(-np.asarray(theta, dtype=float), prim.x_hi)


def _check_allocation(prim: Primitives, x) -> np.ndarray:
    x_arr = np.asarray(x, dtype=float)
    tol = 1e-12 * max(1.0, prim.x_hi)
    if np.any(x_arr < -tol) or np.any(x_arr > prim.x_hi + tol):
        raise DomainError(f"allocation outside [0, {prim.x_hi}]")
    return np.clip(x_arr, 0.0, prim.x_hi)


def actual_consumption(prim: Primitives, x, theta):
    """Consumption chosen out of allocation ``x``: min(x, efficient level)."""
    x_arr = _check_allocation(prim, x)
    scalar = x_arr.ndim == 0 and np.asarray(theta).ndim == 0
    out = np.minimum(x_arr, efficient_consumption(prim, theta))
    return _maybe_scalar(out, scalar)


def utility(prim: Primitives, x, theta):
    """Buyer gross utility from allocation ``x``: value at the chosen
    consumption.  Flat in ``x`` beyond the satiation point (free disposal)."""
    theta_arr = np.asarray(theta, dtype=float)
    x_arr = _check_allocation(prim, x)
    scalar = x_arr.ndim == 0 and theta_arr.ndim == 0
    c = np.minimum(x_arr, efficient_consumption(prim, theta_arr))
    out = prim.value.v(c) + theta_arr * c
    return _maybe_scalar(out, scalar)


def utility_integral(
    prim: Primitives, x_cap: float, theta: float, panels: int = 10_000
) -> float:
    """Gross utility under allocation cap ``x_cap`` via the integral form
    ``int_0^{x_cap} max(v'(z) + theta, 0) dz``.

    The integrand vanishes beyond the satiation point, which is inserted as
    a panel boundary along with any marginal-value knots.  The result is
    cross-checked against the pointwise-max form to 1e-8; disagreement
    signals a broken value function and raises.
    """
    x_cap = float(x_cap)
    if x_cap < -1e-12 or x_cap > prim.x_hi + 1e-12:
        raise DomainError(f"cap outside [0, {prim.x_hi}]")
    upper = min(x_cap, float(efficient_consumption(prim, theta)))
    if upper <= 0.0:
        quad = 0.0
    else:
        pts = [0.0] + [b for b in prim.value.breakpoints(prim.x_hi) if b < upper] + [upper]
        quad = simpson_breakpoints(
            lambda z: prim.value.vprime(z) + theta, pts, panels
        )
    direct = float(utility(prim, min(x_cap, prim.x_hi), theta))
    if abs(quad - direct) > 1e-8:
        raise ArithmeticError(
            f"integral and pointwise-max utilities disagree: {quad!r} vs {direct!r}"
        )
    return quad


def virtual_value(prim: Primitives, theta):
    """Screening-adjusted type: ``theta - (1 - F(theta)) / f(theta)``."""
    t = np.asarray(theta, dtype=float)
    scalar = t.ndim == 0
    if not prim.dist.in_support(t):
        raise DomainError("type outside the distribution support")
    out = t - (1.0 - prim.dist.F(t)) / prim.dist.f(t)
    return _maybe_scalar(out, scalar)


def virtual_surplus(prim: Primitives, x, theta):
    """Seller's pointwise objective ``v(x) + x * virtual_value(theta)``."""
    x_arr = _check_allocation(prim, x)
    scalar = x_arr.ndim == 0 and np.asarray(theta).ndim == 0
    out = prim.value.v(x_arr) + x_arr * virtual_value(prim, theta)
    return _maybe_scalar(out, scalar)


def virtual_surplus_maximizer(prim: Primitives, theta):
    """Unconstrained (over [0, x_hi]) maximizer of the virtual surplus;
    weakly increasing in ``theta`` under A2."""
    phi = virtual_value(prim, theta)
    return prim.value.vprime_inv(-np.asarray(phi, dtype=float), prim.x_hi)


def check_assumptions(prim: Primitives, grid_n: int = _ASSUMPTION_GRID) -> AssumptionReport:
    """Grid-based audit of assumptions A1-A4 (A5 is a constraint on play,
    enforced by the path constructors, and is recorded as applicable).

    Margins are signed slack: positive means the assumption holds with room,
    zero means it binds, negative means it fails at the recorded witness.
    """
    records = []

    xs = np.linspace(0.0, prim.x_hi, grid_n)
    vp = prim.value.vprime(xs)
    decrements = -np.diff(vp)
    i1 = int(np.argmin(decrements))
    v0 = abs(float(prim.value.v(0.0)))
    a1_holds = bool(decrements[i1] > 0.0) and v0 <= 1e-12
    a1_margin = float(decrements[i1]) if v0 <= 1e-12 else -v0
    records.append(
        AssumptionRecord("A1", a1_holds, a1_margin, float(xs[i1]),
                         "strict concavity: min v' decrement on grid; v(0)=0 to 1e-12")
    )

    thetas = np.linspace(prim.theta_lo, prim.theta_hi, grid_n)
    f_vals = prim.dist.f(thetas)
    phi = thetas - (1.0 - prim.dist.F(thetas)) / f_vals
    f_min = float(f_vals.min())
    if f_min <= 0.0:
        records.append(AssumptionRecord("A2", False, f_min, float(thetas[np.argmin(f_vals)]),
                                        "density not bounded away from zero"))
    else:
        increments = np.diff(phi)
        i2 = int(np.argmin(increments))
        records.append(
            AssumptionRecord("A2", bool(increments[i2] > 0.0), float(increments[i2]),
                             float(thetas[i2]), "virtual value strictly increasing on grid")
        )

    xe_lo = float(efficient_consumption(prim, prim.theta_lo))
    a3_margin = prim.x_lo - xe_lo
    a3_holds = xe_lo > 0.0 and a3_margin >= 0.0
    records.append(
        AssumptionRecord("A3", a3_holds, float(a3_margin if xe_lo > 0.0 else -1.0),
                         xe_lo, "lowest type satiated at the minimum allocation")
    )

    xe = efficient_consumption(prim, thetas)
    vs = prim.value.v(xe) + xe * phi
    i4 = int(np.argmin(vs))
    records.append(
        AssumptionRecord("A4", bool(vs[i4] >= -1e-9), float(vs[i4]), float(thetas[i4]),
                         "virtual surplus at efficient consumption nonnegative")
    )

    records.append(
        AssumptionRecord("A5", True, 0.0, None,
                         "decreasing-allocation discipline; enforced by path constructors")
    )
    return AssumptionReport(tuple(records))
