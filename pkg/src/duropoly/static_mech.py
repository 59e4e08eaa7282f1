"""Static commitment benchmarks.

Two full-commitment screening problems anchor everything dynamic: the
unconstrained revenue maximum ``pi`` (allocations free in [x_lo, x_hi])
and the efficiency-constrained maximum ``pi_e`` (every allocation at least
the lowest type's satiation level, so the bottom of the market is served
efficiently).  Both reduce to pointwise maximization of the virtual
surplus plus an envelope payment, solved here on a type grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DomainError, InfeasibleError
from .model import (
    Primitives,
    efficient_consumption,
    utility,
    virtual_value,
    virtual_surplus_maximizer,
)
from .numerics import bisect, cumulative_trapezoid

UNCONSTRAINED = "UNCONSTRAINED"
EFFICIENCY_CONSTRAINED = "EFFICIENCY_CONSTRAINED"

DEFAULT_GRID_N = 2001


@dataclass(frozen=True)
class MechanismSchedule:
    """Sampled optimal mechanism: per-type allocation, consumption, price,
    and information rent, plus the seller payoff.

    ``payoff`` integrates the virtual surplus at the chosen consumption;
    ``payoff_price_integral`` integrates prices against the density.  The
    two agree (to quadrature error) by the envelope argument, and the pair
    is kept as a built-in consistency check.
    """

    theta_grid: np.ndarray
    alloc: np.ndarray
    consumption: np.ndarray
    price: np.ndarray
    info_rent: np.ndarray
    payoff: float
    payoff_price_integral: float
    variant: str
    min_virtual_surplus: float

    @property
    def negative_virtual_surplus(self) -> bool:
        """Set when some type's virtual surplus at its consumption is negative:
        withholding would then raise revenue and payoffs here overstate the
        true optimum with withholding allowed."""
        return self.min_virtual_surplus < -1e-9

    def to_csv_rows(self):
        yield ("theta", "alloc", "consumption", "price", "rent")
        for row in zip(self.theta_grid, self.alloc, self.consumption,
                       self.price, self.info_rent):
            yield tuple(f"{v!r}" for v in row)


def _clamp_threshold(prim: Primitives, bound: float) -> float:
    """Type at which the virtual-surplus maximizer crosses ``bound``
    (inserted into grids so integrals see the clamp kink)."""
    lo, hi = prim.theta_lo, prim.theta_hi
    g = lambda t: float(virtual_surplus_maximizer(prim, t)) - bound
    if g(lo) >= 0.0:
        return lo
    if g(hi) <= 0.0:
        return hi
    return bisect(g, lo, hi, tol=1e-12)


def _solve(prim: Primitives, grid_n: int, lo_bound: float, variant: str) -> MechanismSchedule:
    if grid_n < 101:
        raise DomainError("grid_n must be at least 101")
    thetas = np.linspace(prim.theta_lo, prim.theta_hi, grid_n)
    kink = _clamp_threshold(prim, lo_bound)
    if prim.theta_lo < kink < prim.theta_hi:
        thetas = np.unique(np.concatenate((thetas, [kink])))

    x_m = np.asarray(virtual_surplus_maximizer(prim, thetas))
    alloc = np.clip(x_m, lo_bound, prim.x_hi)
    consumption = np.minimum(alloc, efficient_consumption(prim, thetas))
    phi = virtual_value(prim, thetas)
    f = prim.dist.f(thetas)

    info_rent = cumulative_trapezoid(consumption, thetas)
    gross = utility(prim, alloc, thetas)
    price = gross - info_rent

    vs = prim.value.v(consumption) + consumption * phi
    payoff_virtual = float(np.trapz(vs * f, thetas))
    payoff_price = float(np.trapz(price * f, thetas))

    return MechanismSchedule(
        theta_grid=thetas,
        alloc=alloc,
        consumption=consumption,
        price=price,
        info_rent=info_rent,
        payoff=payoff_virtual,
        payoff_price_integral=payoff_price,
        variant=variant,
        min_virtual_surplus=float(vs.min()),
    )


def solve_unconstrained(prim: Primitives, grid_n: int = DEFAULT_GRID_N) -> MechanismSchedule:
    """Revenue-maximizing schedule over allocations in [x_lo, x_hi].

    The optimal allocation clamps the virtual-surplus first-order point to
    the feasible interval (ties resolved to the bound), consumption caps it
    at the satiation level, and prices follow the zero-rent-at-the-bottom
    envelope.
    """
    return _solve(prim, grid_n, prim.x_lo, UNCONSTRAINED)


def solve_constrained(prim: Primitives, grid_n: int = DEFAULT_GRID_N) -> MechanismSchedule:
    """Revenue maximum subject to serving the lowest type efficiently.

    Allocations are floored at the lowest type's satiation level, which
    also keeps every allocation at or below its recipient's satiation
    point, so the whole allocation is consumed.  Infeasible when even the
    largest allocation cannot satiate the lowest type.
    """
    xe_lo = float(efficient_consumption(prim, prim.theta_lo))
    if xe_lo > prim.x_hi:
        raise InfeasibleError(
            f"lowest type needs {xe_lo:.6g} but the largest allocation is {prim.x_hi:.6g}"
        )
    return _solve(prim, grid_n, max(prim.x_lo, xe_lo), EFFICIENCY_CONSTRAINED)


def commitment_bound(payoff: float, sched: MechanismSchedule,
                     tol: float = 1e-6) -> Tuple[bool, float]:
    """Check a candidate payoff against the commitment cap ``pi``.

    Returns (ok, margin) with margin = pi - payoff; ok allows ``tol`` of
    numerical overshoot.  Only meaningful against an UNCONSTRAINED solve.
    """
    if sched.variant != UNCONSTRAINED:
        raise DomainError("commitment bound is defined by the unconstrained benchmark")
    margin = sched.payoff - float(payoff)
    return margin >= -tol, margin
