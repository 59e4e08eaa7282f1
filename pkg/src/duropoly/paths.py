"""Dynamic price-path constructions.

Four families of market outcomes, all sequences of (allocation, price)
offers accepted by successive upper intervals of the remaining types:

* ``coasian_path``: one offer clears the whole market at the lowest type's
  full valuation; independent of the discount factor.
* ``build_reputational``: a decreasing staircase of offers tracking the
  static optimum's allocations, priced so each cutoff type is indifferent
  to waiting one period; converges to the commitment payoff as the
  staircase refines and patience grows.
* ``interpolate_family`` / ``target_payoff``: blend the staircase
  allocations toward the minimum allocation with weight ``s``; the payoff
  moves continuously between the clearing payoff and the staircase payoff,
  so any intermediate value can be hit by bisection on ``s``.
* ``build_relaxed_tail``: the staircase for models where the minimum
  allocation cannot satiate the lowest type; it ends with a small
  "bump" offer just above the lowest type's satiation level and a final
  clearing offer at that level.

Every constructor prices by the same one-period indifference recursion and
ends with zero surplus for the lowest type, which makes the direct payoff
sum and the discounted virtual-surplus integral agree exactly (up to
quadrature) — the core identity `path_payoff_virtual` checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import (
    ConstructionError,
    DomainError,
    InfeasibleError,
    NoRootError,
    TargetOutOfRangeError,
)
from .model import (
    Primitives,
    check_assumptions,
    efficient_consumption,
    utility,
    virtual_surplus_maximizer,
    virtual_value,
)
from .numerics import bisect, simpson_breakpoints

COASIAN = "COASIAN"
REPUTATIONAL = "REPUTATIONAL"
REPUTATIONAL_S = "REPUTATIONAL_S"
RELAXED_TAIL = "RELAXED_TAIL"


@dataclass(frozen=True)
class Offer:
    x: float
    p: float


@dataclass(frozen=True)
class PathStep:
    """One period: the posted offer and the type interval that accepts it."""

    t: int
    offer: Offer
    cutoff_hi: float
    cutoff_lo: float
    mass: float


@dataclass(frozen=True)
class EquilibriumPath:
    steps: Tuple[PathStep, ...]
    delta: float
    payoff: float
    kind: str
    s: Optional[float] = None

    @property
    def prices(self) -> np.ndarray:
        return np.array([st.offer.p for st in self.steps])

    @property
    def allocations(self) -> np.ndarray:
        return np.array([st.offer.x for st in self.steps])

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "delta": self.delta,
            "s": self.s,
            "n_steps": len(self.steps),
            "payoff": self.payoff,
            "steps": [
                {
                    "t": st.t,
                    "x": st.offer.x,
                    "p": st.offer.p,
                    "cutoff_hi": st.cutoff_hi,
                    "cutoff_lo": st.cutoff_lo,
                    "mass": st.mass,
                }
                for st in self.steps
            ],
        }
        return json.dumps(doc, indent=2)

    def to_csv_rows(self):
        yield ("t", "x", "p", "cutoff_hi", "cutoff_lo", "mass")
        for st in self.steps:
            yield tuple(
                f"{v!r}"
                for v in (st.t, st.offer.x, st.offer.p, st.cutoff_hi, st.cutoff_lo, st.mass)
            )


def path_from_json(text: str) -> EquilibriumPath:
    doc = json.loads(text)
    steps = tuple(
        PathStep(
            t=int(d["t"]),
            offer=Offer(x=float(d["x"]), p=float(d["p"])),
            cutoff_hi=float(d["cutoff_hi"]),
            cutoff_lo=float(d["cutoff_lo"]),
            mass=float(d["mass"]),
        )
        for d in doc["steps"]
    )
    return EquilibriumPath(
        steps=steps,
        delta=float(doc["delta"]),
        payoff=float(doc["payoff"]),
        kind=str(doc["kind"]),
        s=None if doc.get("s") is None else float(doc["s"]),
    )


def _assemble(prim: Primitives, kind: str, cutoffs, allocations, prices,
              s: Optional[float] = None) -> EquilibriumPath:
    """Build and validate a path from cutoffs (theta_0 > ... > theta_T) and
    per-period offers; payoff is the discounted price sum over masses."""
    steps = []
    payoff = 0.0
    for i, (x, p) in enumerate(zip(allocations, prices), start=1):
        hi, lo = float(cutoffs[i - 1]), float(cutoffs[i])
        if not lo < hi:
            raise ConstructionError(f"cutoffs must strictly decrease (step {i})")
        mass = float(prim.dist.F(hi) - prim.dist.F(lo))
        steps.append(PathStep(t=i - 1, offer=Offer(float(x), float(p)),
                              cutoff_hi=hi, cutoff_lo=lo, mass=mass))
        payoff += prim.delta ** (i - 1) * mass * float(p)
    xs = [st.offer.x for st in steps]
    ps = [st.offer.p for st in steps]
    if any(b > a + 1e-12 for a, b in zip(xs, xs[1:])):
        raise ConstructionError("allocations must be weakly decreasing along the path")
    if any(b > a + 1e-9 for a, b in zip(ps, ps[1:])):
        raise ConstructionError("prices failed to come out weakly decreasing")
    return EquilibriumPath(steps=tuple(steps), delta=prim.delta,
                           payoff=payoff, kind=kind, s=s)


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------

def coasian_path(prim: Primitives) -> EquilibriumPath:
    """Immediate clearing: offer the largest allocation at the lowest type's
    full valuation.  Requires the lowest type to be satiated by every
    feasible allocation (A3) and nonnegative virtual surplus (A4); the
    construction does not involve the discount factor."""
    report = check_assumptions(prim)
    for aid in ("A3", "A4"):
        if not report.record(aid).holds:
            raise InfeasibleError(
                f"immediate-clearing path needs {aid}; margin "
                f"{report.record(aid).margin:.3g} (use the relaxed-tail machinery)"
            )
    p = float(utility(prim, prim.x_hi, prim.theta_lo))
    return _assemble(prim, COASIAN, [prim.theta_hi, prim.theta_lo], [prim.x_hi], [p])


def cutoff_indifference(prim: Primitives, x: float, p: float,
                        next_x: float, next_p: float) -> float:
    """Type indifferent between (x, p) today and (next_x, next_p) tomorrow.

    The difference u(x,t)-p - delta*(u(next_x,t)-next_p) is nondecreasing in
    t when x >= next_x, so bisection finds the unique root; raises
    NoRootError when every type strictly prefers one side.
    """
    if next_x > x + 1e-12:
        raise DomainError("today's allocation must be at least tomorrow's")
    g = lambda t: float(utility(prim, x, t) - p
                        - prim.delta * (utility(prim, next_x, t) - next_p))
    return bisect(g, prim.theta_lo, prim.theta_hi, tol=1e-11)


def _screening_threshold(prim: Primitives, floor: float) -> float:
    """Type below which the virtual-surplus maximizer falls under ``floor``."""
    g = lambda t: float(virtual_surplus_maximizer(prim, t)) - floor
    if g(prim.theta_lo) >= 0.0:
        return prim.theta_lo
    if g(prim.theta_hi) <= 0.0:
        return prim.theta_hi
    return bisect(g, prim.theta_lo, prim.theta_hi, tol=1e-12)


def _recur_prices(prim: Primitives, cutoffs, allocations, p_last: float) -> list:
    """Backward indifference recursion: each interior cutoff type is exactly
    indifferent between its own period and the next."""
    n = len(allocations)
    prices = [0.0] * n
    prices[-1] = p_last
    for i in range(n - 2, -1, -1):
        t_i = cutoffs[i + 1]  # marginal type between period i and i+1
        wait = prim.delta * (float(utility(prim, allocations[i + 1], t_i)) - prices[i + 1])
        prices[i] = float(utility(prim, allocations[i], t_i)) - wait
    return prices


def _staircase(prim: Primitives, n: int, s: float) -> EquilibriumPath:
    if n < 2:
        raise DomainError("need at least two segments")
    if not 0.0 <= s <= 1.0:
        raise DomainError("blend weight s must lie in [0, 1]")
    report = check_assumptions(prim)
    for aid in ("A3", "A4"):
        if not report.record(aid).holds:
            raise InfeasibleError(f"reputational staircase needs {aid}")
    theta_star = _screening_threshold(prim, prim.x_lo)
    cutoffs = list(np.linspace(prim.theta_hi, theta_star, n)) + [prim.theta_lo]
    # cutoffs[0..n-1] span [theta*, theta_hi]; the last segment absorbs the rest.
    alloc_raw = [float(np.clip(virtual_surplus_maximizer(prim, cutoffs[i]),
                               prim.x_lo, prim.x_hi)) for i in range(1, n)]
    alloc_raw.append(prim.x_lo)
    allocations = [s * x + (1.0 - s) * prim.x_lo for x in alloc_raw]
    p_last = float(utility(prim, allocations[-1], prim.theta_lo))
    prices = _recur_prices(prim, cutoffs, allocations, p_last)
    kind = REPUTATIONAL if s == 1.0 else REPUTATIONAL_S
    return _assemble(prim, kind, cutoffs, allocations, prices,
                     s=None if s == 1.0 else s)


def build_reputational(prim: Primitives, n: int) -> EquilibriumPath:
    """Decreasing staircase of the static optimum's allocations over ``n``
    periods; the last offer clears the market at the minimum allocation."""
    return _staircase(prim, n, 1.0)


def interpolate_family(prim: Primitives, n: int, s: float) -> EquilibriumPath:
    """Blend the staircase allocations toward the minimum allocation with
    weight ``s`` (s=1 reproduces ``build_reputational`` exactly; s=0 posts
    the minimum allocation throughout)."""
    return _staircase(prim, n, s)


def target_payoff(prim: Primitives, n: int, delta: float, target: float)\
        -> EquilibriumPath:
    """Bisect the blend weight until the path payoff hits ``target`` within
    1e-4.  Raises TargetOutOfRangeError (with the achievable interval)
    when the target lies outside [payoff(s=0), payoff(s=1)]."""
    prim = replace(prim, delta=float(delta))
    lo_path = _staircase(prim, n, 0.0)
    hi_path = _staircase(prim, n, 1.0)
    lo, hi = lo_path.payoff, hi_path.payoff
    if not lo <= target <= hi:
        raise TargetOutOfRangeError(target, lo, hi)
    if abs(lo - target) <= 1e-4:
        return lo_path
    if abs(hi - target) <= 1e-4:
        return hi_path
    s_lo, s_hi = 0.0, 1.0
    path = hi_path
    for _ in range(200):
        s_mid = 0.5 * (s_lo + s_hi)
        path = _staircase(prim, n, s_mid)
        err = path.payoff - target
        if abs(err) <= 1e-4:
            return path
        if err > 0.0:
            s_hi = s_mid
        else:
            s_lo = s_mid
    raise NoRootError(f"payoff bisection stalled at {path.payoff:.8f} for target {target:.8f}")


def build_relaxed_tail(prim: Primitives, n: int,
                       eps_prime: Optional[float] = None,
                       theta_dd: Optional[float] = None) -> EquilibriumPath:
    """Staircase for models whose minimum allocation cannot satiate the
    lowest type: n-1 screening offers floored at the lowest type's
    satiation level, a bump offer slightly above that level clearing down
    to ``theta_dd``, then a final clearing offer at the satiation level.

    ``eps_prime`` (bump size) and ``theta_dd`` (bump cutoff) default to one
    percent of the allocation range and the midpoint between the lowest
    type and the screening threshold; whether the result survives the
    deviation checks at the model's discount factor is the verifier's call.
    """
    if n < 2:
        raise DomainError("need at least two segments")
    xe_lo = float(efficient_consumption(prim, prim.theta_lo))
    if eps_prime is None:
        eps_prime = 1e-2 * (prim.x_hi - prim.x_lo)
    if eps_prime < 0.0:
        raise DomainError("bump size must be nonnegative")
    if xe_lo + eps_prime > prim.x_hi + 1e-12:
        raise InfeasibleError(
            f"bump allocation {xe_lo + eps_prime:.6g} exceeds the largest allocation"
        )
    theta_star = _screening_threshold(prim, xe_lo)
    if theta_dd is None:
        theta_dd = 0.5 * (prim.theta_lo + theta_star)
    if not prim.theta_lo < theta_dd < prim.theta_hi:
        raise DomainError("bump cutoff must lie strictly inside the support")

    # Screening cutoffs spaced by (theta_hi - theta*)/n keep the last
    # screening allocation strictly above the bump.
    seg = (prim.theta_hi - theta_star) / n
    cutoffs = [prim.theta_hi - i * seg for i in range(n)]
    if theta_dd >= cutoffs[-1]:
        raise DomainError("bump cutoff must sit below the last screening cutoff")
    cutoffs = cutoffs + [theta_dd, prim.theta_lo]

    allocations = [float(np.clip(virtual_surplus_maximizer(prim, c), xe_lo, prim.x_hi))
                   for c in cutoffs[1:n]]
    if xe_lo + eps_prime > allocations[-1] + 1e-12:
        raise InfeasibleError("bump allocation exceeds the last screening allocation")
    allocations += [xe_lo + eps_prime, xe_lo]
    p_last = float(utility(prim, xe_lo, prim.theta_lo))
    prices = _recur_prices(prim, cutoffs, allocations, p_last)
    return _assemble(prim, RELAXED_TAIL, cutoffs, allocations, prices)


# ---------------------------------------------------------------------------
# Payoff representations
# ---------------------------------------------------------------------------

def path_payoff_direct(path: EquilibriumPath) -> float:
    """Discounted sum of price times accepting mass."""
    return float(sum(path.delta ** st.t * st.mass * st.offer.p for st in path.steps))


def path_payoff_virtual(prim: Primitives, path: EquilibriumPath,
                        panels_per_segment: int = 400) -> float:
    """Discounted virtual-surplus integral over the path's type segments.

    Within a segment the allocation is fixed, so the integrand kinks only
    where the satiation level crosses the allocation; that type is inserted
    as a panel boundary.
    """
    total = 0.0
    for st in path.steps:
        x = st.offer.x

        def integrand(th, x=x):
            c = np.minimum(x, efficient_consumption(prim, th))
            vs = prim.value.v(c) + c * virtual_value(prim, th)
            return vs * prim.dist.f(th)

        pts = [st.cutoff_lo, st.cutoff_hi]
        t_kink = -float(prim.value.vprime(x))  # satiation crossing: x_e(t)=x
        if st.cutoff_lo < t_kink < st.cutoff_hi:
            pts.insert(1, t_kink)
        total += prim.delta ** st.t * simpson_breakpoints(integrand, pts, panels_per_segment)
    return float(total)
