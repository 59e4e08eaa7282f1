"""Finite-type solvers: what the market looks like when disposal is blocked
or production is costly.

With finitely many types the dynamics can be solved exactly by backward
induction over (highest remaining type, allocation cap) states.  Three
regimes are covered:

* no free disposal — the buyer consumes the whole allocation, utilities
  are ``w(x, theta) = v(x) + theta*x``, and at high patience the unique
  outcome walks down the per-type satiation allocations;
* free disposal, zero cost — both the one-shot clearing outcome and a
  decreasing reputational staircase survive the deviation checks, so the
  payoff set is genuinely multi-valued;
* free disposal, positive marginal cost — over-allocation burns money, the
  per-type optimal allocations are unique again, and the efficient
  sequence is back.

Prices everywhere are pinned by the marginal type's one-period
indifference, never gridded.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .errors import DomainError, InfeasibleError
from .model import ValueFunction
from .numerics import bisect

ZERO = "ZERO"
LINEAR = "LINEAR"
QUADRATIC_COST = "QUADRATIC"

COASIAN_MODE = "COASIAN"
REPUTATIONAL_MODE = "REPUTATIONAL"

ALLOC_GRID_N = 201
TIE_TOL = 1e-9


@dataclass(frozen=True)
class SellerCost:
    kind: str = ZERO
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if self.kind not in (ZERO, LINEAR, QUADRATIC_COST):
            raise DomainError(f"unknown cost family {self.kind!r}")
        if self.kind == LINEAR and self.c1 <= 0.0:
            raise DomainError("linear cost needs a positive slope")
        if self.kind == QUADRATIC_COST and (self.c1 <= 0.0 or self.c2 < 0.0):
            raise DomainError("quadratic cost needs c1 > 0 and c2 >= 0")

    def c(self, x: float) -> float:
        if self.kind == ZERO:
            return 0.0
        return self.c1 * x + self.c2 * x * x

    def cprime(self, x: float) -> float:
        if self.kind == ZERO:
            return 0.0
        return self.c1 + 2.0 * self.c2 * x


@dataclass(frozen=True)
class DiscreteModel:
    types: Tuple[float, ...]
    probs: Tuple[float, ...]
    value: ValueFunction
    x_lo: float
    x_hi: float
    free_disposal: bool = True
    cost: SellerCost = field(default_factory=SellerCost)

    def __post_init__(self):
        if len(self.types) != len(self.probs) or not self.types:
            raise DomainError("types and probs must be equal-length and nonempty")
        if any(b <= a for a, b in zip(self.types, self.types[1:])):
            raise DomainError("types must be strictly increasing")
        if any(q <= 0.0 for q in self.probs):
            raise DomainError("probabilities must be positive")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise DomainError("probabilities must sum to one")
        if self.x_lo <= 0.0 or self.x_lo > self.x_hi:
            raise DomainError("need 0 < x_lo <= x_hi")
        if self.cost.kind != ZERO:
            surplus = self.u(self.satiation(self.types[0]), self.types[0])
            if surplus - self.cost.c(self.x_lo) <= 0.0:
                raise InfeasibleError(
                    "serving the lowest type is unprofitable: "
                    f"{surplus:.6g} - c(x_lo)={self.cost.c(self.x_lo):.6g}"
                )

    @property
    def k(self) -> int:
        return len(self.types)

    def satiation(self, theta: float) -> float:
        return float(self.value.vprime_inv(-theta, self.x_hi))

    def w(self, x: float, theta: float) -> float:
        """Utility when the whole allocation must be consumed."""
        return float(self.value.v(x) + theta * x)

    def u(self, x: float, theta: float) -> float:
        """Utility with free disposal: consume min(x, satiation)."""
        c = min(float(x), self.satiation(theta))
        return float(self.value.v(c) + theta * c)


@dataclass(frozen=True)
class DiscreteStep:
    t: int
    x: float
    p: float
    buyers: Tuple[int, ...]  # indices into model.types


@dataclass(frozen=True)
class DiscreteSolution:
    schedule: Tuple[DiscreteStep, ...]
    payoff: float
    per_type_alloc: Tuple[float, ...]
    unique_outcome: bool
    delta: float
    mode: str
    delta_threshold: Optional[float] = None
    notes: str = ""

    @property
    def allocations(self) -> Tuple[float, ...]:
        return tuple(st.x for st in self.schedule)

    @property
    def prices(self) -> Tuple[float, ...]:
        return tuple(st.p for st in self.schedule)

    def to_csv_rows(self):
        yield ("t", "x", "p", "buyers")
        for st in self.schedule:
            yield (repr(st.t), repr(st.x), repr(st.p),
                   ";".join(str(b) for b in st.buyers))


def discrete_virtual_values(model: DiscreteModel) -> Tuple[float, ...]:
    """Per-type screening-adjusted values theta_i - (1 - cum_prob_i)/q_i;
    the top type keeps its raw value."""
    out = []
    cum = 0.0
    for theta, q in zip(model.types, model.probs):
        cum += q
        out.append(theta - (1.0 - cum) / q)
    return tuple(out)


def discrete_virtual_surplus_margins(model: DiscreteModel) -> Tuple[float, ...]:
    """Virtual surplus at each type's satiation allocation (the finite-type
    analogue of the nonnegativity assumption A4)."""
    dvv = discrete_virtual_values(model)
    out = []
    for theta, phi in zip(model.types, dvv):
        xe = model.satiation(theta)
        out.append(float(model.value.v(xe) + xe * phi))
    return tuple(out)


def discrete_static_bound(model: DiscreteModel) -> float:
    """Full-commitment revenue cap: per type, the best virtual surplus over
    feasible allocations, floored at zero by withholding."""
    dvv = discrete_virtual_values(model)
    grid = _allocation_grid(model)
    bound = 0.0
    for i, (theta, q) in enumerate(zip(model.types, model.probs)):
        cons = np.minimum(grid, model.satiation(theta))
        vs = model.value.v(cons) + cons * dvv[i]
        bound += q * max(0.0, float(vs.max()))
    return bound


# ---------------------------------------------------------------------------
# Backward induction over (remaining types, allocation cap) states
# ---------------------------------------------------------------------------

def _allocation_grid(model: DiscreteModel) -> np.ndarray:
    pts = list(np.linspace(model.x_lo, model.x_hi, ALLOC_GRID_N))
    pts.extend(np.clip(model.satiation(t), model.x_lo, model.x_hi) for t in model.types)
    if model.cost.kind != ZERO:
        pts.extend(_cost_adjusted_optimum(model, t) for t in model.types)
    return np.unique(np.asarray(pts, dtype=float))


def _cost_adjusted_optimum(model: DiscreteModel, theta: float) -> float:
    """Unique maximizer of u(x, theta) - c(x) on the allocation interval."""
    h = lambda x: float(model.value.vprime(x)) + theta - model.cost.cprime(x)
    if h(model.x_hi) >= 0.0:
        interior = model.x_hi
    elif h(0.0) <= 0.0:
        interior = 0.0
    else:
        interior = bisect(h, 0.0, model.x_hi, tol=1e-12)
    best = min(interior, model.satiation(theta))
    return float(np.clip(best, model.x_lo, model.x_hi))


@dataclass(frozen=True)
class _DpTables:
    grid: np.ndarray
    value: np.ndarray     # (K+1, G) state values; row k = k lowest types remain
    first_m: np.ndarray   # (K+1, G) marginal buying type at each state
    first_x: np.ndarray   # (K+1, G) allocation index chosen at each state
    first_p: np.ndarray   # (K+1, G) price posted at each state
    tie: np.ndarray       # (K+1, G) payoff tie within TIE_TOL at the state


def _dp_solve(model: DiscreteModel, delta: float,
              util: Callable[[float, float], float]) -> _DpTables:
    """Exact DP over states (k remaining lowest types, allocation cap).

    Each period the seller picks the marginal buying type m (types m..k-1
    accept) and an allocation at or below the cap; the price leaves the
    marginal type indifferent against the first offer of the optimal
    continuation, whose cap is today's allocation.  States are solved
    bottom-up in k, vectorized over the allocation grid.
    """
    grid = _allocation_grid(model)
    n_grid = len(grid)
    k_total = model.k
    umat = np.array([[util(float(x), th) for x in grid] for th in model.types])
    cost_vec = np.array([model.cost.c(float(x)) for x in grid])
    cum = np.cumsum(model.probs)

    shape = (k_total + 1, n_grid)
    value = np.zeros(shape)
    first_m = np.zeros(shape, dtype=int)
    first_x = np.zeros(shape, dtype=int)
    first_p = np.zeros(shape)
    tie = np.zeros(shape, dtype=bool)

    for k in range(1, k_total + 1):
        vals = np.empty((k, n_grid))     # vals[m, x]: value of (m, x) before capping
        price_mx = np.empty((k, n_grid))
        for m in range(k):
            if m == 0:
                wait = np.zeros(n_grid)
            else:
                fx = first_x[m]
                wait = delta * np.maximum(umat[m, fx] - first_p[m], 0.0)
            price_mx[m] = umat[m] - wait
            mass = cum[k - 1] - (cum[m - 1] if m > 0 else 0.0)
            vals[m] = mass * (price_mx[m] - cost_vec) + delta * value[m]
        cmax = np.maximum.accumulate(vals, axis=1)
        best = cmax.max(axis=0)
        value[k] = best
        for cap in range(n_grid):
            window = vals[:, : cap + 1]
            flat = int(np.argmax(window))
            m_star, x_star = divmod(flat, cap + 1)
            first_m[k, cap] = m_star
            first_x[k, cap] = x_star
            first_p[k, cap] = price_mx[m_star, x_star]
            tie[k, cap] = int((window >= best[cap] - TIE_TOL).sum()) > 1
    return _DpTables(grid, value, first_m, first_x, first_p, tie)


def _walk_schedule(model: DiscreteModel, delta: float,
                   tables: _DpTables) -> Tuple[Tuple[DiscreteStep, ...], float, bool]:
    steps = []
    k = model.k
    cap_idx = len(tables.grid) - 1
    payoff = 0.0
    t = 0
    unique = True
    while k > 0:
        if tables.tie[k, cap_idx]:
            unique = False
        m = int(tables.first_m[k, cap_idx])
        x_idx = int(tables.first_x[k, cap_idx])
        price = float(tables.first_p[k, cap_idx])
        buyers = tuple(range(m, k))
        x = float(tables.grid[x_idx])
        steps.append(DiscreteStep(t=t, x=x, p=price, buyers=buyers))
        mass = sum(model.probs[i] for i in buyers)
        payoff += delta**t * mass * (price - model.cost.c(x))
        k = m
        cap_idx = x_idx
        t += 1
    return tuple(steps), payoff, unique


def _per_type_alloc(model: DiscreteModel, steps) -> Tuple[float, ...]:
    alloc = [float("nan")] * model.k
    for st in steps:
        for i in st.buyers:
            alloc[i] = st.x
    return tuple(alloc)


def solve_no_disposal(model: DiscreteModel, delta: float) -> DiscreteSolution:
    """Backward-induction outcome when the buyer must consume the whole
    allocation.  At high patience the outcome is the K-period efficient
    sequence; `unique_outcome` records whether any on-path state tied."""
    if model.free_disposal:
        raise DomainError("model has free disposal; use solve_with_disposal")
    tables = _dp_solve(model, delta, model.w)
    steps, payoff, unique = _walk_schedule(model, delta, tables)
    notes = "" if unique else "AMBIGUOUS: some on-path state has a payoff tie within 1e-9"
    return DiscreteSolution(
        schedule=steps, payoff=payoff,
        per_type_alloc=_per_type_alloc(model, steps),
        unique_outcome=unique, delta=delta, mode="NO_DISPOSAL", notes=notes,
    )


def solve_with_cost(model: DiscreteModel, delta: float) -> DiscreteSolution:
    """Backward induction with free disposal but positive marginal cost;
    per-type allocations collapse to the unique cost-adjusted optima."""
    if model.cost.kind == ZERO:
        raise DomainError("model has zero cost; use solve_with_disposal")
    tables = _dp_solve(model, delta, model.u)
    steps, payoff, unique = _walk_schedule(model, delta, tables)
    notes = "" if unique else "AMBIGUOUS: some on-path state has a payoff tie within 1e-9"
    return DiscreteSolution(
        schedule=steps, payoff=payoff,
        per_type_alloc=_per_type_alloc(model, steps),
        unique_outcome=unique, delta=delta, mode="WITH_COST", notes=notes,
    )


# ---------------------------------------------------------------------------
# Free disposal, zero cost: constructed outcomes plus deviation checks
# ---------------------------------------------------------------------------

def _reputational_offers(model: DiscreteModel, delta: float):
    """Descending satiation allocations priced by the indifference
    recursion; offer t serves type K-1-t."""
    k = model.k
    xs = [max(model.satiation(model.types[i]), model.x_lo) for i in range(k)]
    prices = [0.0] * k
    prices[0] = model.u(xs[0], model.types[0])
    for i in range(1, k):
        wait = delta * (model.u(xs[i - 1], model.types[i]) - prices[i - 1])
        prices[i] = model.u(xs[i], model.types[i]) - wait
    steps = []
    for t in range(k):
        i = k - 1 - t
        steps.append(DiscreteStep(t=t, x=float(xs[i]), p=float(prices[i]), buyers=(i,)))
    return tuple(steps)


def _payoff(model: DiscreteModel, steps, delta: float) -> float:
    return float(sum(delta**st.t * sum(model.probs[i] for i in st.buyers)
                     * (st.p - model.cost.c(st.x)) for st in steps))


def deviation_margins(model: DiscreteModel, steps, delta: float) -> np.ndarray:
    """Per-period slack of staying on path over the clearing punishment
    (remaining mass times the lowest type's full valuation)."""
    u_bottom = model.u(model.x_hi, model.types[0])
    margins = []
    for t0 in range(len(steps)):
        cont = sum(delta ** (st.t - t0) * sum(model.probs[i] for i in st.buyers) * st.p
                   for st in steps[t0:])
        remaining = sum(sum(model.probs[i] for i in st.buyers) for st in steps[t0:])
        margins.append(cont - remaining * u_bottom)
    return np.asarray(margins)


def buyer_ic_margins(model: DiscreteModel, steps, delta: float) -> np.ndarray:
    """Worst slack, per type, of buying in the assigned period over every
    other period (and over never buying)."""
    assigned = {}
    for st in steps:
        for i in st.buyers:
            assigned[i] = st
    out = []
    for i, theta in enumerate(model.types):
        own = assigned[i]
        own_val = delta**own.t * (model.u(own.x, theta) - own.p)
        others = [delta**st.t * (model.u(st.x, theta) - st.p)
                  for st in steps if st.t != own.t]
        alt = max(others, default=0.0)
        out.append(own_val - max(alt, 0.0))
    return np.asarray(out)


def solve_with_disposal(model: DiscreteModel, delta: float,
                        mode: str = COASIAN_MODE) -> DiscreteSolution:
    """Constructed outcomes under free disposal and zero cost.

    COASIAN posts the largest allocation at the lowest type's valuation and
    clears at once.  REPUTATIONAL walks the satiation allocations down,
    sustained by reversion to the clearing outcome; it is refused (with the
    patience threshold that would make it work) when the deviation check
    fails at the given delta.
    """
    if not model.free_disposal:
        raise DomainError("model blocks disposal; use solve_no_disposal")
    if model.cost.kind != ZERO:
        raise DomainError("costly model; use solve_with_cost")
    if mode == COASIAN_MODE:
        p = model.u(model.x_hi, model.types[0])
        steps = (DiscreteStep(t=0, x=model.x_hi, p=float(p),
                              buyers=tuple(range(model.k))),)
    elif mode == REPUTATIONAL_MODE:
        steps = _reputational_offers(model, delta)
        worst = float(deviation_margins(model, steps, delta).min())
        if worst < -1e-9:
            required = _reputational_delta_threshold(model, delta)
            raise InfeasibleError(
                f"reputational path fails the deviation check at delta={delta:g} "
                f"(worst margin {worst:.3e}); requires delta >= {required:.4f}"
            )
    else:
        raise DomainError(f"unknown mode {mode!r}")
    payoff = _payoff(model, steps, delta)
    return DiscreteSolution(
        schedule=steps, payoff=payoff,
        per_type_alloc=_per_type_alloc(model, steps),
        unique_outcome=False, delta=delta, mode=mode,
        notes="payoff set is multi-valued under free disposal; "
              "residual-mass randomization by intermediate types not modelled",
    )


def _reputational_delta_threshold(model: DiscreteModel, delta_lo: float) -> float:
    ok = lambda d: float(deviation_margins(
        model, _reputational_offers(model, d), d).min()) >= -1e-9
    lo, hi = delta_lo, 0.999999
    if not ok(hi):
        return float("nan")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def no_disposal_delta_threshold(model: DiscreteModel, tol: float = 1e-3) -> float:
    """Smallest tested delta in [0.5, 1) at which the no-disposal outcome is
    the unique K-period efficient sequence (bisection with step-out;
    reported, never asserted)."""
    target = tuple(np.clip(model.satiation(t), model.x_lo, model.x_hi)
                   for t in model.types)

    def efficient(d: float) -> bool:
        sol = solve_no_disposal(model, d)
        if len(sol.schedule) != model.k or not sol.unique_outcome:
            return False
        return all(abs(a - b) <= 1e-12
                   for a, b in zip(sol.per_type_alloc, target))

    lo, hi = 0.5, None
    d = 0.5
    while d < 1.0 - 1e-6:
        if efficient(d):
            hi = d
            break
        lo, d = d, d + 0.5 * (1.0 - d)
    if hi is None:
        return float("nan")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if efficient(mid):
            hi = mid
        else:
            lo = mid
    return hi
