"""Numerical audit of constructed price paths.

Each check returns entries with a signed margin (positive = slack, within
tolerance = pass) and a witness locating the worst case.  The deviation
classes checked are the ones the constructions lean on: buyer period
choice, seller reversion-to-clearing punishment, and undercutting to a
later on-path offer.  Checks are deterministic: sampling grids are fixed,
no randomness anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .coase_solver import CoaseSolution
from .model import Primitives, utility
from .paths import EquilibriumPath, path_payoff_direct, path_payoff_virtual
from .static_mech import MechanismSchedule, UNCONSTRAINED, EFFICIENCY_CONSTRAINED

TOL_IDENTITY = 1e-6
TOL_INDIFFERENCE = 1e-8
TOL_SLACK = 1e-9
TOL_PERIOD_CHOICE = 1e-7
SAMPLES_PER_SEGMENT = 201


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    margin: float
    witness: str = ""


@dataclass(frozen=True)
class VerificationReport:
    checks: Tuple[CheckResult, ...]

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_json(self) -> str:
        return json.dumps(
            {
                "overall": self.overall,
                "checks": [
                    {"name": c.name, "pass": c.passed, "margin": c.margin,
                     "witness": c.witness}
                    for c in self.checks
                ],
            },
            indent=2,
        )

    def as_table(self) -> str:
        lines = [f"{'check':<28} {'pass':<6} {'margin':>14}  worst at"]
        for c in self.checks:
            lines.append(f"{c.name:<28} {str(c.passed):<6} {c.margin:>14.6e}  {c.witness}")
        lines.append(f"{'OVERALL':<28} {self.overall}")
        return "\n".join(lines)


def _merge(*groups) -> VerificationReport:
    checks = []
    for g in groups:
        checks.extend(g)
    return VerificationReport(tuple(checks))


# ---------------------------------------------------------------------------
# Buyer side
# ---------------------------------------------------------------------------

def check_buyer_ic(prim: Primitives, path: EquilibriumPath) -> list:
    """(a) every interior cutoff type is indifferent between its period and
    the next; (b) on a fixed sample of types per segment, the assigned
    period weakly dominates every other period and never buying."""
    steps = path.steps
    delta = path.delta

    worst_resid = 0.0
    worst_at = "-"
    for a, b in zip(steps[:-1], steps[1:]):
        t_cut = a.cutoff_lo
        resid = float(
            utility(prim, a.offer.x, t_cut) - a.offer.p
            - delta * (utility(prim, b.offer.x, t_cut) - b.offer.p)
        )
        if abs(resid) > abs(worst_resid):
            worst_resid = resid
            worst_at = f"period {a.t}"
    entry_a = CheckResult(
        name="buyer_cutoff_indifference",
        passed=abs(worst_resid) <= TOL_INDIFFERENCE,
        margin=TOL_INDIFFERENCE - abs(worst_resid),
        witness=worst_at,
    )

    xs = np.array([st.offer.x for st in steps])
    ps = np.array([st.offer.p for st in steps])
    ts = np.array([st.t for st in steps])
    worst = np.inf
    worst_at = "-"
    for st in steps:
        thetas = np.linspace(st.cutoff_lo, st.cutoff_hi, SAMPLES_PER_SEGMENT)
        vals = np.empty((len(steps), len(thetas)))
        for j in range(len(steps)):
            vals[j] = delta ** ts[j] * (utility(prim, xs[j], thetas) - ps[j])
        assigned = vals[st.t]
        others = np.delete(vals, st.t, axis=0)
        alt = others.max(axis=0) if len(others) else np.zeros_like(assigned)
        slack = assigned - np.maximum(alt, 0.0)
        i_min = int(np.argmin(slack))
        if slack[i_min] < worst:
            worst = float(slack[i_min])
            worst_at = f"theta={thetas[i_min]:.6g} assigned period {st.t}"
    entry_b = CheckResult(
        name="buyer_period_choice",
        passed=worst >= -TOL_PERIOD_CHOICE,
        margin=worst + TOL_PERIOD_CHOICE,
        witness=worst_at,
    )
    return [entry_a, entry_b]


# ---------------------------------------------------------------------------
# Seller side
# ---------------------------------------------------------------------------

def coasian_reversion(prim: Primitives) -> Callable[[float, float], float]:
    """Punishment value under immediate clearing: remaining prior mass times
    the lowest type's full valuation (the A3/A4 regime)."""
    u_lo = float(utility(prim, prim.x_hi, prim.theta_lo))

    def fn(theta_state: float, x_cap: float) -> float:
        return float(prim.dist.F(theta_state)) * u_lo

    return fn


def solution_reversion(sol: CoaseSolution) -> Callable[[float, float], float]:
    """Punishment value read off one solved clearing-dynamics value
    function.  The solution's cap is the largest the path ever allows, and
    the value is weakly increasing in the cap, so this punishes at least as
    hard as the per-state exact value: a conservative gate."""

    def fn(theta_state: float, x_cap: float) -> float:
        return sol.value_at(theta_state)

    return fn


def continuation_values(path: EquilibriumPath) -> np.ndarray:
    """Discounted on-path seller continuation at the start of each period."""
    steps = path.steps
    out = np.zeros(len(steps))
    acc = 0.0
    for st in reversed(steps):
        acc = st.mass * st.offer.p + path.delta * acc
        out[st.t] = acc
    return out


def check_seller_deviation_reversion(
    prim: Primitives,
    path: EquilibriumPath,
    reversion_value_fn: Optional[Callable[[float, float], float]] = None,
) -> list:
    """On-path continuation must weakly beat the punishment value at every
    period's state (deviations are deterred by reverting to clearing)."""
    if reversion_value_fn is None:
        reversion_value_fn = coasian_reversion(prim)
    cont = continuation_values(path)
    worst = np.inf
    worst_at = "-"
    cap = prim.x_hi
    for st, c in zip(path.steps, cont):
        rev = reversion_value_fn(st.cutoff_hi, cap)
        margin = float(c - rev)
        if margin < worst:
            worst = margin
            worst_at = f"period {st.t} (state theta'={st.cutoff_hi:.6g})"
        cap = st.offer.x
    return [
        CheckResult(
            name="seller_reversion_deviation",
            passed=worst >= -TOL_SLACK,
            margin=worst + TOL_SLACK,
            witness=worst_at,
        )
    ]


def onpath_markov_margins(prim: Primitives, path: EquilibriumPath) -> dict:
    """Margins of staying on path over jumping ahead to a later on-path
    offer (accepted by all remaining types above that offer's cutoff)."""
    steps = path.steps
    cont = continuation_values(path)
    F = prim.dist.F
    margins = {}
    for i in range(len(steps)):
        state_hi = steps[i].cutoff_hi
        for j in range(i + 1, len(steps)):
            mass_now = float(F(state_hi) - F(steps[j].cutoff_lo))
            dev = mass_now * steps[j].offer.p
            if j + 1 < len(steps):
                dev += path.delta * cont[j + 1]
            margins[(i, j)] = float(cont[i] - dev)
    return margins


def check_onpath_markov(prim: Primitives, path: EquilibriumPath) -> list:
    margins = onpath_markov_margins(prim, path)
    if not margins:
        return [CheckResult("seller_onpath_undercut", True, 0.0, "single offer")]
    (i, j), worst = min(margins.items(), key=lambda kv: kv[1])
    return [
        CheckResult(
            name="seller_onpath_undercut",
            passed=worst >= -TOL_SLACK,
            margin=worst + TOL_SLACK,
            witness=f"deviation {i} -> {j}",
        )
    ]


# ---------------------------------------------------------------------------
# Identities and caps
# ---------------------------------------------------------------------------

def check_identities(
    prim: Primitives,
    path: EquilibriumPath,
    sched: MechanismSchedule,
    sched_constrained: Optional[MechanismSchedule] = None,
) -> list:
    """Payoff-representation identity plus the commitment caps: no path may
    beat the static optimum, and tail-clearing paths are additionally held
    under the efficiency-constrained optimum."""
    if sched.variant != UNCONSTRAINED:
        raise ValueError("cap check needs the unconstrained benchmark schedule")
    entries = []

    direct = path_payoff_direct(path)
    virtual = path_payoff_virtual(prim, path)
    resid = abs(direct - virtual)
    entries.append(
        CheckResult(
            name="payoff_identity",
            passed=resid <= TOL_IDENTITY,
            margin=TOL_IDENTITY - resid,
            witness=f"direct={direct:.9f} virtual={virtual:.9f}",
        )
    )

    margin = sched.payoff + TOL_IDENTITY - path.payoff
    entries.append(
        CheckResult(
            name="commitment_cap",
            passed=margin >= 0.0,
            margin=margin,
            witness=f"payoff={path.payoff:.9f} cap={sched.payoff:.9f}",
        )
    )

    if sched_constrained is not None:
        if sched_constrained.variant != EFFICIENCY_CONSTRAINED:
            raise ValueError("second schedule must be the efficiency-constrained solve")
        horizon = len(path.steps)
        margin = sched_constrained.payoff + TOL_IDENTITY - path.payoff
        entries.append(
            CheckResult(
                name="efficient_commitment_cap",
                passed=margin >= 0.0,
                margin=margin,
                witness=(f"payoff={path.payoff:.9f} cap={sched_constrained.payoff:.9f} "
                         f"delta^T={path.delta**horizon:.6f}"),
            )
        )
    return entries


def verify_path(
    prim: Primitives,
    path: EquilibriumPath,
    sched: MechanismSchedule,
    reversion_value_fn: Optional[Callable[[float, float], float]] = None,
    sched_constrained: Optional[MechanismSchedule] = None,
) -> VerificationReport:
    """Run the full audit: buyer incentives, both seller deviation classes,
    and the payoff identities/caps."""
    return _merge(
        check_buyer_ic(prim, path),
        check_seller_deviation_reversion(prim, path, reversion_value_fn),
        check_onpath_markov(prim, path),
        check_identities(prim, path, sched, sched_constrained),
    )
