"""Numerical laboratory for dynamic monopoly pricing of freely disposable
goods: static screening benchmarks, constructed equilibrium price paths
with a verification engine, fixed-cap clearing dynamics, and exact
finite-type solvers."""

from .model import (
    AssumptionReport,
    Primitives,
    TypeDistribution,
    ValueFunction,
    actual_consumption,
    check_assumptions,
    efficient_consumption,
    utility,
    utility_integral,
    virtual_surplus,
    virtual_surplus_maximizer,
    virtual_value,
)
from .static_mech import (
    MechanismSchedule,
    commitment_bound,
    solve_constrained,
    solve_unconstrained,
)
from .paths import (
    EquilibriumPath,
    Offer,
    PathStep,
    build_relaxed_tail,
    build_reputational,
    coasian_path,
    cutoff_indifference,
    interpolate_family,
    path_from_json,
    path_payoff_direct,
    path_payoff_virtual,
    target_payoff,
)
from .coase_solver import (
    CoaseSolution,
    bellman_residual,
    clearing_diagnostics,
    solve_weak_markov,
    uniform_coase_check,
)
from .discrete import (
    DiscreteModel,
    DiscreteSolution,
    SellerCost,
    discrete_static_bound,
    discrete_virtual_surplus_margins,
    discrete_virtual_values,
    no_disposal_delta_threshold,
    solve_no_disposal,
    solve_with_cost,
    solve_with_disposal,
)
from .verify import (
    VerificationReport,
    check_buyer_ic,
    check_identities,
    check_onpath_markov,
    check_seller_deviation_reversion,
    coasian_reversion,
    solution_reversion,
    verify_path,
)
from .config import PRESETS, load_model, load_preset, parse_model_text

__version__ = "0.1.0"
