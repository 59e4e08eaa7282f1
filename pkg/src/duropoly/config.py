"""Model files and shipped presets.

Models live in flat key/value text files (``key = value`` per line, ``#``
comments).  Continuous models take a value-function block, a distribution
block, the allocation interval, and a discount factor; discrete models add
``types``/``probs`` lists and optionally a cost block, and may omit the
distribution.

Continuous example::

    family   = quadratic     # quadratic | piecewise_marginal
    a        = 1.0           # marginal value at zero
    b        = 1.0           # curvature
    dist     = uniform       # uniform | linear_density
    theta_lo = 1.0
    theta_hi = 2.0
    x_lo     = 2.0
    x_hi     = 3.0
    delta    = 0.95

Piecewise marginal values use ``knots = z:v', z:v', ...``; discrete models
use ``types = t1, t2, ...``, ``probs = q1, q2, ...``, ``free_disposal``,
and ``cost = zero | linear | quadratic`` with ``c1``/``c2``.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, Union

from .discrete import DiscreteModel, SellerCost, LINEAR, QUADRATIC_COST, ZERO
from .errors import ParseError
from .model import (
    LINEAR_DENSITY,
    PIECEWISE_MARGINAL,
    Primitives,
    QUADRATIC,
    TypeDistribution,
    UNIFORM,
    ValueFunction,
)

Model = Union[Primitives, DiscreteModel]


def parse_model_text(text: str) -> Model:
    kv: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip().lower()
        if key in kv:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        kv[key] = val.strip()
    if not kv:
        raise ParseError("empty model file")
    return _build_model(kv)


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model_text(fh.read())


def _get_float(kv, key):
    if key not in kv:
        raise ParseError(f"missing key {key!r}")
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ParseError(f"key {key!r}: not a number: {kv[key]!r}") from exc


def _get_floats(kv, key):
    try:
        return tuple(float(tok) for tok in kv[key].split(",") if tok.strip())
    except ValueError as exc:
        raise ParseError(f"key {key!r}: expected comma-separated numbers") from exc


def _build_value(kv) -> ValueFunction:
    family = kv.get("family", "quadratic").lower()
    if family == "quadratic":
        return ValueFunction(QUADRATIC, a=_get_float(kv, "a"), b=_get_float(kv, "b"))
    if family == "piecewise_marginal":
        if "knots" not in kv:
            raise ParseError("piecewise_marginal needs 'knots = z:v, z:v, ...'")
        knots = []
        for tok in kv["knots"].split(","):
            tok = tok.strip()
            if not tok:
                continue
            if ":" not in tok:
                raise ParseError(f"bad knot {tok!r}; expected z:value")
            z, vp = tok.split(":", 1)
            try:
                knots.append((float(z), float(vp)))
            except ValueError as exc:
                raise ParseError(f"bad knot {tok!r}") from exc
        return ValueFunction(PIECEWISE_MARGINAL, knots=tuple(knots))
    raise ParseError(f"unknown value-function family {family!r}")


def _build_model(kv) -> Model:
    value = _build_value(kv)
    x_lo = _get_float(kv, "x_lo")
    x_hi = _get_float(kv, "x_hi")
    if "types" in kv or "probs" in kv:
        if "types" not in kv or "probs" not in kv:
            raise ParseError("discrete models need both 'types' and 'probs'")
        types = _get_floats(kv, "types")
        probs = _get_floats(kv, "probs")
        disposal = kv.get("free_disposal", "true").lower()
        if disposal not in ("true", "false", "0", "1", "yes", "no"):
            raise ParseError(f"free_disposal: expected a boolean, got {disposal!r}")
        cost_kind = kv.get("cost", "zero").lower()
        if cost_kind == "zero":
            cost = SellerCost(ZERO)
        elif cost_kind == "linear":
            cost = SellerCost(LINEAR, c1=_get_float(kv, "c1"))
        elif cost_kind == "quadratic":
            cost = SellerCost(QUADRATIC_COST, c1=_get_float(kv, "c1"),
                              c2=_get_float(kv, "c2"))
        else:
            raise ParseError(f"unknown cost family {cost_kind!r}")
        return DiscreteModel(
            types=types, probs=probs, value=value, x_lo=x_lo, x_hi=x_hi,
            free_disposal=disposal in ("true", "1", "yes"), cost=cost,
        )
    dist_family = kv.get("dist", "uniform").lower()
    theta_lo = _get_float(kv, "theta_lo")
    theta_hi = _get_float(kv, "theta_hi")
    if dist_family == "uniform":
        dist = TypeDistribution(UNIFORM, theta_lo, theta_hi)
    elif dist_family == "linear_density":
        dist = TypeDistribution(LINEAR_DENSITY, theta_lo, theta_hi,
                                slope=_get_float(kv, "slope"))
    else:
        raise ParseError(f"unknown distribution family {dist_family!r}")
    delta = _get_float(kv, "delta") if "delta" in kv else 0.95
    return Primitives(value=value, dist=dist, x_lo=x_lo, x_hi=x_hi, delta=delta)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def canonical(delta: float = 0.95) -> Primitives:
    """Uniform types on [1,2], v(x)=x-x^2/2, allocations [2,3]: the minimum
    allocation satiates every type and all regularity checks pass."""
    return Primitives(
        value=ValueFunction(QUADRATIC, a=1.0, b=1.0),
        dist=TypeDistribution(UNIFORM, 1.0, 2.0),
        x_lo=2.0, x_hi=3.0, delta=delta,
    )


def relaxed(delta: float = 0.95) -> Primitives:
    """Uniform types on [0.1,2], same value function, allocations [0.5,3]:
    the lowest type is not satiated by the minimum allocation, so the
    immediate-clearing shortcut is unavailable."""
    return Primitives(
        value=ValueFunction(QUADRATIC, a=1.0, b=1.0),
        dist=TypeDistribution(UNIFORM, 0.1, 2.0),
        x_lo=0.5, x_hi=3.0, delta=delta,
    )


def discrete3(free_disposal: bool = False, cost_c1: float = 0.0) -> DiscreteModel:
    """Three types {1.1, 2.1, 3.1} with bottom-heavy weights (0.96, 0.03,
    0.01), v(x) = -x(x+2)/2, allocations [0.1, 3]."""
    cost = SellerCost(LINEAR, c1=cost_c1) if cost_c1 else SellerCost(ZERO)
    return DiscreteModel(
        types=(1.1, 2.1, 3.1), probs=(0.96, 0.03, 0.01),
        value=ValueFunction(QUADRATIC, a=-1.0, b=1.0),
        x_lo=0.1, x_hi=3.0, free_disposal=free_disposal, cost=cost,
    )


def marketing_list(delta: float = 0.95) -> Primitives:
    """Profiles ordered by decreasing standalone value (piecewise-linear
    marginal value); buyer types are negative unit costs."""
    return Primitives(
        value=ValueFunction(
            PIECEWISE_MARGINAL,
            knots=((0.0, 2.4), (1.0, 1.2), (2.0, 0.5), (3.0, 0.1)),
        ),
        dist=TypeDistribution(UNIFORM, -0.8, -0.2),
        x_lo=1.6, x_hi=3.0, delta=delta,
    )


def saas(delta: float = 0.95) -> Primitives:
    """Subscription tiers: usage costs x^2/2, productivity scales with type."""
    return Primitives(
        value=ValueFunction(QUADRATIC, a=0.0, b=1.0),
        dist=TypeDistribution(UNIFORM, 2.0, 3.0),
        x_lo=2.0, x_hi=3.5, delta=delta,
    )


def data_decision(delta: float = 0.95) -> Primitives:
    """Dataset richness caps the informativeness of a costly symmetric
    experiment ahead of a binary decision; types fold in the stakes."""
    return Primitives(
        value=ValueFunction(QUADRATIC, a=0.0, b=4.0),
        dist=TypeDistribution(UNIFORM, 0.8, 1.2),
        x_lo=0.2, x_hi=0.5, delta=delta,
    )


def land(delta: float = 0.95) -> Primitives:
    """Acreage sold to a farmer with private unit production cost; revenue
    is concave in cultivated area."""
    return Primitives(
        value=ValueFunction(QUADRATIC, a=2.0, b=1.0),
        dist=TypeDistribution(UNIFORM, -1.1, -0.7),
        x_lo=0.9, x_hi=1.5, delta=delta,
    )


PRESETS = {
    "canonical": canonical,
    "relaxed": relaxed,
    "discrete3": lambda: discrete3(free_disposal=False),
    "discrete3_disposal": lambda: discrete3(free_disposal=True),
    "discrete3_cost": lambda: discrete3(free_disposal=True, cost_c1=0.01),
    "marketing_list": marketing_list,
    "saas": saas,
    "data_decision": data_decision,
    "land": land,
}


def load_preset(name: str) -> Model:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ParseError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
