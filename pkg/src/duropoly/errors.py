"""Exception types shared across the solvers."""


class DomainError(ValueError):
    """Argument outside the domain an operation is defined on."""


class ParseError(ValueError):
    """Malformed model file or path file."""


class NoRootError(RuntimeError):
    """Root bracketing failed: no sign change on the search interval."""

    def __init__(self, message, lo_value=None, hi_value=None):
        super().__init__(message)
        self.lo_value = lo_value
        self.hi_value = hi_value


class TargetOutOfRangeError(ValueError):
    """Requested payoff target lies outside the achievable interval."""

    def __init__(self, target, lo, hi):
        super().__init__(
            f"target payoff {target:.6f} outside achievable interval "
            f"[{lo:.6f}, {hi:.6f}]"
        )
        self.target = target
        self.lo = lo
        self.hi = hi


class ConstructionError(RuntimeError):
    """A path construction violated one of its own invariants."""


class InfeasibleError(ValueError):
    """Model configuration rules out the requested construction."""


class NonConvergenceError(RuntimeError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message, sup_change=None, sweeps=None):
        super().__init__(message)
        self.sup_change = sup_change
        self.sweeps = sweeps
