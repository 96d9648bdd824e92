"""Exception hierarchy for solver and validation failures."""


class CongestedNSError(Exception):
    """Base class for all package errors."""


class DomainError(CongestedNSError):
    """Pressure law evaluated at a congested or invalid specific volume (v <= 1)."""


class InvalidEndStatesError(CongestedNSError):
    """Far-field data violating the entropy condition or volume ordering."""


class NotConnectableError(CongestedNSError):
    """End states that the singular-pressure traveling wave cannot connect."""


class ProfileEscapedError(CongestedNSError):
    """Profile integration left the invariant interval (v_-^eps, v_+)."""


class SpanTooSmallError(CongestedNSError):
    """Requested spatial span does not reach the far-field tolerance."""


class PerturbationError(CongestedNSError):
    """Initial perturbation rejected (support or positivity violation)."""


class NewtonError(CongestedNSError):
    """Implicit step failed to converge; carries the residual trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class ConstraintViolationError(CongestedNSError):
    """The hard constraint v > 1 was breached numerically."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class ZeroMassError(CongestedNSError):
    """Deviation field carries non-negligible total mass."""

    def __init__(self, message, field=None, residual_mass=None):
        super().__init__(message)
        self.field = field
        self.residual_mass = residual_mass


class DegenerateDataError(CongestedNSError):
    """Half-line data with a vanishing trace derivative (interface ODE undefined)."""


class NearSingularDenominatorError(CongestedNSError):
    """Interface quadrature denominator u_- - w0(y) fell below the floor."""


class MonotonicityError(CongestedNSError):
    """Interface path lost monotonicity (x_tilde' <= 0 or x_tilde < 0)."""


class ContractionError(CongestedNSError):
    """Fixed-point iteration failed to contract; carries the iteration history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ConfigError(CongestedNSError):
    """Invalid or inconsistent run configuration."""
