"""Exception hierarchy for the assessment engine.

Every error carries a human-readable message naming the offending element
or quantity; nothing is signalled through return codes inside the library.
"""


class GridSentryError(Exception):
    """Base class for all engine errors."""


# --- snapshot ingestion / modification ---

class ParseError(GridSentryError):
    """Snapshot document is not well-formed (bad JSON, wrong types)."""


class ValidationError(GridSentryError):
    """Snapshot violates a structural invariant (dangling ref, bad value)."""


class UnknownElementError(GridSentryError):
    """An operation referenced an element id that does not exist."""


class LimitError(GridSentryError):
    """A setpoint modification violates the element's limits."""


class DegenerateError(GridSentryError):
    """A derived quantity is undefined for this input (e.g. zero denominator)."""


# --- power flow ---

class SingularJacobianError(GridSentryError):
    """Newton iteration hit a structurally singular Jacobian."""

    def __init__(self, message: str, iteration: int = 0):
        super().__init__(message)
        self.iteration = iteration


class IslandError(GridSentryError):
    """An electrical island cannot be solved (no slack bus)."""


class NotConvergedError(GridSentryError):
    """A result that requires a converged power flow was asked of a diverged one."""


class AlreadyOutError(GridSentryError):
    """Contingency targets an element that is already out of service."""


# --- dynamic simulation ---

class InitError(GridSentryError):
    """Simulation initial conditions could not be established."""


class NumericalError(GridSentryError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, t: float = 0.0):
        super().__init__(message)
        self.t = t


# --- criteria ---

class TraceTooShortError(GridSentryError):
    """Frequency trace too short for the requested rolling window."""


class EmptyTraceError(GridSentryError):
    """No samples available for the requested metric."""


class NoMachinesError(GridSentryError):
    """Inertia-weighted aggregation over an empty machine set."""


class SingleMachineError(GridSentryError):
    """Rotor-angle margin is undefined with fewer than two machines."""


# --- screening / policy / analytics ---

class BasecaseInsecureError(GridSentryError):
    """The pre-contingency operating point already violates security criteria."""


class UnknownProfileError(GridSentryError):
    """Requested policy profile is not configured."""


class EmptyWindowError(GridSentryError):
    """Archive query window contains no cycles."""


# --- service / configuration ---

class ConfigError(GridSentryError):
    """Engine configuration file is invalid."""


class BindError(GridSentryError):
    """HTTP listen address could not be bound."""
