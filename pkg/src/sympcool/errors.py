"""Exception types raised by the simulation and analysis routines."""


class SympcoolError(Exception):
    """Base class for all package errors."""


class DomainError(SympcoolError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConfigError(SympcoolError, ValueError):
    """Invalid configuration, optionally naming the offending field."""

    def __init__(self, message, field=None):
        self.field = field
        self.message = message
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class SolverError(SympcoolError, RuntimeError):
    """An iterative solver failed to converge.

    The last iterate is kept on ``last`` so callers can inspect it.
    """

    def __init__(self, message, last=None):
        self.last = last
        super().__init__(message)


class InstabilityError(SympcoolError, RuntimeError):
    """A mass-weighted Hessian has a negative eigenvalue."""

    def __init__(self, message, mode_index=None, eigenvalue=None):
        self.mode_index = mode_index
        self.eigenvalue = eigenvalue
        super().__init__(message)


class IntegrationError(SympcoolError, RuntimeError):
    """A density matrix violated its invariants during time stepping."""

    def __init__(self, message, step=None, time=None, report=None):
        self.step = step
        self.time = time
        self.report = report or {}
        super().__init__(message)


class FitError(SympcoolError, RuntimeError):
    """An inverse problem has no acceptable solution in range."""

    def __init__(self, message, best=None, residual=None):
        self.best = best
        self.residual = residual
        super().__init__(message)
