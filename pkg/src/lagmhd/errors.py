"""Exception hierarchy shared by the solver, diagnostics and CLI."""


class LagMHDError(Exception):
    """Base class for all package errors."""


class ValidationError(LagMHDError, ValueError):
    """Bad parameters, grids or initial data."""


class ConfigError(ValidationError):
    """Malformed or inconsistent run-config file."""


class SolverError(LagMHDError, RuntimeError):
    """The time stepper could not produce an admissible state."""


class NonPositiveJacobian(SolverError):
    def __init__(self, index, value):
        self.index = int(index)
        self.value = float(value)
        super().__init__(f"J <= 0 at cell {self.index} (J = {self.value:.6e})")


class LinearSolveError(SolverError):
    """Tridiagonal solve failed its residual check."""


class InvariantViolation(LagMHDError):
    """A monitored invariant failed beyond its tolerance."""
