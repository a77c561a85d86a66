"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SolverError):
    """Invalid run configuration (grid, scheme, kernel/grid mismatch, ...)."""


class KernelDefinitionError(ConfigurationError):
    """A kernel definition is unusable (bad support, vanishing integral, ...)."""


class InputDataError(SolverError):
    """User-supplied data (initial profiles, config values) is malformed."""


class ModelDefinitionError(SolverError):
    """A model definition is internally inconsistent."""


class NumericsError(SolverError):
    """The time loop produced an invalid state."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class CflViolationError(NumericsError):
    """The fixed time step violated the CFL bound for the evolving state."""
