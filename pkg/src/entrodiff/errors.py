"""Exception types shared across the package."""


class EntrodiffError(Exception):
    """Base class for all package errors."""


class DomainError(EntrodiffError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ConfigError(EntrodiffError, ValueError):
    """An experiment configuration is malformed or violates an invariant."""


class StiffnessError(EntrodiffError, RuntimeError):
    """The adaptive reaction integrator exceeded its substep budget."""

    def __init__(self, message: str, cell: int | None = None, values=None):
        super().__init__(message)
        self.cell = cell
        self.values = values


class PositivityError(EntrodiffError, RuntimeError):
    """A state lost strict positivity, indicating numerical failure."""
