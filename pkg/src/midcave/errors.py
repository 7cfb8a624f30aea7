"""Exception types raised across the package."""


class MidcaveError(Exception):
    """Base class for package errors."""


class DomainError(MidcaveError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(MidcaveError, ArithmeticError):
    """A numerical procedure failed to converge or lost precision.

    ``diagnostics`` carries whatever the failing routine knew at the time.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConfigError(MidcaveError, ValueError):
    """A run configuration violates a documented invariant."""


class UnsupportedSizeError(ConfigError):
    """A deterministic method was asked for a problem size it does not cover."""
