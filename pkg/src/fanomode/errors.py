"""Exception types shared across the package."""

from __future__ import annotations


class FanomodeError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(FanomodeError, ValueError):
    """A model, generator, or solver parameter is out of its allowed range."""


class DomainError(FanomodeError, ValueError):
    """A function argument lies outside the mathematical domain (e.g. tau < 0)."""


class SpectralError(FanomodeError, ValueError):
    """A spectral representation is corrupt (e.g. J(omega) < 0 where required)."""


class FactorizationError(FanomodeError, ValueError):
    """Supplied (mu, nu) do not factorize the pole residue.

    Carries the complex mismatch in ``residual``.
    """

    def __init__(self, message: str, residual: complex):
        super().__init__(message)
        self.residual = residual


class StepSizeError(FanomodeError, ValueError):
    """The requested time step is too large for the solver to be trustworthy."""


class RecurrenceError(FanomodeError, ValueError):
    """A discretized-reservoir run was requested beyond its recurrence horizon."""


class UnsupportedRegimeError(FanomodeError, ValueError):
    """The operation is only defined in a parameter regime the input is not in."""


class ConfigError(FanomodeError, ValueError):
    """A run configuration file or override is invalid."""
