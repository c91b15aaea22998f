"""Exception hierarchy.

The CLI maps ``DataError`` to exit code 2 and ``NumericalError`` to exit code 3.
"""

from __future__ import annotations


class HpiError(Exception):
    """Base class for all errors raised by this package."""


class DataError(HpiError, ValueError):
    """Malformed or inconsistent input data."""


class SpaceError(DataError):
    """Invalid search-space document.

    ``path`` is the location of the offending field, e.g. ``parameters/1/regimes/0``.
    """

    def __init__(self, message: str, path: str = "") -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class TrialError(DataError):
    """A trial that does not validate against its search space."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class QuantileError(DataError):
    """``floor(gamma * N)`` is zero, so the top set would be empty."""


class RegimeAssignmentError(DataError):
    """Zero or several regimes match a trial, or a parent value is inactive."""


class NumericalError(HpiError, ArithmeticError):
    """A computation whose inputs are valid but whose result is undefined."""


class AbsoluteContinuityError(NumericalError):
    """``p`` puts mass where ``q`` has none, so the Pearson divergence is infinite."""


class ConditionalParameterError(NumericalError):
    """Plain PED-ANOVA was asked for a conditional parameter without a transform."""


class InsufficientSamplesWarning(UserWarning):
    """A regime had too few active samples for a stable density estimate."""
