"""Exception hierarchy shared across the package.

Validation-type failures (bad shapes, bad files, bad configuration) derive
from :class:`ValidationError`; numerical failures (non-convergence, singular
systems) derive from :class:`NumericalError`. The CLI maps the former to
exit code 2 and the latter to exit code 3.
"""

from __future__ import annotations

from typing import Any


class SemshieldError(Exception):
    """Base class for all errors raised by this package.

    Carries an optional ``context`` mapping with machine-readable details
    (offending names, shapes, residuals) that the CLI serializes to stderr.
    """

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context


class ValidationError(SemshieldError, ValueError):
    """Input violates a documented precondition or file-format contract."""


class ShapeError(ValidationError):
    """Matrix or vector dimensions do not conform."""


class ConfigurationError(ValidationError):
    """A requested operation is missing one of its required inputs."""


class NumericalError(SemshieldError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class ConvergenceError(NumericalError):
    """Iteration cap reached before the residual dropped below threshold."""


class SingularSystemError(NumericalError):
    """Linear system is singular (or numerically so) and no ridge was given."""
