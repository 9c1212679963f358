"""Exception types shared across the package.

Every error raised on a user-facing path derives from :class:`RouthianError`,
so callers (and the CLI) can distinguish "your input is wrong" from genuine
bugs.  The CLI maps these onto its exit codes.
"""

from __future__ import annotations


class RouthianError(Exception):
    """Base class for all errors raised by this package."""


class EvaluationError(RouthianError):
    """A function could not be evaluated (domain error, non-differentiable point)."""


class ExprError(RouthianError):
    """Base class for expression-language errors.

    Carries the character offset into the source string so messages can
    point at the offending token.
    """

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    """Source text does not match the grammar."""


class UnknownIdentifierError(ExprError):
    """An identifier is neither a declared variable nor a known function."""

    def __init__(self, name: str, offset: int | None = None):
        self.name = name
        super().__init__(f"unknown identifier '{name}'", offset)


class ScenarioError(RouthianError):
    """A scenario file or inline system description is malformed."""


class DimensionError(ScenarioError):
    """Array/index sizes are inconsistent with the declared dimension."""


class RegularityError(RouthianError):
    """A matrix that must be invertible is singular to working precision."""


class ConvergenceError(RouthianError):
    """An iterative solve failed to reach its residual tolerance."""


class UnsupportedCaseError(RouthianError):
    """The symmetry data does not match any supported reduction case."""


class IntegrationError(RouthianError):
    """Time integration could not start (bad initial data)."""
