"""Exception types raised across the package."""

from __future__ import annotations


class NHQMError(Exception):
    """Base class for all errors raised by nhqm."""


class InvalidArgument(NHQMError, ValueError):
    pass


class AssemblyError(NHQMError):
    """A coefficient could not be evaluated on the representation."""


class UnsupportedInBasis(AssemblyError):
    """Coefficient is singular at the origin; use the grid representation instead."""


class MetricError(NHQMError):
    """Gram/metric matrix is not Hermitian positive definite."""


class ConditioningError(NHQMError):
    """An eigenbasis or map is too ill-conditioned for the requested construction."""


class SingularMapError(NHQMError):
    pass


class EigenSolveError(NHQMError):
    """The dense eigensolver failed.

    ``partial`` holds whatever eigenvalues could still be computed, or None.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ParseError(NHQMError, ValueError):
    """Syntax or structure error in an operator expression.

    Attributes
    ----------
    position : int
        0-based character offset into the source text.
    expected : str
        Short description of what the parser expected there.
    """

    def __init__(self, message: str, position: int, expected: str = ""):
        self.position = position
        self.expected = expected
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at position {position}{detail}")
