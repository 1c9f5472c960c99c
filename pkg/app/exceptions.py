"""
Error hierarchy for the fBm Legendre expansion toolkit.
Every failure raised by the numerical services derives from FbmError so the
CLI and the HTTP layer can map it to an exit code or a status code.
"""


class FbmError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(FbmError):
    """Invalid configuration, e.g. a precision below the supported minimum."""


class ParseError(FbmError, ValueError):
    """A user-supplied number is not an exact decimal or rational string."""


class DomainError(FbmError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Gamma function evaluated at a non-positive integer."""


class CoefficientIndexError(FbmError, IndexError):
    """Legendre coefficient requested with k > i."""


class DegenerateInputError(FbmError, ArithmeticError):
    """A recurrence hit a vanishing denominator; use the explicit form instead."""


class MatrixFormatError(FbmError):
    """Malformed or incompatible matrix file."""


class OracleFailure(FbmError):
    """A numerical oracle (quadrature or series) did not converge."""


class ValidationFailure(FbmError):
    """A validation check exceeded its tolerance."""
