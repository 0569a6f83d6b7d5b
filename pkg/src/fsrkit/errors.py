"""Exception hierarchy shared across the package.

Each class carries the CLI exit code used when the error escapes to the
command line.
"""

from __future__ import annotations


class FsrError(Exception):
    """Base class for all package errors."""

    exit_code = 5


class ValidationFailure(FsrError):
    """A complex, rule, or input file violates a structural invariant."""

    exit_code = 2

    def __init__(self, message: str, check: str = ""):
        super().__init__(message)
        self.check = check


class UnsupportedRegime(FsrError):
    """The requested decision is not implemented for this dynamical regime."""

    exit_code = 3


class BudgetExceeded(FsrError):
    """A cell-count or enumeration budget was hit before completion."""

    exit_code = 4

    def __init__(self, message: str, reached: int | None = None):
        super().__init__(message)
        self.reached = reached


class InternalInconsistency(FsrError):
    """Computed data contradicts an invariant that should hold; a bug or a
    violated theorem hypothesis upstream."""

    exit_code = 5


class BelowThreshold(FsrError):
    """Requested subdivision level is below the stability threshold."""

    exit_code = 3

    def __init__(self, message: str, threshold: int):
        super().__init__(message)
        self.threshold = threshold
