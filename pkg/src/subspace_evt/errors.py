"""Exception types raised across the package."""

from __future__ import annotations


class SubspaceEvtError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SubspaceEvtError, ValueError):
    """Malformed matrices, specs or parameters."""


class RankRequestError(InvalidInputError):
    """Requested rank exceeds min(n, m) or the input is rank deficient."""


class SingularAlignmentError(SubspaceEvtError, ArithmeticError):
    """The cross-Gram matrix A^T B is (numerically) singular, so sgn(A^T B) is ill-defined."""


class AmbiguousMultiplicityError(SubspaceEvtError, ArithmeticError):
    """An eigenvalue sits inside the tolerance band just below the top eigenvalue."""


class BelowBulkEdgeError(SubspaceEvtError, ArithmeticError):
    """Some sample singular values are too small to be de-biased.

    ``indices`` holds the zero-based positions that failed.
    """

    def __init__(self, indices, message: str | None = None):
        self.indices = tuple(int(i) for i in indices)
        super().__init__(message or f"singular values below the noise bulk edge at indices {list(self.indices)}")


class MisalignedHypothesesError(SubspaceEvtError, ValueError):
    """Null and alternative frames are not aligned (sgn(U0^T U1) != I)."""


class QuadratureError(SubspaceEvtError, ArithmeticError):
    """Numerical inversion of the characteristic function did not converge."""


class NonConvergenceError(SubspaceEvtError, ArithmeticError):
    """An iterative root finder exhausted its budget."""
