"""Exception and warning types shared by all modules."""


class ClBorelError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameterError(ClBorelError, ValueError):
    """A parameter lies outside the documented domain."""


class InvalidTruncationError(InvalidParameterError):
    """Basis truncation too small for the band structure of the operator."""


class InexactDivisionError(ClBorelError, ArithmeticError):
    """An integer recursion produced a non-integral quotient."""


class StructuralMismatchError(ClBorelError):
    """Operator iterates disagree with the expected grading or sign pattern."""


class SeriesOverflowError(ClBorelError, OverflowError):
    """A series term cannot be represented even in log-magnitude form."""


class InsufficientDataError(ClBorelError, ValueError):
    """Too few points for a requested fit."""


class RecursionViolationError(ClBorelError):
    """A mapped sequence does not satisfy its defining recursion."""


class GridTooCoarseError(ClBorelError):
    """Finite differences on the supplied grid are not converged."""


class NonFiniteStateError(ClBorelError, FloatingPointError):
    """A Langevin trajectory left the finite range."""

    def __init__(self, message, trajectory_index=None):
        super().__init__(message)
        self.trajectory_index = trajectory_index


class AllDivergedError(ClBorelError):
    """Every trajectory of an ensemble diverged."""


class ExcessiveDivergenceError(ClBorelError):
    """The fraction of diverged trajectories exceeds the hard limit."""


class ConvergenceError(ClBorelError):
    """An iterative solver stopped before meeting its tolerance."""


class EigensolverError(ClBorelError):
    """Dense eigensolver failure, with the matrix metadata attached."""


class BoundaryMassError(ClBorelError):
    """Too much weight sits on the boundary of a quadrature grid."""


class DegenerateParameterError(InvalidParameterError):
    """Parameters at which a closed form degenerates."""


class NumericalWarning(UserWarning):
    """Base class for numerical diagnostics that do not abort a run."""


class InstabilityWarning(NumericalWarning):
    """A truncated series is not stable at the requested argument."""


class TailTruncationWarning(NumericalWarning):
    """The neglected tail of a truncated integral is not negligible."""


class GridWarning(NumericalWarning):
    """A grid does not cover the bulk of a function."""


class ShiftWarning(NumericalWarning):
    """An inverse-iteration shift sits close to an unwanted eigenvalue."""
