"""Exception types shared across the package."""


class InvflowError(Exception):
    """Base class for all structured errors raised by invflow."""


class NotSymmetric(InvflowError):
    pass


class NotPositiveDefinite(InvflowError):
    """Raised when a matrix required to be symmetric positive definite is not.

    The message names the offending matrix (e.g. ``R_w``, ``P``).
    """


class SingularMatrix(InvflowError):
    pass


class SingularLyapunov(InvflowError):
    pass


class RankDeficientB(InvflowError):
    pass


class BoxExcludesZero(InvflowError):
    pass


class XiBelowOne(InvflowError):
    pass


class UnsupportedDimension(InvflowError):
    pass


class VertexExplosion(InvflowError):
    pass


class OutsideEnvelope(InvflowError):
    pass


class AlphaNonPositive(InvflowError):
    pass


class UnstableVertex(InvflowError):
    pass


class ZeroState(InvflowError):
    pass


class NonFiniteState(InvflowError):
    """Integration produced a non-finite state.

    Carries the partial trajectory recorded up to the failure.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ModeMismatch(InvflowError):
    pass


class ProblemFileError(InvflowError):
    """Raised for malformed or invalid problem files."""
