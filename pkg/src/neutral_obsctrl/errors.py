"""Exception types raised by the toolkit."""


class NeutralSystemError(Exception):
    """Base class for all errors raised by this package."""


class DomainViolation(NeutralSystemError):
    """An initial state does not satisfy the compatibility condition of D(A)."""


class SingularStep(NeutralSystemError):
    """The implicit per-step matrix of the simulator is singular."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class OffGrid(NeutralSystemError):
    """A requested time is not a node of the trajectory grid."""


class ContourHit(NeutralSystemError):
    """The characteristic determinant is (numerically) zero on a search contour."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class MaxDepthExceeded(NeutralSystemError):
    """Box subdivision hit the depth limit; ``partial`` holds the roots found so far."""

    def __init__(self, message, partial=()):
        super().__init__(message)
        self.partial = list(partial)


class Uncontrollable(NeutralSystemError):
    """The Krylov rank of a matrix pair saturates below the state dimension."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class CapExceeded(NeutralSystemError):
    """A discretization would exceed the configured size cap."""
