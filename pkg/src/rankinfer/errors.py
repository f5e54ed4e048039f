"""Exception types raised across the package."""


class RankInferError(Exception):
    """Base class for all package errors."""


class DisconnectedGraph(RankInferError):
    """The comparison graph has more than one connected component."""


class NoConvergence(RankInferError):
    """The MLE solver stopped before reaching the gradient tolerance."""


class SingularSystem(RankInferError):
    """The augmented Hessian system is singular (extra kernel directions)."""


class EmptyEdgeSet(RankInferError):
    """A bootstrap edge set contains no pairs."""


class AlphaOutOfRange(RankInferError, ValueError):
    pass


class IndexOutOfRange(RankInferError, IndexError):
    pass


class UnsupportedProperty(RankInferError):
    """No closed-form test reduction exists for this ranking property."""


class BoundaryTie(RankInferError, ValueError):
    """Scores tie exactly across the boundary of a ranking property."""


class InsufficientUsers(UserWarning):
    """Some edges had fewer untied co-raters than requested replicates."""

    def __init__(self, dropped, L):
        self.dropped = list(dropped)
        self.L = L
        super().__init__(
            f"{len(self.dropped)} edge(s) dropped with fewer than L={L} untied co-raters"
        )
