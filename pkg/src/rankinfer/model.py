"""Core data types: score vectors, comparison graphs and datasets, ranking properties."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import IndexOutOfRange

SUM_ZERO_TOL = 1e-9


def _frozen(a, dtype=None):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScoreVector:
    """Log-preference scores ``theta``; higher means preferred.

    ``identified=True`` asserts the sum-to-zero constraint.
    """

    values: np.ndarray
    identified: bool = False

    def __post_init__(self):
        v = _frozen(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("scores must be a non-empty vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("scores must be finite")
        if self.identified and abs(v.sum()) > SUM_ZERO_TOL:
            raise ValueError(f"identified scores must sum to zero, got {v.sum():.3e}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.n

    def centered(self) -> "ScoreVector":
        return ScoreVector(self.values - self.values.mean(), identified=True)


ScoresLike = Union[ScoreVector, np.ndarray, list]


def as_array(scores: ScoresLike) -> np.ndarray:
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        raise ValueError("scores must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scores must be finite")
    return arr


@dataclass(frozen=True)
class ComparisonGraph:
    """Undirected comparison graph on items ``0..n-1``.

    Edges are stored as two index arrays with ``I[e] < J[e]``, sorted
    lexicographically.
    """

    n: int
    I: np.ndarray
    J: np.ndarray
    p_known: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        I = np.asarray(self.I, dtype=np.int64).ravel()
        J = np.asarray(self.J, dtype=np.int64).ravel()
        if I.shape != J.shape:
            raise ValueError("edge index arrays differ in length")
        if np.any(I >= J):
            raise ValueError("edges must satisfy i < j (no self-loops)")
        if I.size and (I.min() < 0 or J.max() >= self.n):
            raise ValueError("edge endpoint out of range")
        order = np.lexsort((J, I))
        I, J = I[order], J[order]
        if I.size > 1 and np.any((np.diff(I) == 0) & (np.diff(J) == 0)):
            raise ValueError("duplicate edges")
        if self.p_known is not None and not (0.0 < self.p_known <= 1.0):
            raise ValueError("p_known must lie in (0, 1]")
        object.__setattr__(self, "I", _frozen(I))
        object.__setattr__(self, "J", _frozen(J))

    @classmethod
    def from_edges(cls, n: int, edges, p_known: float | None = None) -> "ComparisonGraph":
        pairs = [(min(a, b), max(a, b)) for a, b in edges]
        if pairs:
            I, J = map(np.array, zip(*pairs))
        else:
            I = J = np.zeros(0, dtype=np.int64)
        return cls(n, I, J, p_known)

    @property
    def m(self) -> int:
        return int(self.I.size)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.I.tolist(), self.J.tolist()))

    @property
    def density(self) -> float:
        """Empirical edge density ``2|E| / (n(n-1))``."""
        if self.n < 2:
            return 0.0
        return 2.0 * self.m / (self.n * (self.n - 1))

    @property
    def p(self) -> float:
        """Design probability when known, otherwise the empirical density."""
        return self.p_known if self.p_known is not None else self.density


@dataclass(frozen=True)
class ComparisonDataset:
    """Graph plus ``L`` binary outcomes per edge.

    ``outcomes[e, l] == 1`` means item ``graph.J[e]`` beat ``graph.I[e]`` in
    replicate ``l``.
    """

    graph: ComparisonGraph
    outcomes: np.ndarray
    means: np.ndarray = field(init=False)

    def __post_init__(self):
        Y = np.asarray(self.outcomes)
        if Y.ndim != 2 or Y.shape[0] != self.graph.m:
            raise ValueError(
                f"outcomes must have shape (m, L) with m={self.graph.m}, got {Y.shape}"
            )
        if Y.shape[1] < 1:
            raise ValueError("need at least one replicate per edge")
        if not np.all((Y == 0) | (Y == 1)):
            raise ValueError("outcomes must be 0/1")
        Y = _frozen(Y, dtype=np.int8)
        object.__setattr__(self, "outcomes", Y)
        object.__setattr__(self, "means", _frozen(Y.mean(axis=1)))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def L(self) -> int:
        return int(self.outcomes.shape[1])


# --------------------------------------------------------------------------
# ranking properties
# --------------------------------------------------------------------------

class RankingProperty:
    """A property of item ``i`` under the induced ranking."""

    i: int

    def validate(self, n: int) -> None:
        raise NotImplementedError


@dataclass(frozen=True)
class PairwisePreferred(RankingProperty):
    """Item ``i`` is ranked above item ``j``."""

    i: int
    j: int

    def validate(self, n: int) -> None:
        if not (0 <= self.i < n and 0 <= self.j < n):
            raise IndexOutOfRange(f"item index out of range for n={n}")
        if self.i == self.j:
            raise ValueError("pairwise property needs i != j")


@dataclass(frozen=True)
class TopK(RankingProperty):
    """Item ``i`` is among the ``K`` highest-scored items."""

    i: int
    K: int

    def validate(self, n: int) -> None:
        if not 0 <= self.i < n:
            raise IndexOutOfRange(f"item index out of range for n={n}")
        if not 1 <= self.K <= n - 1:
            raise ValueError(f"K must lie in [1, {n - 1}]")


def rank_of(scores: ScoresLike) -> np.ndarray:
    """Rank per item, 1 = highest score; ties go to the smaller index."""
    theta = as_array(scores)
    order = np.lexsort((np.arange(theta.size), -theta))
    ranks = np.empty(theta.size, dtype=np.int64)
    ranks[order] = np.arange(1, theta.size + 1)
    return ranks


def property_holds(scores: ScoresLike, prop: RankingProperty) -> bool:
    theta = as_array(scores)
    prop.validate(theta.size)
    if isinstance(prop, PairwisePreferred):
        return bool(theta[prop.i] > theta[prop.j])
    if isinstance(prop, TopK):
        return bool(rank_of(theta)[prop.i] <= prop.K)
    raise TypeError(f"unknown property {prop!r}")


def kth_largest(values: np.ndarray, k: int) -> float:
    """The ``k``-th largest entry (1-based)."""
    return float(np.partition(values, values.size - k)[values.size - k])
