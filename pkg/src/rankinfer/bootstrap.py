"""Gaussian multiplier bootstrap for max statistics over an edge set."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from . import kernels, rng
from .errors import AlphaOutOfRange, EmptyEdgeSet
from .model import ComparisonDataset, ScoresLike, as_array


class EdgeSetSpec:
    """Ordered pairs ``(i, j)`` over which the max statistic is taken."""

    def pairs(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


@dataclass(frozen=True)
class Star(EdgeSetSpec):
    """All pairs ``(i, j)`` with ``j != i``."""

    i: int

    def pairs(self, n):
        if not 0 <= self.i < n:
            raise ValueError(f"star centre {self.i} out of range for n={n}")
        j = np.delete(np.arange(n), self.i)
        return np.full(j.size, self.i), j


@dataclass(frozen=True)
class Full(EdgeSetSpec):
    """Every ordered pair ``i != j``."""

    def pairs(self, n):
        src, dst = np.nonzero(~np.eye(n, dtype=bool))
        return src, dst


@dataclass(frozen=True)
class Explicit(EdgeSetSpec):
    edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))

    def pairs(self, n):
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        arr = np.array(self.edges, dtype=np.int64)
        if np.any(arr[:, 0] == arr[:, 1]):
            raise ValueError("edge set pairs need distinct endpoints")
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError("edge set pair out of range")
        return arr[:, 0], arr[:, 1]


@dataclass(frozen=True, eq=False)
class BootstrapDraws:
    draws: np.ndarray = field(repr=False)
    edge_set: EdgeSetSpec
    B: int
    seed: tuple
    scale: float  # sqrt(n p_hat / L)

    def __post_init__(self):
        d = np.array(self.draws, dtype=float)
        if d.ndim != 1 or d.size < 1 or d.size != self.B:
            raise ValueError("draws must be a non-empty vector of length B")
        if not np.all(np.isfinite(d)):
            raise ValueError("draws must be finite")
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)
        object.__setattr__(self, "_sorted", np.sort(d))

    def quantile(self, alpha: float) -> float:
        return quantile_cw(self, alpha)

    def p_value(self, t_obs: float) -> float:
        return p_value(self, t_obs)


def residual_profile(theta_hat: ScoresLike, data: ComparisonDataset) -> np.ndarray:
    """Per-replicate gradient terms at ``theta_hat``, shape ``(L, n)``.

    Row ``l`` is ``sum_edges (sigma(t_j - t_i) - y_l) (e_j - e_i)``; the row
    mean equals the likelihood gradient.
    """
    t = as_array(theta_hat)
    g = data.graph
    if t.size != g.n:
        raise ValueError("score vector length does not match dataset")
    return kernels.residuals(t, g.I, g.J, data.outcomes, g.n)


def multipliers(B: int, L: int, seed: rng.SeedLike) -> np.ndarray:
    """Standard normal ``z[b, l]``; entry ``(b, l)`` is draw ``b * L + l`` of the stream."""
    return rng.stream(seed, rng.BOOTSTRAP).standard_normal((B, L))


def draw_max_statistics(
    profile: np.ndarray,
    theta11: np.ndarray,
    edge_set: EdgeSetSpec,
    scale_np: float,
    B: int,
    seed: rng.SeedLike,
) -> BootstrapDraws:
    """Bootstrap draws ``W_b = max_{(i,j) in E} L^{-1/2} sum_l z_bl s_l(i, j)``.

    With ``A = profile @ theta11`` and ``g_b = z_b' A`` the summand reduces to
    ``sqrt(n p / L) (g_b[j] - g_b[i])``, so the edge max is a row reduction.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    R = np.asarray(profile, dtype=float)
    L, n = R.shape
    src = dst = None
    if isinstance(edge_set, Explicit):
        src, dst = edge_set.pairs(n)
        if src.size == 0:
            raise EmptyEdgeSet("edge set is empty")
    elif n < 2:
        raise EmptyEdgeSet("edge set is empty for a single item")
    elif isinstance(edge_set, Star):
        edge_set.pairs(n)  # range check
    A = R @ np.asarray(theta11, dtype=float)
    G = multipliers(B, L, seed) @ A
    if isinstance(edge_set, Full):
        w = kernels.span_max(G)
    elif isinstance(edge_set, Star):
        w = kernels.star_max(G, edge_set.i)
    else:
        if src is None:
            src, dst = edge_set.pairs(n)
        w = kernels.pairs_max(G, src, dst)
    scale = math.sqrt(scale_np / L)
    return BootstrapDraws(scale * w, edge_set, B, tuple(rng.derive_seed(seed)), scale)


def quantile_cw(draws: BootstrapDraws, alpha: float) -> float:
    """Empirical ``(1 - alpha)`` quantile: order statistic ``ceil((1 - alpha) B)``."""
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    B = draws.B
    # tolerance keeps e.g. (1 - 0.05) * 100 from rounding up to 96
    k = math.ceil((1.0 - alpha) * B - 1e-9)
    k = min(max(k, 1), B)
    return float(draws._sorted[k - 1])


def p_value(draws: BootstrapDraws, t_obs: float) -> float:
    """Smoothed tail mass ``(1 + #{W_b >= t}) / (B + 1)``."""
    srt = draws._sorted
    count = srt.size - int(np.searchsorted(srt, t_obs, side="left"))
    return (1.0 + count) / (draws.B + 1.0)

