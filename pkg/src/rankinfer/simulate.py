"""Synthetic comparison data and signal-strength diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from . import rng
from .errors import BoundaryTie
from .model import (
    ComparisonDataset,
    ComparisonGraph,
    PairwisePreferred,
    RankingProperty,
    ScoresLike,
    ScoreVector,
    TopK,
    as_array,
    kth_largest,
    property_holds,
)


def generate_graph(n: int, p: float, seed: rng.SeedLike) -> ComparisonGraph:
    """Erdos-Renyi comparison graph: each pair ``i < j`` kept with probability ``p``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    I, J = np.triu_indices(n, k=1)
    # one uniform per pair, in lexicographic pair order
    keep = rng.stream(seed, rng.GRAPH).random(I.size) < p
    return ComparisonGraph(n, I[keep], J[keep], p_known=float(p))


def win_probability(scores: ScoresLike, i: int, j: int) -> float:
    """Probability that ``j`` beats ``i``: ``e^{theta_j} / (e^{theta_i} + e^{theta_j})``."""
    theta = as_array(scores)
    return float(expit(theta[j] - theta[i]))


def generate_outcomes(
    graph: ComparisonGraph, scores: ScoresLike, L: int, seed: rng.SeedLike
) -> ComparisonDataset:
    """Draw ``L`` Bernoulli comparisons per edge under the BTL model.

    Replicate ``l`` of edge ``e`` consumes draw ``e * L + l`` of the
    ``(seed, OUTCOMES)`` stream.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    theta = as_array(scores)
    if theta.size != graph.n:
        raise ValueError("score vector length does not match graph")
    q = expit(theta[graph.J] - theta[graph.I])
    U = rng.stream(seed, rng.OUTCOMES).random((graph.m, L))
    Y = (U < q[:, None]).astype(np.int8)
    return ComparisonDataset(graph, Y)


def simulate_dataset(scores: ScoresLike, p: float, L: int, seed: rng.SeedLike) -> ComparisonDataset:
    theta = as_array(scores)
    # graph and outcomes already draw from distinct streams of the same seed
    g = generate_graph(theta.size, p, seed)
    return generate_outcomes(g, theta, L, seed)


# --------------------------------------------------------------------------
# score designs
# --------------------------------------------------------------------------

def uniform_scores(n: int, lo: float, hi: float, seed: rng.SeedLike) -> ScoreVector:
    """Scores drawn uniformly on ``[lo, hi]``, then centered to sum zero."""
    if not hi >= lo:
        raise ValueError("need lo <= hi")
    v = rng.stream(seed, rng.SCORES).uniform(lo, hi, n)
    return ScoreVector(v - v.mean(), identified=True)


def block_scores(blocks: Sequence[tuple[int, float]]) -> ScoreVector:
    """Blocks of ``(count, value)`` in order, centered; e.g. ``[(30, 10), (70, 7.5)]``."""
    v = np.concatenate([np.full(int(c), float(x)) for c, x in blocks])
    return ScoreVector(v - v.mean(), identified=True)


def parse_blocks(spec: str) -> list[tuple[int, float]]:
    """Parse ``"30x10,70x7.5"`` into ``[(30, 10.0), (70, 7.5)]``."""
    out = []
    for part in spec.split(","):
        count, _, value = part.strip().partition("x")
        if not _:
            raise ValueError(f"bad block {part!r}; expected COUNTxVALUE")
        c = int(count)
        if c < 1:
            raise ValueError(f"block count must be positive in {part!r}")
        out.append((c, float(value)))
    return out


# --------------------------------------------------------------------------
# signal strength
# --------------------------------------------------------------------------

def signal_distance(scores: ScoresLike, prop: RankingProperty) -> float:
    """Smallest score gap over the legal pairs of ``prop``.

    For a pairwise property this is ``|theta_i - theta_j|``; for top-K it is
    ``|theta_i - theta_(K+1)|`` with ``theta_(K+1)`` the (K+1)-th largest score.
    """
    theta = as_array(scores)
    prop.validate(theta.size)
    if isinstance(prop, PairwisePreferred):
        if theta[prop.i] == theta[prop.j]:
            raise BoundaryTie(f"items {prop.i} and {prop.j} are tied")
        return float(abs(theta[prop.i] - theta[prop.j]))
    if isinstance(prop, TopK):
        kth = kth_largest(theta, prop.K)
        next_ = kth_largest(theta, prop.K + 1)
        if kth == next_ and theta[prop.i] == kth:
            raise BoundaryTie(f"item {prop.i} is tied across the top-{prop.K} boundary")
        return float(abs(theta[prop.i] - next_))
    raise TypeError(f"unknown property {prop!r}")


def multiple_testing_signal(scores: ScoresLike, props: Sequence[RankingProperty]) -> float:
    """Minimum signal distance over the items whose property holds."""
    theta = as_array(scores)
    if not props:
        raise ValueError("empty property family")
    kinds = {type(p) for p in props}
    if len(kinds) != 1:
        raise ValueError("property family must be of a single kind")
    held = [signal_distance(theta, p) for p in props if property_holds(theta, p)]
    if not held:
        raise ValueError("no property in the family holds")
    return float(min(held))


@dataclass(frozen=True)
class TopKFamily:
    K: int


@dataclass(frozen=True)
class AboveItemFamily:
    """Select every item ranked above the item at (1-based) rank ``k``."""

    k: int


def _two_blocks(theta: np.ndarray, top: int) -> bool:
    s = np.sort(theta)[::-1]
    return (
        0 < top < s.size
        and np.all(s[:top] == s[0])
        and np.all(s[top:] == s[top])
        and s[0] > s[top]
    )


def divider_cardinality(scores: ScoresLike, family) -> int:
    """Size of the divider set for the two-block lower-bound constructions.

    Top-K with ``K`` tied leaders above ``n - K`` tied followers gives
    ``K (n - K)``; "above item k" with ``k - 1`` tied leaders gives
    ``(k - 1)(n - k) + 1``.
    """
    theta = as_array(scores)
    n = theta.size
    if isinstance(family, TopKFamily):
        if not _two_blocks(theta, family.K):
            raise ValueError("scores must be K tied leaders above n-K tied followers")
        return family.K * (n - family.K)
    if isinstance(family, AboveItemFamily):
        k = family.k
        if not 2 <= k <= n or not _two_blocks(theta, k - 1):
            raise ValueError("scores must be k-1 tied leaders above n-k+1 tied followers")
        return (k - 1) * (n - k) + 1
    raise TypeError(f"unknown family {family!r}")
