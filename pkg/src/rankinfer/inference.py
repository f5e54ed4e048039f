"""Hypothesis tests for ranking properties and multiple-testing selection."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from . import rng
from .bootstrap import Full, Star, draw_max_statistics, p_value, quantile_cw, residual_profile
from .debias import DebiasResult, pairwise_variance
from .errors import AlphaOutOfRange, IndexOutOfRange, UnsupportedProperty
from .model import (
    ComparisonDataset,
    PairwisePreferred,
    RankingProperty,
    TopK,
    kth_largest,
)

NORMAL_Z = "NormalZ"
BOOTSTRAP_MAX = "BootstrapMax"
FWER = "FWER"
FDR_BY = "FDR_BY"

DEFAULT_TEST_DRAWS = 2000
DEFAULT_SELECT_DRAWS = 5000

_TINY = np.finfo(float).tiny


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")


def _check_item(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise IndexOutOfRange(f"item {i} out of range for n={n}")


def _check_k(K: int, n: int) -> None:
    if not 1 <= K <= n - 1:
        raise ValueError(f"K must lie in [1, {n - 1}], got {K}")


def normal_quantile(q: float) -> float:
    """Standard normal quantile (Cephes ``ndtri``, ~1e-15 relative accuracy)."""
    return float(ndtri(q))


@dataclass(frozen=True)
class TestReport:
    property: RankingProperty
    statistic: float
    threshold: float
    p_value: float
    reject: bool
    alpha: float
    method: str

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.reject != (self.statistic > self.threshold):
            raise ValueError("reject must equal statistic > threshold")
        if not 0.0 < self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside (0, 1]")

    def to_dict(self) -> dict:
        prop = self.property
        d = {"property": type(prop).__name__, **vars(prop)}
        return {
            "property": d,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "method": self.method,
        }


@dataclass(frozen=True, eq=False)
class SelectionResult:
    selected: tuple
    p_values: np.ndarray = field(repr=False)
    method: str
    alpha: float
    k: int | None
    threshold_used: float
    statistics: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.p_values)
        sel = tuple(sorted(int(i) for i in self.selected))
        if any(not 0 <= i < n for i in sel):
            raise ValueError("selected items out of range")
        object.__setattr__(self, "selected", sel)
        p = np.array(self.p_values, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p_values", p)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "K": self.k,
            "selected": list(self.selected),
            "p_values": self.p_values.tolist(),
            "threshold_used": self.threshold_used,
        }


# --------------------------------------------------------------------------
# single tests
# --------------------------------------------------------------------------

def test_pairwise(result: DebiasResult, i: int, j: int, alpha: float) -> TestReport:
    """One-sided z-test of ``H0: theta_i <= theta_j``."""
    _check_alpha(alpha)
    var = pairwise_variance(result, i, j)
    td = result.theta_debiased.values
    z = float((td[i] - td[j]) / math.sqrt(var))
    threshold = normal_quantile(1.0 - alpha)
    p = max(float(ndtr(-z)), _TINY)
    return TestReport(PairwisePreferred(i, j), z, threshold, p, z > threshold, alpha, NORMAL_Z)


def topk_statistic(result: DebiasResult, i: int, K: int) -> float:
    """``sqrt(n p L) (theta_d[i] - theta_d_(K+1))``."""
    td = result.theta_debiased.values
    root = math.sqrt(result.scale_np * result.L)
    return float(root * (td[i] - kth_largest(td, K + 1)))


def _topk_draws(result, profile, i, B, seed):
    return draw_max_statistics(
        profile, result.theta11, Star(i), result.scale_np, B, rng.derive_seed(seed, i)
    )


def test_topk(
    result: DebiasResult,
    data: ComparisonDataset,
    i: int,
    K: int,
    alpha: float,
    B: int = DEFAULT_TEST_DRAWS,
    seed: rng.SeedLike = 0,
    profile: np.ndarray | None = None,
) -> TestReport:
    """Test ``H0: item i is not in the top K`` against the Star(i) bootstrap quantile.

    Multipliers come from stream ``(seed, i)`` so each item's test is
    reproducible on its own and independent of the other items.
    """
    _check_alpha(alpha)
    _check_item(i, result.n)
    _check_k(K, result.n)
    if profile is None:
        profile = residual_profile(result.theta_hat, data)
    stat = topk_statistic(result, i, K)
    draws = _topk_draws(result, profile, i, B, seed)
    threshold = quantile_cw(draws, alpha)
    return TestReport(
        TopK(i, K), stat, threshold, p_value(draws, stat), stat > threshold, alpha, BOOTSTRAP_MAX
    )


def topk_p_values(
    result: DebiasResult,
    data: ComparisonDataset,
    K: int,
    B: int = DEFAULT_SELECT_DRAWS,
    seed: rng.SeedLike = 0,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Top-K statistics and bootstrap p-values for every item."""
    _check_k(K, result.n)
    profile = residual_profile(result.theta_hat, data)
    stats = np.array([topk_statistic(result, i, K) for i in range(result.n)])

    def one(i):
        return p_value(_topk_draws(result, profile, i, B, seed), stats[i])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pvals = list(pool.map(one, range(result.n)))
    else:
        pvals = [one(i) for i in range(result.n)]
    return stats, np.array(pvals)


def test_general_property(
    result: DebiasResult,
    data: ComparisonDataset,
    prop: RankingProperty,
    alpha: float,
    B: int = DEFAULT_TEST_DRAWS,
    seed: rng.SeedLike = 0,
) -> TestReport:
    """Perturbation test, realised through the closed-form reduction for ``prop``."""
    if isinstance(prop, PairwisePreferred):
        return test_pairwise(result, prop.i, prop.j, alpha)
    if isinstance(prop, TopK):
        return test_topk(result, data, prop.i, prop.K, alpha, B, seed)
    raise UnsupportedProperty(f"no test reduction for {type(prop).__name__}")


# --------------------------------------------------------------------------
# multiple testing
# --------------------------------------------------------------------------

def by_cutoff(p_values, alpha: float) -> tuple[int, float]:
    """Benjamini-Yekutieli step-up.

    Returns ``(r, cutoff)`` with ``r = max{k : p_(k) <= k alpha / (n N)}``,
    ``N = sum_{k<=n} 1/k`` and ``cutoff = r alpha / (n N)`` (0 when ``r = 0``).
    """
    _check_alpha(alpha)
    p = np.sort(np.asarray(p_values, dtype=float))
    n = p.size
    if n == 0:
        return 0, 0.0
    harmonic = float(np.sum(1.0 / np.arange(1, n + 1)))
    line = np.arange(1, n + 1) * alpha / (n * harmonic)
    ok = np.nonzero(p <= line)[0]
    if ok.size == 0:
        return 0, 0.0
    r = int(ok[-1]) + 1
    return r, float(line[r - 1])


def bh_cutoff(p_values, alpha: float) -> tuple[int, float]:
    """Benjamini-Hochberg step-up; same conventions as :func:`by_cutoff`."""
    _check_alpha(alpha)
    p = np.sort(np.asarray(p_values, dtype=float))
    n = p.size
    line = np.arange(1, n + 1) * alpha / n
    ok = np.nonzero(p <= line)[0]
    if ok.size == 0:
        return 0, 0.0
    r = int(ok[-1]) + 1
    return r, float(line[r - 1])


def select_by(p_values, alpha: float, K: int | None = None) -> SelectionResult:
    """BY selection on given p-values."""
    p = np.asarray(p_values, dtype=float)
    r, cutoff = by_cutoff(p, alpha)
    selected = np.nonzero(p <= cutoff)[0] if r > 0 else np.zeros(0, dtype=int)
    return SelectionResult(tuple(selected.tolist()), p, FDR_BY, alpha, K, cutoff)


def select_topk_fdr_by(
    result: DebiasResult,
    data: ComparisonDataset,
    K: int,
    alpha: float,
    B: int = DEFAULT_SELECT_DRAWS,
    seed: rng.SeedLike = 0,
    threads: int = 1,
) -> SelectionResult:
    _check_alpha(alpha)
    stats, pvals = topk_p_values(result, data, K, B, seed, threads)
    sel = select_by(pvals, alpha, K)
    return SelectionResult(sel.selected, pvals, FDR_BY, alpha, K, sel.threshold_used, stats)


def select_topk_fwer(
    result: DebiasResult,
    data: ComparisonDataset,
    K: int,
    alpha: float,
    B: int = DEFAULT_SELECT_DRAWS,
    seed: rng.SeedLike = 0,
    conservative_box: bool = False,
) -> SelectionResult:
    """Select items whose top-K statistic exceeds the global max-statistic quantile.

    The default is the one-sided rule: item ``i`` is selected when
    ``sqrt(n p L) (theta_d[i] - theta_d_(K+1)) > C_M``. With
    ``conservative_box`` every score may move by ``C_M / sqrt(n p L)`` in
    either direction, so the gap must exceed ``2 C_M``.
    """
    _check_alpha(alpha)
    _check_k(K, result.n)
    profile = residual_profile(result.theta_hat, data)
    draws = draw_max_statistics(profile, result.theta11, Full(), result.scale_np, B, seed)
    c_m = quantile_cw(draws, alpha)
    stats = np.array([topk_statistic(result, i, K) for i in range(result.n)])
    factor = 2.0 if conservative_box else 1.0
    threshold = factor * c_m
    selected = np.nonzero(stats > threshold)[0]
    pvals = np.array([p_value(draws, s / factor) for s in stats])
    return SelectionResult(tuple(selected.tolist()), pvals, FWER, alpha, K, threshold, stats)
