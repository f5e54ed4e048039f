"""Negative log-likelihood, its derivatives, and the l2-regularized MLE."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import DisconnectedGraph, NoConvergence
from .model import ComparisonDataset, ComparisonGraph, ScoresLike, ScoreVector, as_array

# Default constant in lambda0 = c * sqrt(n p log n / L). See README for why it
# is below 1.
DEFAULT_C_LAMBDA = 0.01


def _theta(theta: ScoresLike, data: ComparisonDataset) -> np.ndarray:
    t = as_array(theta)
    if t.size != data.n:
        raise ValueError(f"score vector has length {t.size}, dataset has n={data.n}")
    return t


def neg_log_likelihood(theta: ScoresLike, data: ComparisonDataset) -> float:
    """Sum over edges of ``-ybar (t_j - t_i) + log(1 + exp(t_j - t_i))``."""
    g = data.graph
    return float(kernels.loss(_theta(theta, data), g.I, g.J, data.means))


def gradient(theta: ScoresLike, data: ComparisonDataset) -> np.ndarray:
    g = data.graph
    return kernels.gradient(_theta(theta, data), g.I, g.J, data.means, data.n)


def hessian(theta: ScoresLike, data: ComparisonDataset) -> np.ndarray:
    g = data.graph
    return kernels.hessian(_theta(theta, data), g.I, g.J, data.n)


def check_connected(graph: ComparisonGraph) -> bool:
    if graph.n == 1:
        return True
    adj = coo_matrix((np.ones(graph.m), (graph.I, graph.J)), shape=(graph.n, graph.n))
    k, _ = connected_components(adj, directed=False)
    return k == 1


@dataclass(frozen=True)
class MleConfig:
    """Solver settings. ``lambda0="auto"`` uses ``c_lambda * sqrt(n p log n / L)``."""

    lambda0: Union[float, str] = "auto"
    c_lambda: float = DEFAULT_C_LAMBDA
    tol_grad_inf: float = 1e-10
    max_iters: int = 500

    def __post_init__(self):
        if isinstance(self.lambda0, str):
            if self.lambda0 != "auto":
                raise ValueError('lambda0 must be a non-negative number or "auto"')
        elif not self.lambda0 >= 0:
            raise ValueError("lambda0 must be non-negative")
        if not self.c_lambda > 0:
            raise ValueError("c_lambda must be positive")
        if not self.tol_grad_inf > 0:
            raise ValueError("tol_grad_inf must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


def resolve_lambda0(data: ComparisonDataset, config: MleConfig) -> float:
    if config.lambda0 != "auto":
        return float(config.lambda0)
    n = data.n
    p = data.graph.p
    return config.c_lambda * math.sqrt(n * p * math.log(n) / data.L)


@dataclass(frozen=True)
class MleResult:
    theta: ScoreVector
    lambda0: float
    iterations: int
    grad_norm: float
    objective_trace: tuple = field(repr=False)


def solve_mle(data: ComparisonDataset, config: MleConfig | None = None) -> MleResult:
    """Damped Newton on ``L(theta) + lambda0 ||theta||^2`` from ``theta = 0``.

    Backtracking halves the step until the Armijo condition holds. With
    ``lambda0 = 0`` the Newton system is regularized along the all-ones
    direction, which leaves the sum-zero iterates unchanged.
    """
    config = config or MleConfig()
    if not check_connected(data.graph):
        raise DisconnectedGraph("comparison graph is not connected")
    n = data.n
    lam = resolve_lambda0(data, config)
    I, J, ybar = data.graph.I, data.graph.J, data.means

    def objective(t):
        return kernels.loss(t, I, J, ybar) + lam * float(t @ t)

    ridge = 2.0 * lam * np.eye(n)
    if lam == 0.0:
        ridge = np.full((n, n), 1.0 / n)

    theta = np.zeros(n)
    f = objective(theta)
    trace = [f]
    for _ in range(config.max_iters):
        g = kernels.gradient(theta, I, J, ybar, n) + 2.0 * lam * theta
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= config.tol_grad_inf:
            break
        H = kernels.hessian(theta, I, J, n) + ridge
        step = linalg.solve(H, g, assume_a="pos")
        slope = float(g @ step)
        if slope <= 1e-10 * max(1.0, abs(f)):
            # predicted decrease is below the resolution of f: take the pure
            # Newton step, we are inside the quadratic-convergence region
            theta = theta - step
            f = objective(theta)
            trace.append(f)
            continue
        t = 1.0
        while True:
            cand = theta - t * step
            f_new = objective(cand)
            if f_new <= f - 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if f_new > f:
            break
        theta, f = cand, f_new
        trace.append(f)
    else:
        g = kernels.gradient(theta, I, J, ybar, n) + 2.0 * lam * theta
        gnorm = float(np.max(np.abs(g)))

    if gnorm > config.tol_grad_inf:
        raise NoConvergence(
            f"gradient norm {gnorm:.3e} above tolerance after {len(trace) - 1} step(s)"
        )
    # the exact minimizer is sum-zero; remove round-off drift
    theta = theta - theta.mean()
    return MleResult(ScoreVector(theta, identified=True), lam, len(trace) - 1, gnorm, tuple(trace))


def fit_mle(data: ComparisonDataset, config: MleConfig | None = None) -> ScoreVector:
    return solve_mle(data, config).theta
