"""Lagrangian debiasing under the sum-to-zero constraint."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import IndexOutOfRange, SingularSystem
from .estimate import gradient, hessian
from .model import ComparisonDataset, ScoresLike, ScoreVector, as_array

SYMMETRY_TOL = 1e-8
KERNEL_TOL = 1e-8
IDENTITY_TOL = 1e-6
DUAL_TOL = 1e-10


@dataclass(frozen=True)
class InverseCheck:
    """Residual norms (max-abs) of the block identities of the constrained inverse."""

    symmetry: float
    kernel: float  # ||Theta 1||
    identity: float  # ||Theta H + 11'/n - I||


def constrained_inverse(H: np.ndarray) -> tuple[np.ndarray, InverseCheck]:
    """Upper-left block of ``[[H, 1], [1', 0]]^{-1}``.

    For a Laplacian-type ``H`` whose kernel is exactly the ones vector, that
    block is ``(H + 11'/n)^{-1} - 11'/n`` (the pseudo-inverse of ``H``), and
    the off-diagonal blocks of the augmented inverse are ``1/n``.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    if H.shape != (n, n):
        raise ValueError("H must be square")
    ones = np.full((n, n), 1.0 / n)
    try:
        factor = linalg.cho_factor(H + ones, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularSystem("augmented system is singular; is the graph connected?") from exc
    theta11 = linalg.cho_solve(factor, np.eye(n)) - ones
    theta11 = 0.5 * (theta11 + theta11.T)

    check = InverseCheck(
        symmetry=float(np.max(np.abs(theta11 - theta11.T))),
        kernel=float(np.max(np.abs(theta11.sum(axis=1)))),
        identity=float(np.max(np.abs(theta11 @ H + ones - np.eye(n)))),
    )
    if not np.isfinite(check.identity) or check.identity > IDENTITY_TOL:
        raise SingularSystem(
            f"block-inverse identity fails (residual {check.identity:.2e}); "
            "the Hessian likely has extra kernel directions"
        )
    return theta11, check


def augmented_inverse(H: np.ndarray) -> np.ndarray:
    """Dense inverse of the full ``(n+1) x (n+1)`` augmented matrix.

    Reference route for checking :func:`constrained_inverse`.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = H
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    try:
        return linalg.inv(A)
    except linalg.LinAlgError as exc:
        raise SingularSystem("augmented system is singular") from exc


@dataclass(frozen=True)
class DebiasResult:
    """Debiased scores with the constrained-inverse block and per-item standard errors."""

    theta_hat: ScoreVector
    theta_debiased: ScoreVector
    theta11: np.ndarray = field(repr=False)
    se: np.ndarray
    lambda_dual: float
    n: int
    p_hat: float
    L: int
    lambda0: float | None = None
    check: InverseCheck | None = None

    def __post_init__(self):
        T = np.asarray(self.theta11)
        if np.max(np.abs(T - T.T)) > SYMMETRY_TOL:
            raise ValueError("theta11 is not symmetric")
        if np.max(np.abs(T.sum(axis=1))) > KERNEL_TOL:
            raise ValueError("theta11 does not annihilate the ones vector")
        if abs(float(np.sum(self.theta_debiased.values))) > 1e-8:
            raise ValueError("debiased scores do not sum to zero")
        if abs(self.lambda_dual) > DUAL_TOL:
            raise ValueError(f"Lagrange multiplier {self.lambda_dual:.3e} is not ~0")
        for name in ("theta11", "se"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def scale_np(self) -> float:
        """``n * p_hat``, the factor in the bootstrap and top-K scaling."""
        return self.n * self.p_hat

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "L": self.L,
            "p_hat": self.p_hat,
            "lambda0": self.lambda0,
            "theta_hat": self.theta_hat.values.tolist(),
            "theta_debiased": self.theta_debiased.values.tolist(),
            "se": self.se.tolist(),
        }


def debias(
    theta_hat: ScoresLike, data: ComparisonDataset, lambda0: float | None = None
) -> DebiasResult:
    """One-step Lagrangian correction ``theta_d = theta_hat - Theta11 grad L(theta_hat)``.

    The constraint term ``-(1/n) 1 1' theta_hat`` is included too; it vanishes
    when ``theta_hat`` already sums to zero.
    """
    t = as_array(theta_hat)
    n = data.n
    if t.size != n:
        raise ValueError("score vector length does not match dataset")
    g = gradient(t, data)
    H = hessian(t, data)
    theta11, check = constrained_inverse(H)
    td = t - theta11 @ g - t.mean()
    # 1' theta11 = 0, so only round-off can leave a residual sum
    td = td - td.mean()
    lambda_dual = -float(g.sum()) / n
    se = np.sqrt(np.clip(np.diag(theta11), 0.0, None) / data.L)
    return DebiasResult(
        theta_hat=ScoreVector(t),
        theta_debiased=ScoreVector(td, identified=True),
        theta11=theta11,
        se=se,
        lambda_dual=lambda_dual,
        n=n,
        p_hat=data.graph.density,
        L=data.L,
        lambda0=lambda0,
        check=check,
    )


def pairwise_variance(result: DebiasResult, i: int, j: int) -> float:
    """``(e_i - e_j)' Theta11 (e_i - e_j) / L``."""
    n = result.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"item index out of range for n={n}")
    if i == j:
        raise ValueError("pairwise variance needs i != j")
    T = result.theta11
    return float((T[i, i] + T[j, j] - 2.0 * T[i, j]) / result.L)
