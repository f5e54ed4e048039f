"""Edge-wise hot loops with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and the environment variable
``RANKINFER_DISABLE_NUMBA`` is unset (or ``0``). Both paths compute the same
quantities; ``tests/test_kernels.py`` checks them against each other and
``benchmarks/bench_kernels.py`` times them.

Edge arrays follow one convention throughout: edge ``e`` joins ``I[e] < J[e]``
and an outcome of 1 means item ``J[e]`` won.
"""
from __future__ import annotations

import os

import numpy as np
from scipy import sparse
from scipy.special import expit

try:  # pragma: no cover - exercised implicitly
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("RANKINFER_DISABLE_NUMBA", "0").lower() in (
    "",
    "0",
    "false",
    "no",
)


# --------------------------------------------------------------------------
# pure numpy
# --------------------------------------------------------------------------

def loss_np(theta, I, J, ybar):
    d = theta[J] - theta[I]
    return float(np.sum(np.logaddexp(0.0, d) - ybar * d))


def gradient_np(theta, I, J, ybar, n):
    c = expit(theta[J] - theta[I]) - ybar
    return np.bincount(J, c, minlength=n) - np.bincount(I, c, minlength=n)


def hessian_np(theta, I, J, n):
    s = expit(theta[J] - theta[I])
    w = s * (1.0 - s)
    H = np.zeros((n, n))
    # edges are unique, so plain fancy assignment is safe off the diagonal
    H[I, J] = -w
    H[J, I] = -w
    H[np.diag_indices(n)] = np.bincount(I, w, minlength=n) + np.bincount(J, w, minlength=n)
    return H


def _incidence(I, J, n):
    m = len(I)
    rows = np.concatenate([np.arange(m), np.arange(m)])
    cols = np.concatenate([J, I])
    vals = np.concatenate([np.ones(m), -np.ones(m)])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(m, n))


def residuals_np(theta, I, J, Y, n):
    """Per-replicate residual vectors, shape ``(L, n)``.

    ``Y`` has shape ``(m, L)``.
    """
    s = expit(theta[J] - theta[I])
    C = s[:, None] - Y  # (m, L)
    D = _incidence(I, J, n)
    return np.asarray((D.T @ C).T)


def star_max_np(G, i):
    """``max_{j != i} G[:, j] - G[:, i]`` for every row of ``G``."""
    n = G.shape[1]
    if n < 2:
        raise ValueError("star set needs at least two items")
    if i == 0:
        best = G[:, 1:].max(axis=1)
    elif i == n - 1:
        best = G[:, :-1].max(axis=1)
    else:
        best = np.maximum(G[:, :i].max(axis=1), G[:, i + 1:].max(axis=1))
    return best - G[:, i]


def span_max_np(G):
    """``max_{i != j} G[:, j] - G[:, i]``, i.e. row max minus row min."""
    return G.max(axis=1) - G.min(axis=1)


def pairs_max_np(G, src, dst, chunk=4096):
    out = np.full(G.shape[0], -np.inf)
    for lo in range(0, len(src), chunk):
        s = src[lo:lo + chunk]
        d = dst[lo:lo + chunk]
        np.maximum(out, (G[:, d] - G[:, s]).max(axis=1), out=out)
    return out


# --------------------------------------------------------------------------
# numba
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _sigmoid(x):
        if x >= 0.0:
            return 1.0 / (1.0 + np.exp(-x))
        z = np.exp(x)
        return z / (1.0 + z)

    @njit(cache=True)
    def loss_nb(theta, I, J, ybar):
        total = 0.0
        for e in range(I.shape[0]):
            d = theta[J[e]] - theta[I[e]]
            # log(1 + e^d) without overflow
            total += max(d, 0.0) + np.log1p(np.exp(-abs(d))) - ybar[e] * d
        return total

    @njit(cache=True)
    def gradient_nb(theta, I, J, ybar, n):
        g = np.zeros(n)
        for e in range(I.shape[0]):
            c = _sigmoid(theta[J[e]] - theta[I[e]]) - ybar[e]
            g[J[e]] += c
            g[I[e]] -= c
        return g

    @njit(cache=True)
    def hessian_nb(theta, I, J, n):
        H = np.zeros((n, n))
        for e in range(I.shape[0]):
            i = I[e]
            j = J[e]
            s = _sigmoid(theta[j] - theta[i])
            w = s * (1.0 - s)
            H[i, i] += w
            H[j, j] += w
            H[i, j] -= w
            H[j, i] -= w
        return H

    @njit(cache=True)
    def residuals_nb(theta, I, J, Y, n):
        m, L = Y.shape
        R = np.zeros((L, n))
        for e in range(m):
            i = I[e]
            j = J[e]
            s = _sigmoid(theta[j] - theta[i])
            for l in range(L):
                c = s - Y[e, l]
                R[l, j] += c
                R[l, i] -= c
        return R

    @njit(cache=True)
    def star_max_nb(G, i):
        B, n = G.shape
        out = np.empty(B)
        for b in range(B):
            best = -np.inf
            for j in range(n):
                if j != i and G[b, j] > best:
                    best = G[b, j]
            out[b] = best - G[b, i]
        return out

    @njit(cache=True)
    def span_max_nb(G):
        B, n = G.shape
        out = np.empty(B)
        for b in range(B):
            lo = G[b, 0]
            hi = G[b, 0]
            for j in range(1, n):
                v = G[b, j]
                if v > hi:
                    hi = v
                elif v < lo:
                    lo = v
            out[b] = hi - lo
        return out

    @njit(cache=True)
    def pairs_max_nb(G, src, dst):
        B = G.shape[0]
        out = np.empty(B)
        for b in range(B):
            best = -np.inf
            for k in range(src.shape[0]):
                v = G[b, dst[k]] - G[b, src[k]]
                if v > best:
                    best = v
            out[b] = best
        return out


def _pick(name):
    if USE_NUMBA:
        return globals()[name + "_nb"]
    return globals()[name + "_np"]


loss = _pick("loss")
gradient = _pick("gradient")
hessian = _pick("hessian")
residuals = _pick("residuals")
star_max = _pick("star_max")
span_max = _pick("span_max")
pairs_max = _pick("pairs_max")

BACKEND = "numba" if USE_NUMBA else "numpy"
