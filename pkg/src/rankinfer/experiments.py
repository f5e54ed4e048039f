"""Monte Carlo replications of the simulation studies, emitted as long-format rows.

Each experiment is a grid of settings (one per ``L`` and ``delta`` pair) times
``reps`` replications. Replication ``r`` of setting ``s`` is seeded with
``(seed, s, r)``, so the rows do not depend on how work is split across
worker processes.
"""
from __future__ import annotations

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from threadpoolctl import threadpool_limits

from . import rng
from .debias import debias
from .errors import RankInferError
from .estimate import MleConfig, solve_mle
from .inference import select_topk_fdr_by, test_pairwise, test_topk
from .simulate import simulate_dataset, uniform_scores

KINDS = ("typeI-pair", "power-pair", "typeI-topk", "power-topk", "fdr", "normality", "consistency")
CSV_HEADER = ["setting", "rep", "metric", "value"]

# high and low score levels of the simulation designs
TOP = 10.0
REST = 7.5
FDR_REST = 6.5
FDR_NULL_EXTRA = 10


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    reps: int = 100
    n: int = 100
    p: float = 0.2
    L_grid: tuple = (200,)
    delta_grid: tuple | None = None
    seed: int = 0
    alpha: float = 0.05
    B: int = 2000
    K: int = 30
    c_lambda: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        if not self.L_grid or min(self.L_grid) < 1:
            raise ValueError("L grid must hold positive integers")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if self.kind.endswith("topk") or self.kind == "fdr":
            extra = FDR_NULL_EXTRA if self.kind == "fdr" and self.delta_grid is None else 1
            if self.K < 1 or self.K + extra >= self.n:
                raise ValueError(f"K={self.K} does not fit the design with n={self.n}")
        if self.delta_grid is not None and min(self.delta_grid) < 0:
            raise ValueError("deltas must be non-negative")

    def settings(self) -> list[tuple[int, float | None]]:
        if self.kind in ("typeI-pair", "typeI-topk"):
            deltas = (0.0,)
        elif self.kind in ("power-pair", "power-topk"):
            deltas = self.delta_grid if self.delta_grid is not None else (0.0, 0.5, 1.0, 1.5)
        elif self.kind == "fdr":
            deltas = self.delta_grid if self.delta_grid is not None else (None,)
        else:
            deltas = (None,)
        return [(int(L), d) for L, d in itertools.product(self.L_grid, deltas)]


def setting_label(L: int, delta: float | None) -> str:
    return f"L={L}" if delta is None else f"L={L}|delta={delta!r}"


def design_scores(cfg: ExperimentConfig, delta: float | None, setting_idx: int) -> np.ndarray:
    """True scores for one setting (before centering)."""
    n, K = cfg.n, cfg.K
    kind = cfg.kind
    if kind.endswith("pair"):
        v = np.full(n, REST)
        v[0], v[1] = TOP, TOP - delta
        return v
    if kind == "typeI-topk":
        return np.concatenate([np.full(K + 1, TOP), np.full(n - K - 1, REST)])
    if kind == "power-topk":
        return np.concatenate([np.full(K, TOP), [TOP - delta], np.full(n - K - 1, REST)])
    if kind == "fdr":
        if delta is None:
            top = K + FDR_NULL_EXTRA
            return np.concatenate([np.full(top, TOP), np.full(n - top, FDR_REST)])
        return np.concatenate([np.full(K, TOP), [TOP - delta], np.full(n - K - 1, FDR_REST)])
    # normality / consistency: uniform scores, fixed per setting
    return uniform_scores(n, 8.0, 10.0, (cfg.seed, setting_idx)).values


def _fit(theta, cfg, L, seed):
    data = simulate_dataset(theta, cfg.p, L, seed)
    mle_cfg = MleConfig() if cfg.c_lambda is None else MleConfig(c_lambda=cfg.c_lambda)
    fit = solve_mle(data, mle_cfg)
    return data, fit


def run_replication(cfg: ExperimentConfig, setting_idx: int, rep: int) -> list[tuple[str, float]]:
    """Metrics for one replication; a failed fit yields a single ``failed`` row."""
    L, delta = cfg.settings()[setting_idx]
    theta = design_scores(cfg, delta, setting_idx)
    theta = theta - theta.mean()
    seed = rng.derive_seed(cfg.seed, setting_idx, rep)
    try:
        data, fit = _fit(theta, cfg, L, seed)
        if cfg.kind == "consistency":
            return [("linf_error", float(np.max(np.abs(fit.theta.values - theta))))]
        res = debias(fit.theta, data, fit.lambda0)
        kind = cfg.kind
        if kind.endswith("pair"):
            rep_ = test_pairwise(res, 0, 1, cfg.alpha)
            return [("reject", float(rep_.reject)), ("z", rep_.statistic), ("p_value", rep_.p_value)]
        if kind.endswith("topk"):
            item = cfg.K if kind == "typeI-topk" else cfg.K - 1
            rep_ = test_topk(res, data, item, cfg.K, cfg.alpha, cfg.B, seed)
            return [
                ("reject", float(rep_.reject)),
                ("statistic", rep_.statistic),
                ("threshold", rep_.threshold),
                ("p_value", rep_.p_value),
            ]
        if kind == "fdr":
            sel = select_topk_fdr_by(res, data, cfg.K, cfg.alpha, cfg.B, seed)
            # an item truly has the property only if it is strictly above the (K+1)-th score
            cut = np.sort(theta)[::-1][cfg.K]
            truth = theta > cut
            chosen = np.zeros(cfg.n, dtype=bool)
            chosen[list(sel.selected)] = True
            n_sel = int(chosen.sum())
            rows = [
                ("fdp", float(np.sum(chosen & ~truth)) / max(n_sel, 1)),
                ("n_selected", float(n_sel)),
            ]
            if truth.any():
                rows.append(("tpr", float(np.sum(chosen & truth)) / float(truth.sum())))
            return rows
        # normality: standardized debiased first coordinate
        z = (res.theta_debiased.values[0] - theta[0]) / res.se[0]
        return [("z", float(z))]
    except RankInferError:
        return [("failed", 1.0)]


def _init_worker():
    threadpool_limits(1)


def _task(args):
    cfg, s, r = args
    return run_replication(cfg, s, r)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[tuple[str, int, str, float]]:
    """All rows ``(setting, rep, metric, value)`` in setting-major, rep-minor order."""
    settings = cfg.settings()
    tasks = [(cfg, s, r) for s in range(len(settings)) for r in range(cfg.reps)]
    with threadpool_limits(1):
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker) as pool:
                chunk = max(1, len(tasks) // (4 * threads))
                results = list(pool.map(_task, tasks, chunksize=chunk))
        else:
            results = [_task(t) for t in tasks]

    rows = []
    for (_, s, r), metrics in zip(tasks, results):
        label = setting_label(*settings[s])
        rows.extend((label, r, m, v) for m, v in metrics)
    if cfg.kind == "normality":
        rows.extend(_qq_rows(rows, settings))
    return rows


def _qq_rows(rows, settings):
    out = []
    for L, d in settings:
        label = setting_label(L, d)
        z = np.sort([v for s, _, m, v in rows if s == label and m == "z"])
        k = z.size
        theory = ndtri((np.arange(1, k + 1) - 0.5) / k)
        for idx in range(k):
            out.append((label, idx, "qq_sample", float(z[idx])))
            out.append((label, idx, "qq_theory", float(theory[idx])))
    return out


def write_rows(fh, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for setting, rep, metric, value in rows:
        w.writerow((setting, rep, metric, repr(float(value))))


def summarize(rows, metric: str) -> dict[str, float]:
    """Mean of ``metric`` per setting, ignoring NaNs."""
    acc: dict[str, list[float]] = {}
    for s, _, m, v in rows:
        if m == metric:
            acc.setdefault(s, []).append(v)
    return {s: float(np.nanmean(v)) for s, v in acc.items()}
