"""Rating tables to pairwise comparisons, and CSV input/output."""
from __future__ import annotations

import csv
import warnings
from collections import defaultdict
from typing import Iterable, Mapping

import numpy as np

from . import rng
from .errors import DisconnectedGraph, InsufficientUsers
from .estimate import check_connected
from .model import ComparisonDataset, ComparisonGraph
from .simulate import generate_graph

RATINGS_HEADER = ["user", "item", "rating"]
COMPARISONS_HEADER = ["i", "j", "rep", "outcome"]


def _rating_matrix(ratings, n_items: int) -> np.ndarray:
    """Dense users x items matrix, NaN where a user did not rate an item."""
    table = np.asarray(ratings, dtype=float).reshape(-1, 3)
    if table.size and not np.all(np.isfinite(table)):
        raise ValueError("ratings must be finite")
    items = table[:, 1].astype(np.int64)
    if np.any(items != table[:, 1]) or (items.size and (items.min() < 0 or items.max() >= n_items)):
        raise ValueError(f"item ids must be integers in [0, {n_items})")
    _, users = np.unique(table[:, 0], return_inverse=True)
    users = users.ravel()
    mat = np.full((users.max() + 1 if users.size else 0, n_items), np.nan)
    if np.unique(users * n_items + items).size != items.size:
        raise ValueError("duplicate (user, item) rating")
    mat[users, items] = table[:, 2]
    return mat


def ratings_to_comparisons(
    ratings, n_items: int, p: float, L: int, seed: rng.SeedLike
) -> ComparisonDataset:
    """Comparisons from a ``(user, item, rating)`` table.

    An Erdos-Renyi graph is drawn on the items. Each edge ``(i, j)`` gets
    ``L`` distinct users who rated both items differently, sampled from
    stream ``(seed, INGEST, e)`` with ``e`` the edge's position in the drawn
    graph. Outcome is 1 when the user rated ``j`` above ``i``. Edges with too
    few co-raters are dropped with an :class:`InsufficientUsers` warning.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    mat = _rating_matrix(ratings, n_items)
    graph = generate_graph(n_items, p, seed)
    keep, rows, dropped = [], [], []
    for e, (i, j) in enumerate(graph.edges):
        ri, rj = mat[:, i], mat[:, j]
        co = np.nonzero(~np.isnan(ri) & ~np.isnan(rj) & (ri != rj))[0]
        if co.size < L:
            dropped.append((i, j))
            continue
        users = rng.stream(seed, rng.INGEST, e).choice(co, size=L, replace=False)
        keep.append(e)
        rows.append((rj[users] > ri[users]).astype(np.int8))
    if dropped:
        warnings.warn(InsufficientUsers(dropped, L), stacklevel=2)
    kept = np.array(keep, dtype=np.int64)
    sub = ComparisonGraph(n_items, graph.I[kept], graph.J[kept], p_known=graph.p_known)
    if not check_connected(sub):
        raise DisconnectedGraph("comparison graph is disconnected after dropping edges")
    Y = np.array(rows, dtype=np.int8).reshape(len(rows), L)
    return ComparisonDataset(sub, Y)


def equalize_replicates(
    raw: Mapping[tuple[int, int], Iterable[int]], seed: rng.SeedLike, n: int | None = None
) -> ComparisonDataset:
    """Subsample every edge to the smallest replicate count.

    ``raw`` maps ``(i, j)`` with ``i < j`` to that edge's outcomes. Edge ``e``
    (lexicographic position) keeps a without-replacement sample drawn from
    stream ``(seed, EQUALIZE, e)``, in original order. Edges already at the
    minimum count are left untouched.
    """
    if not raw:
        raise ValueError("no edges")
    keys = sorted((int(a), int(b)) for a, b in raw)
    lists = [np.asarray(list(raw[k]), dtype=np.int64) for k in keys]
    if any(x.size == 0 for x in lists):
        raise ValueError("every edge needs at least one outcome")
    L = min(x.size for x in lists)
    out = np.empty((len(keys), L), dtype=np.int8)
    for e, x in enumerate(lists):
        if x.size > L:
            idx = np.sort(rng.stream(seed, rng.EQUALIZE, e).choice(x.size, size=L, replace=False))
            x = x[idx]
        out[e] = x
    if n is None:
        n = max(b for _, b in keys) + 1
    I, J = (np.array(c) for c in zip(*keys))
    return ComparisonDataset(ComparisonGraph(n, I, J), out)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _check_header(reader, expected, path):
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != expected:
        raise ValueError(f"{path}: expected header {','.join(expected)}")


def read_ratings(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        _check_header(reader, RATINGS_HEADER, path)
        rows = [(int(u), int(it), float(r)) for u, it, r in reader]
    return np.array(rows, dtype=float).reshape(-1, 3)


def read_comparison_lists(path) -> dict[tuple[int, int], list[int]]:
    """Per-edge outcome lists from a comparisons CSV, ordered by ``rep``."""
    edges = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        _check_header(reader, COMPARISONS_HEADER, path)
        for line, (i, j, rep, y) in enumerate(reader, start=2):
            i, j, rep, y = int(i), int(j), int(rep), int(y)
            if not 0 <= i < j:
                raise ValueError(f"{path}:{line}: need 0 <= i < j")
            if y not in (0, 1):
                raise ValueError(f"{path}:{line}: outcome must be 0 or 1")
            edges[(i, j)].append((rep, y))
    out = {}
    for key, reps in edges.items():
        reps.sort()
        if len({r for r, _ in reps}) != len(reps):
            raise ValueError(f"{path}: duplicate replicate on edge {key}")
        out[key] = [y for _, y in reps]
    return out


def read_comparisons(path, n: int | None = None) -> ComparisonDataset:
    """Load a comparisons CSV; every edge must carry the same number of replicates.

    ``n`` defaults to the largest item id plus one.
    """
    lists = read_comparison_lists(path)
    if not lists:
        raise ValueError(f"{path}: no comparisons")
    lengths = {len(v) for v in lists.values()}
    if len(lengths) != 1:
        raise ValueError(
            f"{path}: edges carry different replicate counts {sorted(lengths)}; "
            "equalize them with `rankinfer ingest --comparisons`"
        )
    keys = sorted(lists)
    top = max(b for _, b in keys) + 1
    if n is None:
        n = top
    elif n < top:
        raise ValueError(f"n={n} is smaller than the largest item id + 1 ({top})")
    I, J = (np.array(c) for c in zip(*keys))
    Y = np.array([lists[k] for k in keys], dtype=np.int8)
    return ComparisonDataset(ComparisonGraph(n, I, J), Y)


def write_comparisons(path, data: ComparisonDataset) -> None:
    g = data.graph
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARISONS_HEADER)
        for e, (i, j) in enumerate(g.edges):
            for rep, y in enumerate(data.outcomes[e].tolist()):
                w.writerow((i, j, rep, y))
