"""Metrics, dataset splitting, and the experiment drivers.

Covers the correlation metrics used throughout the pipeline, classification
reporting for the 5-bin task, seeded train/test splitting and ten-fold cross
validation, feature-group ablation, principal-component feature ranking, and
cross-genre transfer evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .bins import BIN_ORDER, ComplexityBin

__all__ = [
    "pearson",
    "spearman",
    "average_ranks",
    "ClassMetrics",
    "MetricReport",
    "classification_report",
    "SplitSpec",
    "split",
    "k_fold_indices",
    "AblationResult",
    "ablate",
    "standard_ablation_sets",
    "PrincipalComponent",
    "rank_features",
    "cross_genre",
]


# ---------------------------------------------------------------------------
# Correlation metrics
# ---------------------------------------------------------------------------

def pearson(a: Sequence[float], b: Sequence[float]) -> float | None:
    """Product-moment correlation; None when either side has zero variance."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.size < 2:
        raise ValueError("pearson requires at least 2 points")
    # All-equal detection, not a float-epsilon test: a shifted constant vector
    # must stay undefined even when its computed variance is cancellation noise.
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt((xc * xc).sum()))
    sy = float(np.sqrt((yc * yc).sum()))
    if sx == 0.0 or sy == 0.0:
        return None
    r = float((xc * yc).sum() / (sx * sy))
    return max(-1.0, min(1.0, r))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=float)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        # positions i..j (0-based) share the average rank
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(a: Sequence[float], b: Sequence[float]) -> float | None:
    """Rank correlation: Pearson over tie-corrected average ranks."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    return pearson(average_ranks(x), average_ranks(y))


# ---------------------------------------------------------------------------
# Classification reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricReport:
    pearson: float | None
    spearman: float | None
    mae: float
    weighted_f1: float
    per_class: Mapping[ComplexityBin, ClassMetrics]
    n: int


def classification_report(
    gold_bins: Sequence[ComplexityBin],
    pred_bins: Sequence[ComplexityBin],
    *,
    gold_scores: Sequence[float] | None = None,
    pred_scores: Sequence[float] | None = None,
) -> MetricReport:
    """Per-class precision/recall/F1 plus weighted F1 and MAE for the 5 bins.

    MAE is |pred - gold| over the continuous scores when both are supplied,
    otherwise bin ordinal distance divided by 4 (so adjacent bins cost 0.25).
    Bin midpoints are deliberately not used. Empty denominators follow the
    0-convention; classes with zero gold support carry zero weight.
    """
    gold = list(gold_bins)
    pred = list(pred_bins)
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} vs {len(pred)}")
    if not gold:
        raise ValueError("empty input")

    n = len(gold)
    per_class: dict[ComplexityBin, ClassMetrics] = {}
    weighted_f1 = 0.0
    for cls in BIN_ORDER:
        tp = sum(1 for g, p in zip(gold, pred) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(gold, pred) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(gold, pred) if g == cls and p != cls)
        support = tp + fn
        precision = tp / (tp + fp) if (tp + fp) else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        per_class[cls] = ClassMetrics(precision, recall, f1, support)
        weighted_f1 += support / n * f1

    if gold_scores is not None and pred_scores is not None:
        gs = np.asarray(gold_scores, dtype=float)
        ps = np.asarray(pred_scores, dtype=float)
        if gs.size != n or ps.size != n:
            raise ValueError("score arrays must match bin arrays in length")
        mae = float(np.abs(ps - gs).mean())
        r = pearson(gs, ps) if n >= 3 else None
        rho = spearman(gs, ps) if n >= 3 else None
    else:
        ordinal_dist = np.array([abs(g.ordinal - p.ordinal) for g, p in zip(gold, pred)], dtype=float)
        mae = float(ordinal_dist.mean()) / 4.0
        gold_ord = [g.ordinal for g in gold]
        pred_ord = [p.ordinal for p in pred]
        r = pearson(gold_ord, pred_ord) if n >= 3 else None
        rho = spearman(gold_ord, pred_ord) if n >= 3 else None

    return MetricReport(pearson=r, spearman=rho, mae=mae, weighted_f1=weighted_f1, per_class=per_class, n=n)


# ---------------------------------------------------------------------------
# Splitting and cross validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int
    stratify_by: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def split(items: Sequence, spec: SplitSpec, stratify_key: Callable | None = None):
    """Seeded shuffle-and-cut; stratification preserves group sizes within 1.

    `stratify_key` overrides `spec.stratify_by`; the latter is looked up as an
    attribute (falling back to mapping access) on each item.
    """
    n = len(items)
    if n < 10:
        raise ValueError("split requires at least 10 instances")

    if stratify_key is None and spec.stratify_by is not None:
        name = spec.stratify_by

        def stratify_key(item, _name=name):
            if hasattr(item, _name):
                return getattr(item, _name)
            return item[_name]

    rng = np.random.default_rng(spec.seed)
    n_train = int(round(spec.train_fraction * n))

    if stratify_key is None:
        order = rng.permutation(n)
        train_idx = set(order[:n_train].tolist())
        train = [items[i] for i in range(n) if i in train_idx]
        test = [items[i] for i in range(n) if i not in train_idx]
        return train, test

    groups: dict[object, list[int]] = {}
    for i, item in enumerate(items):
        groups.setdefault(stratify_key(item), []).append(i)

    # Largest-remainder allocation of the train quota across groups.
    keys = sorted(groups, key=str)
    quotas = {k: spec.train_fraction * len(groups[k]) for k in keys}
    base = {k: int(quotas[k]) for k in keys}
    leftover = n_train - sum(base.values())
    by_remainder = sorted(keys, key=lambda k: (-(quotas[k] - base[k]), str(k)))
    for k in by_remainder[: max(leftover, 0)]:
        base[k] += 1

    train_set: set[int] = set()
    for k in keys:
        idx = np.array(groups[k])
        rng.shuffle(idx)
        train_set.update(idx[: base[k]].tolist())
    train = [items[i] for i in range(n) if i in train_set]
    test = [items[i] for i in range(n) if i not in train_set]
    return train, test


def k_fold_indices(
    n: int,
    k: int = 10,
    seed: int = 0,
    strata: Sequence | None = None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint, covering, seed-deterministic folds; optionally stratified.

    Returns (train_indices, test_indices) per fold. With `strata`, indices of
    each stratum are shuffled and dealt round-robin so every fold sees every
    class that has at least k members.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} instances")

    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    if strata is None:
        order = rng.permutation(n)
        fold_of[order] = np.arange(n) % k
    else:
        if len(strata) != n:
            raise ValueError("strata length must equal n")
        groups: dict[object, list[int]] = {}
        for i, s in enumerate(strata):
            groups.setdefault(s, []).append(i)
        position = 0
        for key in sorted(groups, key=str):
            idx = np.array(groups[key])
            rng.shuffle(idx)
            for j, i in enumerate(idx.tolist()):
                fold_of[i] = (position + j) % k
            position += len(idx)

    folds = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        folds.append((train, test))
    return folds


# ---------------------------------------------------------------------------
# Feature-group ablation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AblationResult:
    group: str
    mae: float
    baseline_mae: float

    @property
    def delta_mae(self) -> float:
        return self.mae - self.baseline_mae


def standard_ablation_sets(group_ids: Iterable[str]) -> list[tuple[str, frozenset[str]]]:
    """The standard ablation rows: single groups, the E,F,G and H,I,J pairs,
    the combined linguistic block A-S, T alone, and "All but C"."""
    ids = list(group_ids)
    known = set(ids)
    rows: list[tuple[str, frozenset[str]]] = []
    grouped = {"E": "E,F,G", "F": "E,F,G", "G": "E,F,G", "H": "H,I,J", "I": "H,I,J", "J": "H,I,J"}
    for g in ids:
        if g in ("T", "MRCPRES") or g in grouped:
            continue
        rows.append((g, frozenset({g})))
    if {"E", "F", "G"} <= known:
        rows.append(("E,F,G", frozenset({"E", "F", "G"})))
    if {"H", "I", "J"} <= known:
        rows.append(("H,I,J", frozenset({"H", "I", "J"})))
    linguistic = frozenset(g for g in ids if g not in ("T", "MRCPRES"))
    rows.append(("Linguistic features (A-S)", linguistic))
    if "T" in known:
        rows.append(("T", frozenset({"T"})))
    rows.append(("All but C", frozenset(g for g in ids if g != "C")))
    return rows


def ablate(
    X: np.ndarray,
    y: np.ndarray,
    group_columns: Mapping[str, Sequence[int]],
    groups: Sequence[tuple[str, frozenset[str]]],
    trainer: Callable[[np.ndarray, np.ndarray], Callable[[np.ndarray], np.ndarray]],
    mae_fn: Callable[[np.ndarray, np.ndarray], float],
    *,
    n_folds: int = 10,
    seed: int = 0,
    strata: Sequence | None = None,
) -> list[AblationResult]:
    """Cross-validated delta-MAE for each ablation set.

    Each set's columns are removed (not zeroed) before training; all cells use
    identical folds, so the empty set reproduces the baseline exactly and its
    delta is 0 by construction. Unknown group ids raise ValueError.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    folds = k_fold_indices(X.shape[0], k=n_folds, seed=seed, strata=strata)

    def cv_mae(columns: np.ndarray) -> float:
        pred = np.empty(X.shape[0], dtype=float)
        for train_idx, test_idx in folds:
            predictor = trainer(X[np.ix_(train_idx, columns)], y[train_idx])
            pred[test_idx] = predictor(X[np.ix_(test_idx, columns)])
        return mae_fn(y, pred)

    all_columns = np.arange(X.shape[1])
    baseline = cv_mae(all_columns)

    results = []
    for name, removed_groups in groups:
        removed: set[int] = set()
        for g in removed_groups:
            if g not in group_columns:
                raise ValueError(f"unknown feature group {g!r}")
            removed.update(int(c) for c in group_columns[g])
        kept = np.array([c for c in all_columns if c not in removed])
        if kept.size == 0:
            raise ValueError(f"ablation set {name!r} removes every column")
        mae = baseline if not removed_groups else cv_mae(kept)
        results.append(AblationResult(group=name, mae=mae, baseline_mae=baseline))
    return results


# ---------------------------------------------------------------------------
# Principal-component feature ranking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrincipalComponent:
    index: int
    eigenvalue: float
    loadings: np.ndarray
    top_groups: tuple[str, ...]


def rank_features(
    X: np.ndarray,
    column_groups: Sequence[str] | None = None,
    *,
    n_components: int = 10,
    tol: float = 1e-9,
    max_iter: int = 20000,
    top_k_columns: int = 10,
) -> list[PrincipalComponent]:
    """Principal components of the standardized matrix via power iteration.

    Components are extracted one at a time (power iteration to `tol`, then
    Gram-Schmidt deflation), so they come out ordered by explained variance.
    `column_groups` names the feature group of each column; each component
    reports the distinct groups among its `top_k_columns` highest-|loading|
    columns, in loading order.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("rank_features requires a 2-D matrix with at least 2 rows")
    if column_groups is not None and len(column_groups) != X.shape[1]:
        raise ValueError("column_groups length must match the number of columns")

    mean = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1)
    if not np.any(scale > 0):
        raise ValueError("feature matrix has zero variance everywhere")
    safe_scale = np.where(scale > 0, scale, 1.0)
    Z = (X - mean) / safe_scale

    cov = Z.T @ Z / (X.shape[0] - 1)
    d = cov.shape[0]
    n_components = min(n_components, d)

    rng = np.random.default_rng(1729)
    basis: list[np.ndarray] = []
    components: list[PrincipalComponent] = []
    for comp_idx in range(n_components):
        v = rng.standard_normal(d)
        for u in basis:
            v -= (v @ u) * u
        norm = np.linalg.norm(v)
        if norm == 0.0:
            break
        v /= norm
        for _ in range(max_iter):
            w = cov @ v
            for u in basis:
                w -= (w @ u) * u
            norm = np.linalg.norm(w)
            if norm < tol:
                # Remaining spectrum is numerically zero.
                w = v
                break
            w /= norm
            if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
                v = w
                break
            v = w
        eigenvalue = float(v @ cov @ v)
        basis.append(v.copy())
        cov = cov - eigenvalue * np.outer(v, v)

        if column_groups is not None:
            order = np.argsort(-np.abs(v), kind="stable")
            seen: list[str] = []
            for c in order[:top_k_columns]:
                g = column_groups[c]
                if g not in seen:
                    seen.append(g)
            top = tuple(seen)
        else:
            top = tuple()
        components.append(
            PrincipalComponent(index=comp_idx, eigenvalue=eigenvalue, loadings=v.copy(), top_groups=top)
        )
    return components


# ---------------------------------------------------------------------------
# Cross-genre transfer
# ---------------------------------------------------------------------------

def cross_genre(
    X: np.ndarray,
    y: np.ndarray,
    genres: Sequence[str],
    train_genres: Iterable[str],
    test_genre: str,
    trainer: Callable[[np.ndarray, np.ndarray], Callable[[np.ndarray], np.ndarray]],
) -> float | None:
    """Train on the named genres, evaluate Pearson's r on the held-out genre."""
    train_genres = set(train_genres)
    if test_genre in train_genres:
        raise ValueError(f"test genre {test_genre!r} must not appear in the training genres")
    genres = np.asarray(genres)
    train_mask = np.isin(genres, sorted(train_genres))
    test_mask = genres == test_genre
    if not train_mask.any():
        raise ValueError(f"no instances for training genres {sorted(train_genres)}")
    if not test_mask.any():
        raise ValueError(f"no instances for test genre {test_genre!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    predictor = trainer(X[train_mask], y[train_mask])
    return pearson(y[test_mask], predictor(X[test_mask]))
