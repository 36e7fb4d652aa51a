"""Glue between corpora, features, models, and metrics.

These drivers implement the standard experiments end to end: continuous
prediction over seeded 90/10 splits, cross-genre transfer, categorical
cross-validated classification, and the length+frequency fallback featureset
used when the full resource set is not installed.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Mapping, Sequence

import numpy as np

from .bins import BIN_ORDER, ComplexityBin, bin_complexity
from .corpus import InstanceRow
from .datasets import ScoredInstance
from .evaluate import (
    MetricReport,
    SplitSpec,
    classification_report,
    k_fold_indices,
    pearson,
    split,
)
from .features import FeatureLayout, featurize_mwe, featurize_word
from .models import ForestParams, train_forest, train_regression
from .resources import EmbeddingTable, Lexicon

__all__ = [
    "build_feature_matrix",
    "length_frequency_matrix",
    "regression_trainer",
    "forest_trainer",
    "mae_ordinal",
    "continuous_experiment",
    "genre_transfer_table",
    "categorical_cv_report",
    "majority_baseline_report",
]


def build_feature_matrix(
    rows: Sequence[InstanceRow | ScoredInstance],
    lexicon: Lexicon,
    embeddings: EmbeddingTable | None = None,
    freq_table: Mapping[str, int] | None = None,
) -> tuple[list[str], np.ndarray, FeatureLayout]:
    """Featurize a mixed batch of single-word and MWE targets."""
    layout = FeatureLayout(embedding_dim=embeddings.dimension if embeddings else 300)
    ids: list[str] = []
    vectors: list[np.ndarray] = []
    for row in rows:
        word = row.surface if isinstance(row, InstanceRow) else row.token
        if row.is_mwe:
            fv = featurize_mwe(_AsTarget(word, True), lexicon, embeddings, freq_table, layout)
        else:
            fv = featurize_word(word, lexicon, embeddings, freq_table, layout)
        ids.append(row.id)
        vectors.append(fv.values)
    X = np.stack(vectors) if vectors else np.empty((0, layout.total))
    return ids, X, layout


class _AsTarget:
    """Minimal target wrapper so plain words can flow through featurize_mwe."""

    def __init__(self, surface: str, is_mwe: bool):
        self.surface = surface
        self.is_mwe = is_mwe


def length_frequency_matrix(
    instances: Sequence[ScoredInstance],
    freq_table: Mapping[str, int] | None = None,
) -> np.ndarray:
    """Two-column fallback features: normalized length and log frequency.

    Without an external frequency table, token frequencies are estimated from
    the instances' own sentence contexts, which is self-contained but cruder.
    MWE rows use the mean of the constituents for both columns.
    """
    if freq_table is None:
        counts: Counter[str] = Counter()
        seen_sentences: set[str] = set()
        for inst in instances:
            if inst.sentence in seen_sentences:
                continue
            seen_sentences.add(inst.sentence)
            counts.update(w.casefold().strip(".,;:!?()\"'") for w in inst.sentence.split())
        freq_table = counts

    def word_features(word: str) -> tuple[float, float]:
        return (
            min(len(word) / 50.0, 1.0),
            math.log1p(freq_table.get(word.casefold(), 0)),
        )

    rows = []
    for inst in instances:
        parts = inst.token.split()
        feats = [word_features(p) for p in parts]
        rows.append([sum(f[0] for f in feats) / len(feats), sum(f[1] for f in feats) / len(feats)])
    return np.array(rows)


# ---------------------------------------------------------------------------
# Trainer adapters (shared by ablation and cross-genre drivers)
# ---------------------------------------------------------------------------

def regression_trainer(ridge_lambda: float = 1e-6):
    """Trainer producing raw continuous predictions."""

    def train(X: np.ndarray, y: np.ndarray):
        model = train_regression(X, y, ridge_lambda=ridge_lambda)
        return model.predict

    return train


def forest_trainer(params: ForestParams | None = None, seed: int = 0, threads: int = 1):
    """Trainer over bin ordinals producing ordinal predictions."""
    params = params or ForestParams()

    def train(X: np.ndarray, y_ord: np.ndarray):
        bins = [BIN_ORDER[int(o)] for o in y_ord]
        model = train_forest(X, bins, params, seed=seed, threads=threads)
        return model.predict_ordinals

    return train


def mae_ordinal(gold_ord: np.ndarray, pred_ord: np.ndarray) -> float:
    """Bin-ordinal MAE scaled onto [0, 1] (adjacent bins differ by 0.25)."""
    return float(np.abs(np.asarray(pred_ord) - np.asarray(gold_ord)).mean()) / 4.0


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def continuous_experiment(
    X: np.ndarray,
    y: np.ndarray,
    seeds: Sequence[int],
    train_fraction: float = 0.9,
    ridge_lambda: float = 1e-6,
) -> dict:
    """Pearson r of a linear model over seeded train/test splits."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    indices = list(range(X.shape[0]))
    rs = []
    for seed in seeds:
        train_idx, test_idx = split(indices, SplitSpec(train_fraction=train_fraction, seed=seed))
        model = train_regression(X[train_idx], y[train_idx], ridge_lambda=ridge_lambda)
        r = pearson(y[test_idx], model.predict(X[test_idx]))
        rs.append(r if r is not None else float("nan"))
    arr = np.array(rs, dtype=float)
    return {
        "per_seed": dict(zip([int(s) for s in seeds], [float(v) for v in arr])),
        "mean": float(np.nanmean(arr)),
        "stdev": float(np.nanstd(arr)),
    }


def genre_transfer_table(
    X: np.ndarray,
    y: np.ndarray,
    genres: Sequence[str],
    ridge_lambda: float = 1e-6,
) -> list[dict]:
    """Single-genre and paired-genre training against each held-out genre."""
    from .evaluate import cross_genre

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    all_genres = sorted(set(genres))
    trainer = regression_trainer(ridge_lambda)
    rows = []
    for test in all_genres:
        others = [g for g in all_genres if g != test]
        for train_set in [[g] for g in others] + [others]:
            r = cross_genre(X, y, genres, train_set, test, trainer)
            rows.append({"train": "+".join(train_set), "test": test, "pearson": r})
    return rows


def categorical_cv_report(
    X: np.ndarray,
    scores: np.ndarray,
    params: ForestParams | None = None,
    seed: int = 0,
    folds: int = 10,
    threads: int = 1,
) -> MetricReport:
    """Cross-validated 5-bin classification of binned continuous scores."""
    X = np.asarray(X, dtype=float)
    gold_bins = [bin_complexity(float(s)) for s in np.asarray(scores, dtype=float)]
    gold_ord = np.array([b.ordinal for b in gold_bins])
    pred_ord = np.empty(len(gold_bins), dtype=int)
    for train_idx, test_idx in k_fold_indices(X.shape[0], k=folds, seed=seed, strata=gold_ord):
        model = train_forest(
            X[train_idx],
            [gold_bins[i] for i in train_idx],
            params or ForestParams(),
            seed=seed,
            threads=threads,
        )
        pred_ord[test_idx] = model.predict_ordinals(X[test_idx]).astype(int)
    pred_bins = [BIN_ORDER[o] for o in pred_ord]
    return classification_report(gold_bins, pred_bins)


def majority_baseline_report(gold_bins: Sequence[ComplexityBin]) -> MetricReport:
    """Scores of always predicting the most frequent gold bin."""
    counts = Counter(gold_bins)
    majority = max(counts.items(), key=lambda kv: (kv[1], -kv[0].ordinal))[0]
    return classification_report(list(gold_bins), [majority] * len(gold_bins))
