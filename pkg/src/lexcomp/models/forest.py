"""Random forest classifier for the 5-bin categorical complexity task.

Bagged axis-aligned trees with Gini-impurity splits over a per-node uniform
random subset of candidate features. Determinism is a hard contract: every
tree draws from its own RNG stream derived from (seed, tree index), trees are
assembled in index order, and ties in the split search are broken by the
canonical (feature index, threshold) order, so any worker count produces a
byte-identical serialized model.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..bins import BIN_ORDER, ComplexityBin
from .regression import LayoutMismatchError

__all__ = ["ForestParams", "ForestModel", "train_forest"]


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    features_per_split: int | None = None  # None -> ceil(sqrt(d))
    max_depth: int | None = None  # None -> unlimited
    min_leaf: int = 1

    def resolved_features_per_split(self, n_features: int) -> int:
        k = self.features_per_split
        if k is None:
            k = math.ceil(math.sqrt(n_features))
        return max(1, min(k, n_features))


@dataclass
class ForestModel:
    trees: list[dict]
    params: ForestParams
    seed: int
    n_features: int
    layout_version: str
    classes: tuple[str, ...] = field(default_factory=lambda: tuple(b.value for b in BIN_ORDER))

    def check_layout(self, layout_version: str) -> None:
        if layout_version != self.layout_version:
            raise LayoutMismatchError(
                f"model layout {self.layout_version!r} != data layout {layout_version!r}"
            )

    def classify(self, x: Sequence[float]) -> tuple[ComplexityBin, np.ndarray]:
        """Majority vote over trees; returns (bin, vote-share vector).

        Vote ties go to the lower-complexity bin.
        """
        x = np.asarray(x, dtype=float)
        if x.size != self.n_features:
            raise LayoutMismatchError(f"expected {self.n_features} features, got {x.size}")
        votes = np.zeros(len(self.classes), dtype=float)
        for tree in self.trees:
            votes[_tree_predict(tree, x)] += 1.0
        probs = votes / votes.sum()
        winner = int(np.argmax(votes))  # argmax takes the first (lowest) index on ties
        return ComplexityBin(self.classes[winner]), probs

    def predict(self, X: np.ndarray) -> list[ComplexityBin]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return [self.classify(row)[0] for row in X]

    def predict_ordinals(self, X: np.ndarray) -> np.ndarray:
        return np.array([b.ordinal for b in self.predict(X)], dtype=float)

    def to_dict(self) -> dict:
        return {
            "kind": "random_forest",
            "layout_version": self.layout_version,
            "seed": self.seed,
            "n_features": self.n_features,
            "classes": list(self.classes),
            "params": {
                "n_trees": self.params.n_trees,
                "features_per_split": self.params.features_per_split,
                "max_depth": self.params.max_depth,
                "min_leaf": self.params.min_leaf,
            },
            "trees": self.trees,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        if d.get("kind") != "random_forest":
            raise ValueError(f"not a random forest model: kind={d.get('kind')!r}")
        p = d["params"]
        return cls(
            trees=d["trees"],
            params=ForestParams(
                n_trees=p["n_trees"],
                features_per_split=p["features_per_split"],
                max_depth=p["max_depth"],
                min_leaf=p["min_leaf"],
            ),
            seed=int(d["seed"]),
            n_features=int(d["n_features"]),
            layout_version=d["layout_version"],
            classes=tuple(d["classes"]),
        )


def train_forest(
    X: np.ndarray,
    y_bins: Sequence[ComplexityBin],
    params: ForestParams | None = None,
    seed: int = 0,
    threads: int = 1,
    layout_version: str = "unversioned",
) -> ForestModel:
    """Train bagged Gini trees; identical results for any thread count."""
    params = params or ForestParams()
    if params.n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    if params.min_leaf < 1:
        raise ValueError("min_leaf must be at least 1")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty 2-D matrix")
    y = np.array([b.ordinal for b in y_bins], dtype=np.int64)
    if y.size != X.shape[0]:
        raise ValueError(f"rows(X)={X.shape[0]} != len(y)={y.size}")
    if np.unique(y).size < 2:
        warnings.warn("training data contains a single class; the forest will be constant")

    n_classes = len(BIN_ORDER)
    k = params.resolved_features_per_split(X.shape[1])

    def build(tree_index: int) -> dict:
        rng = np.random.default_rng([seed, tree_index])
        idx = rng.integers(0, X.shape[0], size=X.shape[0])
        return _build_tree(X, y, idx, n_classes, k, params.max_depth, params.min_leaf, rng)

    if threads <= 1:
        trees = [build(i) for i in range(params.n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(build, range(params.n_trees)))

    return ForestModel(
        trees=trees,
        params=params,
        seed=seed,
        n_features=X.shape[1],
        layout_version=layout_version,
    )


def _gini_costs(cum: np.ndarray, total: np.ndarray, cut_sizes: np.ndarray) -> np.ndarray:
    """Weighted Gini impurity for every candidate cut of one sorted feature.

    cum[i] holds class counts of the first i+1 rows; cut at position p keeps
    rows 0..p-1 on the left.
    """
    m = total.sum()
    left = cum[cut_sizes - 1]
    right = total[None, :] - left
    left_n = cut_sizes.astype(float)
    right_n = m - left_n
    gini_left = 1.0 - ((left / left_n[:, None]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((right / right_n[:, None]) ** 2).sum(axis=1)
    return (left_n * gini_left + right_n * gini_right) / m


def _build_tree(
    X: np.ndarray,
    y: np.ndarray,
    root_idx: np.ndarray,
    n_classes: int,
    features_per_split: int,
    max_depth: int | None,
    min_leaf: int,
    rng: np.random.Generator,
) -> dict:
    """Grow one tree depth-first with an explicit stack (no recursion limit)."""
    root: dict = {}
    stack = [(root, root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes)
        if (
            (max_depth is not None and depth >= max_depth)
            or idx.size < 2 * min_leaf
            or np.count_nonzero(counts) <= 1
        ):
            _make_leaf(node, counts)
            continue

        # Walk a fresh random feature order, skipping features that are
        # constant within this node: they offer no split and do not count
        # against the per-node budget (matching standard splitter behavior,
        # which matters when most columns are sparse indicator features).
        perm = rng.permutation(X.shape[1])
        evaluated = 0
        best_cost = np.inf
        best_feature = -1
        best_threshold = 0.0
        for f in perm.tolist():
            vals = X[idx, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            boundaries = np.flatnonzero(sv[:-1] < sv[1:]) + 1  # left-side sizes
            boundaries = boundaries[(boundaries >= min_leaf) & (idx.size - boundaries >= min_leaf)]
            if boundaries.size == 0:
                continue
            evaluated += 1
            sy = y[idx][order]
            onehot = np.zeros((idx.size, n_classes))
            onehot[np.arange(idx.size), sy] = 1.0
            cum = np.cumsum(onehot, axis=0)
            costs = _gini_costs(cum, cum[-1], boundaries)
            best_here = int(np.argmin(costs))
            if costs[best_here] < best_cost:
                best_cost = float(costs[best_here])
                best_feature = f
                p = boundaries[best_here]
                lo, hi = float(sv[p - 1]), float(sv[p])
                mid = (lo + hi) / 2.0
                # Adjacent floats can round the midpoint onto the lower value,
                # which would leave the `< threshold` side empty; the upper
                # value always separates the two sides.
                best_threshold = mid if mid > lo else hi
            if evaluated >= features_per_split:
                break

        if best_feature < 0:
            _make_leaf(node, counts)
            continue

        mask = X[idx, best_feature] < best_threshold
        if not mask.any() or mask.all():
            _make_leaf(node, counts)  # cannot make progress on this node
            continue
        node["feature"] = int(best_feature)
        node["threshold"] = best_threshold
        node["left"] = {}
        node["right"] = {}
        # LIFO stack, left subtree grown first: the visit order (and hence the
        # per-node RNG draw order) is a pure function of the training data.
        stack.append((node["right"], idx[~mask], depth + 1))
        stack.append((node["left"], idx[mask], depth + 1))
    return root


def _make_leaf(node: dict, counts: np.ndarray) -> None:
    # Leaves store only the classes actually seen, as {class_index: count}.
    node["counts"] = {str(i): int(c) for i, c in enumerate(counts.tolist()) if c > 0}


def _tree_predict(tree: dict, x: np.ndarray) -> int:
    node = tree
    while "counts" not in node:
        node = node["left"] if x[node["feature"]] < node["threshold"] else node["right"]
    counts = node["counts"]
    # Majority with ties toward the lower-complexity class.
    best_class = -1
    best_count = -1
    for cls_str, count in counts.items():
        cls = int(cls_str)
        if count > best_count or (count == best_count and cls < best_class):
            best_class = cls
            best_count = count
    return best_class
