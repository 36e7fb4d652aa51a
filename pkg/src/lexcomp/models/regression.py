"""Linear regression for continuous complexity, solved by normal equations.

Features are standardized (train-set mean and standard deviation) before
solving because the raw feature scales span orders of magnitude: 100-700
psycholinguistic norms next to 0/1 indicator flags. The stored weights are
back-transformed to raw feature space; the ridge penalty applies in the
standardized space, and `penalized_weight_norm` reports the norm there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "RegressionModel",
    "SingularSystemError",
    "LayoutMismatchError",
    "train_regression",
]


class SingularSystemError(ValueError):
    """Normal equations are singular; retry with ridge_lambda > 0."""


class LayoutMismatchError(ValueError):
    """Model was trained under a different feature layout."""


@dataclass
class RegressionModel:
    weights: np.ndarray
    intercept: float
    ridge_lambda: float
    layout_version: str
    feature_scales: np.ndarray

    def check_layout(self, layout_version: str) -> None:
        if layout_version != self.layout_version:
            raise LayoutMismatchError(
                f"model layout {self.layout_version!r} != data layout {layout_version!r}"
            )

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Raw (unclamped) predictions for a matrix of feature rows."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.size:
            raise LayoutMismatchError(
                f"expected {self.weights.size} features, got {X.shape[1]}"
            )
        return X @ self.weights + self.intercept

    def predict_one(self, x: Sequence[float]) -> tuple[float, float]:
        """(clamped, raw) prediction for a single feature vector.

        The clamped value is what reports show (labels live in [0, 1]); the
        raw value feeds correlation metrics.
        """
        raw = float(self.predict(np.asarray(x, dtype=float)[None, :])[0])
        return min(1.0, max(0.0, raw)), raw

    def penalized_weight_norm(self) -> float:
        """Weight norm in the standardized space the ridge penalty acts on."""
        return float(np.linalg.norm(self.weights * self.feature_scales))

    def to_dict(self) -> dict:
        return {
            "kind": "linear_regression",
            "layout_version": self.layout_version,
            "ridge_lambda": self.ridge_lambda,
            "intercept": self.intercept,
            "weights": self.weights.tolist(),
            "feature_scales": self.feature_scales.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionModel":
        if d.get("kind") != "linear_regression":
            raise ValueError(f"not a linear regression model: kind={d.get('kind')!r}")
        return cls(
            weights=np.asarray(d["weights"], dtype=float),
            intercept=float(d["intercept"]),
            ridge_lambda=float(d["ridge_lambda"]),
            layout_version=d["layout_version"],
            feature_scales=np.asarray(d["feature_scales"], dtype=float),
        )


def train_regression(
    X: np.ndarray,
    y: Sequence[float],
    ridge_lambda: float = 0.0,
    layout_version: str = "unversioned",
) -> RegressionModel:
    """Fit weights minimizing squared error plus ridge_lambda * ||w||^2.

    Solved via the normal equations with a Cholesky factorization; raises
    SingularSystemError when the system is singular and ridge_lambda is 0.
    Deterministic: no randomness anywhere in the solve.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if X.shape[0] != y.size:
        raise ValueError(f"rows(X)={X.shape[0]} != len(y)={y.size}")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be >= 0")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite entries in training data")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    safe_scale = np.where(scale > 0, scale, 1.0)
    y_mean = y.mean()
    yc = y - y_mean

    # Constant columns are collinear with the intercept; their minimum-norm
    # weight is 0, so they are excluded from the solve rather than poisoning it.
    active = np.flatnonzero(scale > 0)
    Z = (X[:, active] - mean[active]) / scale[active]

    w_std = np.zeros(X.shape[1])
    if active.size:
        A = Z.T @ Z + ridge_lambda * np.eye(active.size)
        b = Z.T @ yc
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            if ridge_lambda == 0.0:
                raise SingularSystemError(
                    "normal equations are singular (collinear features); "
                    "set ridge_lambda > 0"
                ) from None
            raise
        w_std[active] = np.linalg.solve(L.T, np.linalg.solve(L, b))

    weights = w_std / safe_scale
    intercept = float(y_mean - weights @ mean)
    return RegressionModel(
        weights=weights,
        intercept=intercept,
        ridge_lambda=float(ridge_lambda),
        layout_version=layout_version,
        feature_scales=safe_scale,
    )
