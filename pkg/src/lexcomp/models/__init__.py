"""Trained predictors: linear regression (continuous) and random forest (5-bin)."""

from ..bins import BIN_ORDER, ComplexityBin, bin_complexity
from .forest import ForestModel, ForestParams, train_forest
from .regression import (
    LayoutMismatchError,
    RegressionModel,
    SingularSystemError,
    train_regression,
)

__all__ = [
    "BIN_ORDER",
    "ComplexityBin",
    "bin_complexity",
    "ForestModel",
    "ForestParams",
    "train_forest",
    "LayoutMismatchError",
    "RegressionModel",
    "SingularSystemError",
    "train_regression",
]
