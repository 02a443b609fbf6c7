"""Simple binary classifiers: random forest, logistic regression, RBF SVM.

All training is deterministic under a fixed seed. Scores are probabilities
for the forest and logistic regression, and raw decision values for the
SVM; evaluation is rank-based so the mix is fine.
"""

from __future__ import annotations

import numpy as np

from .forest import (
    ForestParams,
    RandomForestModel,
    rf_feature_importance,
    rf_predict_matrix,
    rf_predict_proba,
    train_random_forest,
)
from .grid import GridSearchResult, ParamGrid, grid_search
from .linear import (
    LogRegModel,
    logistic_loss_grad,
    logreg_predict_proba,
    train_logistic_regression,
)
from .serialize import check_schema_fingerprint, load_model, save_model
from .svm import SvmRbfModel, svm_decision, svm_dual_objective, train_svm_rbf

CLASSIFIER_KINDS = ("rf", "lr", "svm")

DEFAULT_PARAMS = {
    "rf": {"n_trees": 300, "max_features": None, "min_samples_leaf": 1},
    "lr": {"l2_lambda": 0.1},
    "svm": {"C": 1.0, "gamma": None},  # None -> 1 / n_features
}


def fold_seed(seed: int, fold: int) -> int:
    """Stable per-fold training seed derived from the run seed."""
    return int(np.random.SeedSequence(entropy=[int(seed), int(fold)]).generate_state(1)[0])


def train_classifier(kind: str, X: np.ndarray, y: np.ndarray, params: dict, seed: int):
    """Train one of the supported classifiers from a flat params dict."""
    merged = dict(DEFAULT_PARAMS[kind])
    merged.update(params or {})
    if kind == "rf":
        forest_params = ForestParams(
            n_trees=int(merged["n_trees"]),
            max_features=merged["max_features"],
            min_samples_leaf=int(merged["min_samples_leaf"]),
        )
        return train_random_forest(X, y, params=forest_params, seed=seed)
    if kind == "lr":
        return train_logistic_regression(X, y, l2_lambda=float(merged["l2_lambda"]))
    if kind == "svm":
        gamma = merged["gamma"]
        if gamma is None:
            gamma = 1.0 / X.shape[1]
        return train_svm_rbf(X, y, C=float(merged["C"]), gamma=float(gamma))
    raise ValueError(f"unknown classifier kind {kind!r}")


def score_rows(
    model, X: np.ndarray, schema_fingerprint: str | None = None
) -> np.ndarray:
    """Per-row score: probability (rf, lr) or decision value (svm).

    Passing the caller's schema fingerprint refuses layout mismatches.
    """
    check_schema_fingerprint(model, schema_fingerprint)
    if isinstance(model, RandomForestModel):
        return rf_predict_matrix(model, X)
    if isinstance(model, LogRegModel):
        return logreg_predict_proba(model, X)
    if isinstance(model, SvmRbfModel):
        return svm_decision(model, X)
    raise TypeError(f"unsupported model type {type(model).__name__}")


__all__ = [
    "CLASSIFIER_KINDS",
    "DEFAULT_PARAMS",
    "ForestParams",
    "check_schema_fingerprint",
    "GridSearchResult",
    "LogRegModel",
    "ParamGrid",
    "RandomForestModel",
    "SvmRbfModel",
    "fold_seed",
    "grid_search",
    "load_model",
    "logistic_loss_grad",
    "logreg_predict_proba",
    "rf_feature_importance",
    "rf_predict_matrix",
    "rf_predict_proba",
    "save_model",
    "score_rows",
    "svm_decision",
    "svm_dual_objective",
    "train_classifier",
    "train_logistic_regression",
    "train_random_forest",
    "train_svm_rbf",
]
