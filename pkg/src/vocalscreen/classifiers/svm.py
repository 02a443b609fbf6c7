"""Soft-margin RBF SVM trained by pairwise coordinate ascent on the dual.

Each step picks the maximal violating pair (largest KKT gap), takes the
analytic step clipped to the box, and updates the cached dual gradient.
The stop rule is a KKT gap below tolerance, which pins the decision values
of free support vectors to their targets within that tolerance. Features
are z-scored internally; scores are raw decision values (no calibration).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceWarning, SingleClassError
from .linear import standardize_fit

KKT_TOL = 1e-3
_SV_EPS = 1e-12


@dataclass
class SvmRbfModel:
    support_vectors: np.ndarray  # standardized rows
    dual_coef: np.ndarray  # alpha_i * y_i per support vector
    bias: float
    gamma: float
    C: float
    means: np.ndarray
    scales: np.ndarray
    n_iter: int = 0
    converged: bool = True
    feature_names: tuple[str, ...] | None = None
    schema_fingerprint: str | None = None


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for every pair of rows."""
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def train_svm_rbf(
    X: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    gamma: float = 0.1,
    kkt_tol: float = KKT_TOL,
    max_iter: int | None = None,
) -> SvmRbfModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClassError("training labels contain a single class")
    if C <= 0.0 or gamma <= 0.0:
        raise ValueError("C and gamma must be positive")
    means, scales = standardize_fit(X)
    Xs = (X - means) / scales
    sign = np.where(y > 0, 1.0, -1.0)
    n = Xs.shape[0]
    K = rbf_kernel(Xs, Xs, gamma)

    # beta_i = y_i * alpha_i lives in [lo_i, hi_i]; sum(beta) stays 0.
    lo = np.where(sign > 0, 0.0, -C)
    hi = np.where(sign > 0, C, 0.0)
    beta = np.zeros(n)
    grad = sign.copy()  # d/d(beta_i) of the dual objective
    if max_iter is None:
        max_iter = max(20000, 200 * n)

    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        can_up = beta < hi - _SV_EPS
        can_down = beta > lo + _SV_EPS
        if not can_up.any() or not can_down.any():
            converged = True
            break
        i = int(np.argmax(np.where(can_up, grad, -np.inf)))
        j = int(np.argmin(np.where(can_down, grad, np.inf)))
        gap = grad[i] - grad[j]
        if gap <= kkt_tol:
            converged = True
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = min(hi[i] - beta[i], beta[j] - lo[j], gap / max(quad, _SV_EPS))
        beta[i] += step
        beta[j] -= step
        grad -= step * (K[:, i] - K[:, j])
    if not converged:
        warnings.warn(
            f"SVM dual solver hit the iteration cap ({max_iter}); "
            "returning the best iterate",
            ConvergenceWarning,
            stacklevel=2,
        )

    free = (beta > lo + 1e-8 * C) & (beta < hi - 1e-8 * C)
    if free.any():
        bias = float(grad[free].mean())
    else:
        up = np.where(beta < hi - _SV_EPS, grad, -np.inf)
        down = np.where(beta > lo + _SV_EPS, grad, np.inf)
        bias = float(0.5 * (up.max() + down.min()))

    keep = np.abs(beta) > _SV_EPS
    return SvmRbfModel(
        support_vectors=Xs[keep],
        dual_coef=beta[keep],
        bias=bias,
        gamma=float(gamma),
        C=float(C),
        means=means,
        scales=scales,
        n_iter=n_iter,
        converged=converged,
    )


def svm_decision(model: SvmRbfModel, X: np.ndarray) -> np.ndarray:
    """Uncalibrated decision value sum_i beta_i K(x, sv_i) + b per row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Xs = (X - model.means) / model.scales
    if model.support_vectors.shape[0] == 0:
        return np.full(Xs.shape[0], model.bias)
    K = rbf_kernel(Xs, model.support_vectors, model.gamma)
    return K @ model.dual_coef + model.bias


def svm_dual_objective(model: SvmRbfModel) -> float:
    """Dual objective sum(alpha) - 0.5 * beta' K beta at the trained point."""
    beta = model.dual_coef
    if beta.size == 0:
        return 0.0
    K = rbf_kernel(model.support_vectors, model.support_vectors, model.gamma)
    return float(np.sum(np.abs(beta)) - 0.5 * beta @ K @ beta)
