"""L2-regularized logistic regression fit by damped Newton iterations.

Features are z-scored internally (constant columns get scale 1); the bias
is not penalized. A backtracking line search keeps the loss non-increasing,
and iteration stops when the gradient infinity-norm drops below tolerance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import ConvergenceWarning, SingleClassError

DEFAULT_L2_LAMBDA = 0.1
GRAD_TOL = 1e-8
MAX_ITER = 500
_ARMIJO_C = 1e-4


@dataclass
class LogRegModel:
    weights: np.ndarray  # in standardized feature space
    bias: float
    l2_lambda: float
    means: np.ndarray
    scales: np.ndarray
    n_iter: int = 0
    converged: bool = True
    feature_names: tuple[str, ...] | None = None
    schema_fingerprint: str | None = None


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population std; constant columns keep scale 1.

    "Constant" tolerates the float noise a constant column accumulates in
    the mean subtraction.
    """
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    floor = 1e-12 * np.maximum(1.0, np.abs(means))
    scales = np.where(scales > floor, scales, 1.0)
    return means, scales


def logistic_loss_grad(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2_lambda: float
) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss plus (lambda/2)||w||^2, with its analytic gradient."""
    n = X.shape[0]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2_lambda * float(
        w @ w
    )
    p = expit(z)
    grad_w = X.T @ (p - y) / n + l2_lambda * w
    grad_b = float(np.mean(p - y))
    return loss, grad_w, grad_b


def train_logistic_regression(
    X: np.ndarray,
    y: np.ndarray,
    l2_lambda: float = DEFAULT_L2_LAMBDA,
    tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
) -> LogRegModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.float64)
    if len(np.unique(y)) < 2:
        raise SingleClassError("training labels contain a single class")
    means, scales = standardize_fit(X)
    Xs = (X - means) / scales
    n, d = Xs.shape
    w = np.zeros(d)
    b = 0.0
    loss, grad_w, grad_b = logistic_loss_grad(w, b, Xs, y, l2_lambda)

    def grad_inf() -> float:
        return max(float(np.max(np.abs(grad_w))), abs(grad_b))

    n_iter = 0
    while grad_inf() >= tol and n_iter < max_iter:
        p = expit(Xs @ w + b)
        s = p * (1.0 - p)
        H = np.empty((d + 1, d + 1))
        H[:d, :d] = Xs.T @ (Xs * s[:, None]) / n + l2_lambda * np.eye(d)
        H[:d, d] = Xs.T @ s / n
        H[d, :d] = H[:d, d]
        H[d, d] = float(np.mean(s))
        grad = np.append(grad_w, grad_b)
        try:
            step_dir = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step_dir = np.linalg.solve(H + 1e-8 * np.eye(d + 1), -grad)
        slope = float(grad @ step_dir)  # negative for a descent direction
        eta = 1.0
        accepted = False
        while eta > 1e-12:
            w_new = w + eta * step_dir[:d]
            b_new = b + eta * step_dir[d]
            loss_new, gw_new, gb_new = logistic_loss_grad(
                w_new, b_new, Xs, y, l2_lambda
            )
            if loss_new <= loss + _ARMIJO_C * eta * slope:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break  # no productive step left
        w, b = w_new, b_new
        loss, grad_w, grad_b = loss_new, gw_new, gb_new
        n_iter += 1

    converged = grad_inf() < tol
    if not converged:
        warnings.warn(
            f"logistic regression stopped after {n_iter} iterations without "
            "reaching gradient tolerance",
            ConvergenceWarning,
            stacklevel=2,
        )
    return LogRegModel(
        weights=w,
        bias=float(b),
        l2_lambda=float(l2_lambda),
        means=means,
        scales=scales,
        n_iter=n_iter,
        converged=converged,
    )


def logreg_predict_proba(model: LogRegModel, X: np.ndarray) -> np.ndarray:
    """Positive-class probability sigmoid(w . x_std + b) per row."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Xs = (X - model.means) / model.scales
    return expit(Xs @ model.weights + model.bias)
