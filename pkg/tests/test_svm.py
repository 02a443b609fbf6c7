"""SVM dual solver: KKT conditions, separability, brute-force dual check."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

import reference as ref
from vocalscreen.classifiers import svm_decision, svm_dual_objective, train_svm_rbf
from vocalscreen.classifiers.linear import standardize_fit
from vocalscreen.errors import ConvergenceWarning, SingleClassError


def _two_clusters(seed=0, n=40, gap=4.0):
    rng = np.random.default_rng(seed)
    neg = rng.standard_normal((n // 2, 2)) - gap / 2
    pos = rng.standard_normal((n // 2, 2)) + gap / 2
    X = np.vstack([neg, pos])
    y = np.concatenate([np.zeros(n // 2), np.ones(n // 2)]).astype(int)
    return X, y


def test_kkt_conditions_hold():
    X, y = _two_clusters(seed=1, gap=2.0)
    C = 2.0
    model = train_svm_rbf(X, y, C=C, gamma=0.5)
    assert model.converged
    assert np.all(np.abs(model.dual_coef) <= C + 1e-9)  # |beta| = alpha in [0, C]
    decisions = svm_decision(model, X)
    sign = np.where(y > 0, 1.0, -1.0)
    # identify free support vectors through the stored duals
    Xs = (X - model.means) / model.scales
    for sv, coef in zip(model.support_vectors, model.dual_coef):
        alpha = abs(coef)
        if not (1e-6 * C < alpha < C * (1.0 - 1e-6)):
            continue
        row = np.nonzero(np.all(np.isclose(Xs, sv), axis=1))[0][0]
        margin = sign[row] * decisions[row]
        assert abs(margin - 1.0) <= 1e-2


def test_separable_clusters_fit_perfectly():
    X, y = _two_clusters(seed=2, gap=4.0)
    model = train_svm_rbf(X, y, C=10.0, gamma=0.5)
    decisions = svm_decision(model, X)
    assert np.all((decisions > 0) == (y == 1))


def test_four_point_dual_matches_lattice():
    X = np.array([[0.0, 0.0], [1.0, 0.5], [3.0, 3.0], [4.0, 2.5]])
    y = np.array([0, 0, 1, 1])
    C, gamma = 1.0, 0.5
    model = train_svm_rbf(X, y, C=C, gamma=gamma)
    means, scales = standardize_fit(X)
    Xs = (X - means) / scales
    sign = np.where(y > 0, 1.0, -1.0)
    lattice = ref.svm_lattice_dual_max(Xs, sign, C, gamma, steps=50)
    assert svm_dual_objective(model) == pytest.approx(lattice, abs=1e-3)


def test_tie_free_determinism():
    X, y = _two_clusters(seed=3)
    a = train_svm_rbf(X, y, C=1.0, gamma=0.3)
    b = train_svm_rbf(X, y, C=1.0, gamma=0.3)
    assert np.array_equal(a.dual_coef, b.dual_coef)
    assert a.bias == b.bias


def test_no_convergence_warns_and_returns():
    X, y = _two_clusters(seed=4)
    with pytest.warns(ConvergenceWarning):
        model = train_svm_rbf(X, y, C=1.0, gamma=0.5, max_iter=2)
    assert not model.converged
    assert np.isfinite(svm_decision(model, X)).all()


def test_decision_scores_are_uncalibrated_reals():
    X, y = _two_clusters(seed=5)
    model = train_svm_rbf(X, y, C=1.0, gamma=0.5)
    scores = svm_decision(model, X)
    assert scores.min() < 0.0 < scores.max()


def test_single_class_rejected():
    X = np.random.default_rng(0).standard_normal((8, 2))
    with pytest.raises(SingleClassError):
        train_svm_rbf(X, np.ones(8, dtype=int), C=1.0, gamma=0.5)


def test_bad_hyperparameters_rejected():
    X, y = _two_clusters()
    with pytest.raises(ValueError):
        train_svm_rbf(X, y, C=-1.0, gamma=0.5)
    with pytest.raises(ValueError):
        train_svm_rbf(X, y, C=1.0, gamma=0.0)
