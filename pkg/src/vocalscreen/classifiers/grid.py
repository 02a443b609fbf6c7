"""Grid search over classifier hyper-parameters with speaker-disjoint CV."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParamGrid:
    """Ordered parameter axes; cells enumerate in row-major order."""

    axes: tuple[tuple[str, tuple], ...]

    def __post_init__(self):
        if not self.axes:
            raise ValueError("parameter grid must not be empty")
        for name, values in self.axes:
            if not values:
                raise ValueError(f"grid axis {name!r} has no candidate values")

    @classmethod
    def from_dict(cls, axes: dict) -> "ParamGrid":
        return cls(tuple((name, tuple(values)) for name, values in axes.items()))

    def cells(self):
        names = [name for name, _ in self.axes]
        for combo in itertools.product(*(values for _, values in self.axes)):
            yield dict(zip(names, combo))


@dataclass
class GridSearchResult:
    best_params: dict
    best_mean_auc: float
    cells: list[tuple[dict, float]]


def grid_search(
    classifier_kind: str,
    grid: ParamGrid,
    X: np.ndarray,
    y: np.ndarray,
    subjects,
    k: int,
    seed: int,
) -> GridSearchResult:
    """Pick the cell with the best mean fold AUC under speaker-disjoint CV.

    Rows belonging to one subject never straddle a fold boundary; per-fold
    scores are averaged per subject before the AUC. Ties keep the earliest
    cell in row-major grid order. The fold assignment is built once, so
    every cell sees identical splits.
    """
    from .. import evaluation  # deferred: evaluation imports classifiers
    from . import fold_seed, score_rows, train_classifier

    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    subjects = np.asarray([str(s) for s in subjects])
    if subjects.size != y.size:
        raise ValueError("subjects must align with rows")

    subject_labels: dict[str, int] = {}
    for sid, label in zip(subjects, y):
        if subject_labels.setdefault(sid, int(label)) != int(label):
            raise ValueError(f"subject {sid!r} appears with both labels")
    fold_of = evaluation.assign_speaker_folds(
        list(subject_labels), [subject_labels[s] for s in subject_labels], k, seed
    )
    row_fold = np.asarray([fold_of[s] for s in subjects])

    cells: list[tuple[dict, float]] = []
    best_params: dict | None = None
    best_auc = -np.inf
    for params in grid.cells():
        fold_aucs = []
        for fold in range(k):
            train = row_fold != fold
            test = ~train
            model = train_classifier(
                classifier_kind, X[train], y[train], params, fold_seed(seed, fold)
            )
            scores = score_rows(model, X[test])
            per_subject: dict[str, list[float]] = {}
            for sid, score in zip(subjects[test], scores):
                per_subject.setdefault(sid, []).append(float(score))
            subj_ids = sorted(per_subject)
            subj_scores = [float(np.mean(per_subject[s])) for s in subj_ids]
            subj_labels = [subject_labels[s] for s in subj_ids]
            fold_aucs.append(evaluation.auc(subj_scores, subj_labels))
        mean_auc = float(np.mean(fold_aucs))
        cells.append((params, mean_auc))
        if mean_auc > best_auc:
            best_auc = mean_auc
            best_params = params
    assert best_params is not None
    return GridSearchResult(
        best_params=best_params, best_mean_auc=best_auc, cells=cells
    )
