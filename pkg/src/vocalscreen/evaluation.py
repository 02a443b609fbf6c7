"""Cohort data model, speaker-disjoint cross-validation, ROC/AUC metrics,
subject-level score fusion, and clinical-covariate subgroup analyses.

Training rows are recordings with the subject label broadcast; fusion to
one score per subject (the mean over that subject's recordings) happens
only at evaluation time. The pooled AUC over concatenated held-out subject
scores is the headline metric; per-fold AUCs are reported for variance
visibility.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from . import classifiers, features
from .audio_io import AudioType
from .classifiers import fold_seed, rf_feature_importance, score_rows, train_classifier
from .errors import (
    BadLabelError,
    ConflictingMetadataError,
    DuplicateIdError,
    DuplicateRecordingError,
    MissingFileError,
    ParseError,
    SingleClassError,
    TooFewSubjectsError,
)
from .features import FeatureConfig, FeatureSchema, FeatureSource

MANIFEST_COLUMNS = (
    "subject_id",
    "label",
    "audio_type",
    "recording_path",
    "age",
    "gender",
    "symptoms",
    "asthma",
    "smoker",
    "diagnosis_offset_days",
)

DEFAULT_OPERATING_FPR = 0.1
TOP_IMPORTANCES = 40
_CSV_FLOAT = "%.17g"


class Label(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class SubjectRecord:
    """One subject: label, recordings by audio type, clinical covariates.

    Missing covariates stay None; they are never imputed.
    """

    subject_id: str
    label: Label
    recordings: dict[AudioType, Path]
    age: float | None = None
    gender: str | None = None  # "M" / "F"
    symptoms: frozenset[str] = frozenset()
    asthma: bool | None = None
    smoker: bool | None = None
    diagnosis_offset_days: int | None = None

    def __post_init__(self):
        if not self.recordings:
            raise ValueError(f"subject {self.subject_id!r} has no recordings")
        if self.diagnosis_offset_days is not None and self.diagnosis_offset_days < 0:
            raise ValueError("diagnosis_offset_days must be non-negative")

    @property
    def is_positive(self) -> bool:
        return self.label is Label.POSITIVE


@dataclass(frozen=True)
class CohortManifest:
    subjects: tuple[SubjectRecord, ...]
    provenance: str = ""

    def __post_init__(self):
        ids = [r.subject_id for r in self.subjects]
        if len(set(ids)) != len(ids):
            raise DuplicateIdError("manifest contains duplicate subject ids")

    def fingerprint(self, include_audio: bool = True) -> str:
        """Content hash over metadata and (by default) the audio bytes.

        Metadata-only runs (the symptom baseline) skip the audio so they
        never touch recording files.
        """
        digest = hashlib.sha256()
        for record in sorted(self.subjects, key=lambda r: r.subject_id):
            digest.update(
                json.dumps(
                    {
                        "id": record.subject_id,
                        "label": record.label.value,
                        "age": record.age,
                        "gender": record.gender,
                        "symptoms": sorted(record.symptoms),
                        "asthma": record.asthma,
                        "smoker": record.smoker,
                        "diag": record.diagnosis_offset_days,
                    },
                    sort_keys=True,
                ).encode()
            )
            if not include_audio:
                continue
            for atype in AudioType:
                path = record.recordings.get(atype)
                if path is None:
                    continue
                digest.update(atype.value.encode())
                digest.update(hashlib.sha256(Path(path).read_bytes()).digest())
        return digest.hexdigest()[:16]


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: dict[str, int]  # subject_id -> fold index

    def fold_of(self, subject_id: str) -> int:
        return self.assignment[subject_id]


def _parse_bool(cell: str, line_no: int) -> bool | None:
    token = cell.strip().lower()
    if token in ("", "na", "n/a", "missing"):
        return None
    if token in ("1", "true", "yes", "y"):
        return True
    if token in ("0", "false", "no", "n"):
        return False
    raise ParseError(f"line {line_no}: cannot parse boolean {cell!r}")


def _parse_optional_float(cell: str, line_no: int, column: str) -> float | None:
    token = cell.strip().lower()
    if token in ("", "na", "n/a", "missing"):
        return None
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"line {line_no}: bad {column} value {cell!r}") from None


def load_manifest(path: str | Path) -> CohortManifest:
    """Load a cohort manifest CSV (one row per recording).

    Relative recording paths resolve against the manifest's directory.
    Per-subject metadata must agree across rows, every (subject, audio
    type) pair may appear once, and every referenced file must exist.
    """
    path = Path(path)
    base = path.parent
    meta: dict[str, dict] = {}
    recordings: dict[str, dict[AudioType, Path]] = {}
    seen_stems: dict[str, int] = {}
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        fieldnames = reader.fieldnames or []
        missing = [c for c in MANIFEST_COLUMNS if c not in fieldnames]
        if missing:
            raise ParseError(f"{path}: manifest header missing columns {missing}")
        for line_no, row in enumerate(reader, start=2):
            sid = (row["subject_id"] or "").strip()
            if not sid:
                raise ParseError(f"{path}: line {line_no}: empty subject_id")
            label_token = (row["label"] or "").strip().lower()
            if label_token not in ("positive", "negative"):
                raise BadLabelError(
                    f"{path}: line {line_no}: label must be positive/negative, "
                    f"got {row['label']!r}"
                )
            label = Label.POSITIVE if label_token == "positive" else Label.NEGATIVE
            try:
                atype = AudioType.parse(row["audio_type"] or "")
            except ValueError as exc:
                raise ParseError(f"{path}: line {line_no}: {exc}") from None
            rec_path = Path((row["recording_path"] or "").strip())
            if not rec_path.is_absolute():
                rec_path = base / rec_path
            if not rec_path.is_file():
                raise MissingFileError(f"{path}: line {line_no}: {rec_path} not found")
            stem = rec_path.stem
            if stem in seen_stems:
                raise DuplicateIdError(
                    f"{path}: line {line_no}: recording id {stem!r} already used "
                    f"at line {seen_stems[stem]}"
                )
            seen_stems[stem] = line_no
            age = _parse_optional_float(row["age"] or "", line_no, "age")
            gender_token = (row["gender"] or "").strip().lower()
            if gender_token in ("", "na", "n/a", "missing"):
                gender = None
            elif gender_token in ("m", "male"):
                gender = "M"
            elif gender_token in ("f", "female"):
                gender = "F"
            else:
                raise ParseError(
                    f"{path}: line {line_no}: bad gender {row['gender']!r}"
                )
            symptoms = frozenset(
                tok.strip().lower()
                for tok in (row["symptoms"] or "").split(";")
                if tok.strip()
            )
            asthma = _parse_bool(row["asthma"] or "", line_no)
            smoker = _parse_bool(row["smoker"] or "", line_no)
            diag = _parse_optional_float(
                row["diagnosis_offset_days"] or "", line_no, "diagnosis_offset_days"
            )
            if diag is not None:
                if diag < 0 or diag != int(diag):
                    raise ParseError(
                        f"{path}: line {line_no}: diagnosis_offset_days must be "
                        f"a non-negative integer"
                    )
                diag = int(diag)
            fields = {
                "label": label,
                "age": age,
                "gender": gender,
                "symptoms": symptoms,
                "asthma": asthma,
                "smoker": smoker,
                "diagnosis_offset_days": diag,
            }
            if sid not in meta:
                meta[sid] = fields
                recordings[sid] = {}
            elif meta[sid] != fields:
                raise ConflictingMetadataError(
                    f"{path}: line {line_no}: metadata for subject {sid!r} "
                    f"conflicts with an earlier row"
                )
            if atype in recordings[sid]:
                raise DuplicateRecordingError(
                    f"{path}: line {line_no}: duplicate {atype.value} recording "
                    f"for subject {sid!r}"
                )
            recordings[sid][atype] = rec_path
    subjects = tuple(
        SubjectRecord(subject_id=sid, recordings=recordings[sid], **meta[sid])
        for sid in sorted(meta)
    )
    if not subjects:
        raise ParseError(f"{path}: manifest has no rows")
    return CohortManifest(subjects=subjects, provenance=str(path))


def assign_speaker_folds(
    subject_ids, labels, k: int, seed: int
) -> dict[str, int]:
    """Stratified round-robin fold assignment over shuffled subjects.

    Subjects are shuffled within each class by a seeded RNG and dealt into
    folds; the second class continues dealing where the first left off so
    total fold sizes also stay within one of each other.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    y = _as_binary(labels)
    pairs = sorted(zip([str(s) for s in subject_ids], y))
    positives = [sid for sid, label in pairs if label == 1]
    negatives = [sid for sid, label in pairs if label == 0]
    if len(positives) < k or len(negatives) < k:
        raise TooFewSubjectsError(
            f"need at least {k} subjects per class, got "
            f"{len(positives)} positive / {len(negatives)} negative"
        )
    rng = np.random.default_rng(seed)
    rng.shuffle(positives)
    rng.shuffle(negatives)
    assignment: dict[str, int] = {}
    for i, sid in enumerate(positives):
        assignment[sid] = i % k
    offset = len(positives) % k
    for i, sid in enumerate(negatives):
        assignment[sid] = (offset + i) % k
    return assignment


def speaker_disjoint_folds(manifest: CohortManifest, k: int, seed: int) -> FoldAssignment:
    ids = [r.subject_id for r in manifest.subjects]
    labels = [1 if r.is_positive else 0 for r in manifest.subjects]
    return FoldAssignment(k=k, assignment=assign_speaker_folds(ids, labels, k, seed))


def aggregate_subject_scores(recording_scores: dict[AudioType, float]) -> float:
    """Arithmetic mean over whatever recordings the subject has."""
    if not recording_scores:
        raise ValueError("subject has no recording scores to aggregate")
    return float(np.mean(list(recording_scores.values())))


def _as_binary(labels) -> np.ndarray:
    out = []
    for label in labels:
        if isinstance(label, Label):
            out.append(1 if label is Label.POSITIVE else 0)
        else:
            out.append(int(label))
    arr = np.asarray(out, dtype=np.int64)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("labels must be binary (0/1 or Label)")
    return arr


def auc(scores, labels) -> float:
    """Mann-Whitney AUC with ties counted half.

    (#{pos > neg} + 0.5 * #{pos = neg}) / (n_pos * n_neg), computed via
    midranks.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _as_binary(labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUC needs both classes present")
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    midranks = ends - (counts - 1) / 2.0
    ranks = midranks[inverse]
    u_stat = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_stat / (n_pos * n_neg))


def roc_points(scores, labels) -> list[tuple[float, float, float]]:
    """ROC sweep: thresholds at unique scores descending plus a sentinel.

    A point (fpr, tpr, threshold) classifies score >= threshold as
    positive; the trapezoid over the points equals the Mann-Whitney AUC.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _as_binary(labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC needs both classes present")
    order = np.argsort(-s, kind="mergesort")
    sorted_s = s[order]
    cum_tp = np.cumsum(y[order])
    cum_fp = np.cumsum(1 - y[order])
    boundary = np.nonzero(np.diff(sorted_s))[0]
    last = np.append(boundary, s.size - 1)  # final row of each tie group
    points = [(0.0, 0.0, float("inf"))]
    for idx in last:
        points.append(
            (cum_fp[idx] / n_neg, cum_tp[idx] / n_pos, float(sorted_s[idx]))
        )
    return points


def pr_points(scores, labels) -> list[tuple[float, float, float]]:
    """Precision-recall sweep as (recall, precision, threshold) triples.

    Thresholds with zero predicted positives are skipped (undefined
    precision); the sweep itself always predicts at least one positive.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _as_binary(labels)
    n_pos = int(y.sum())
    order = np.argsort(-s, kind="mergesort")
    sorted_s = s[order]
    cum_tp = np.cumsum(y[order])
    boundary = np.nonzero(np.diff(sorted_s))[0]
    last = np.append(boundary, s.size - 1)
    points = []
    for idx in last:
        n_pred = idx + 1
        points.append(
            (cum_tp[idx] / n_pos, cum_tp[idx] / n_pred, float(sorted_s[idx]))
        )
    return points


def precision_at_recall(scores, labels, target_recall: float) -> float:
    """Best precision among sweep points reaching the target recall."""
    best = 0.0
    for recall, precision, _ in pr_points(scores, labels):
        if recall >= target_recall:
            best = max(best, precision)
    return best


def recall_at_fpr(scores, labels, max_fpr: float) -> float:
    """Best recall among thresholds whose FPR stays within the budget."""
    _, recall = operating_point_at_fpr(scores, labels, max_fpr)
    return recall


def operating_point_at_fpr(scores, labels, max_fpr: float) -> tuple[float, float]:
    """(threshold, recall) of the best-recall point with fpr <= max_fpr.

    Recall ties keep the higher threshold (fewer flagged subjects).
    """
    best_threshold = float("inf")
    best_recall = 0.0
    for fpr, tpr, threshold in roc_points(scores, labels):
        if fpr <= max_fpr and tpr > best_recall:
            best_recall = tpr
            best_threshold = threshold
    return best_threshold, best_recall


def recall_within_subgroup(
    subjects: tuple[SubjectRecord, ...],
    subject_scores: dict[str, float],
    threshold: float,
    predicate: Callable[[SubjectRecord], bool],
) -> tuple[float | None, int]:
    """Recall of positive subjects matching the predicate at the threshold.

    Empty subgroups report (None, 0) rather than failing.
    """
    members = [r for r in subjects if r.is_positive and predicate(r)]
    if not members:
        return None, 0
    hits = sum(
        1 for r in members if subject_scores[r.subject_id] >= threshold
    )
    return hits / len(members), len(members)


def builtin_subgroups(
    subjects: tuple[SubjectRecord, ...]
) -> list[tuple[str, Callable[[SubjectRecord], bool]]]:
    """Named predicates: age bands, symptom tokens, asthma/smoker, and
    diagnosis-to-recording day ranges (missing values form their own
    groups and are skipped elsewhere)."""
    groups: list[tuple[str, Callable[[SubjectRecord], bool]]] = [
        ("all", lambda r: True),
        ("age<=30", lambda r: r.age is not None and r.age <= 30),
        ("30<age<=40", lambda r: r.age is not None and 30 < r.age <= 40),
        ("age>40", lambda r: r.age is not None and r.age > 40),
        ("age_missing", lambda r: r.age is None),
    ]
    vocabulary = sorted(set().union(*(r.symptoms for r in subjects)) if subjects else set())
    for token in vocabulary:
        groups.append(
            (f"symptom:{token}", lambda r, tok=token: tok in r.symptoms)
        )
    groups += [
        ("asthma", lambda r: r.asthma is True),
        ("smoker", lambda r: r.smoker is True),
        (
            "diagnosis<=7",
            lambda r: r.diagnosis_offset_days is not None
            and r.diagnosis_offset_days <= 7,
        ),
        (
            "7<diagnosis<=14",
            lambda r: r.diagnosis_offset_days is not None
            and 7 < r.diagnosis_offset_days <= 14,
        ),
        (
            "diagnosis>14",
            lambda r: r.diagnosis_offset_days is not None
            and r.diagnosis_offset_days > 14,
        ),
        ("diagnosis_unknown", lambda r: r.diagnosis_offset_days is None),
    ]
    return groups


@dataclass
class FeatureTable:
    """Extracted vectors for a cohort, keyed by recording id."""

    schema: FeatureSchema
    vectors: dict[str, np.ndarray]
    n_zeroed: int = 0


def _extract_custom_worker(task):
    path, type_value, config = task
    atype = AudioType(type_value)
    vector = features.extract_recording(path, atype, config, None)
    return vector.values, vector.n_zeroed


def extract_cohort_features(
    manifest: CohortManifest, config: FeatureConfig, jobs: int = 1
) -> FeatureTable:
    """Extract one vector per recording (parallelizable per recording).

    External embedding tables are loaded once and fused in the parent so
    worker payloads stay small; parallel and serial runs are identical.
    """
    tables = [
        features.load_embedding_table(p, label) for label, p in config.embeddings
    ]
    tasks = []
    rids = []
    for record in sorted(manifest.subjects, key=lambda r: r.subject_id):
        for atype in AudioType:
            path = record.recordings.get(atype)
            if path is None:
                continue
            tasks.append((str(path), atype.value, config))
            rids.append(Path(path).stem)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_custom_worker, tasks, chunksize=8))
    else:
        results = [_extract_custom_worker(task) for task in tasks]
    schema = features.cohort_feature_schema(config, tables)
    vectors: dict[str, np.ndarray] = {}
    n_zeroed = 0
    base_schema = features.custom_schema(config)
    for rid, (values, zeroed) in zip(rids, results):
        n_zeroed += zeroed
        if tables:
            parts = [(base_schema, values)]
            parts += [(t.schema, t.vector_for(rid)) for t in tables]
            values = features.fuse_features(parts).values
        vectors[rid] = values
    return FeatureTable(schema=schema, vectors=vectors, n_zeroed=n_zeroed)


@dataclass
class EvalReport:
    """Everything a run reports; `write_report` serializes it."""

    classifier: str
    params: dict
    k: int
    seed: int
    config_fingerprint: str
    n_subjects: int
    n_positive: int
    n_negative: int
    per_fold_auc: list[float]
    pooled_auc: float
    roc: list[tuple[float, float, float]]
    pr: list[tuple[float, float, float]]
    precision_at_recall_50: float
    recall_at_fpr_10: float
    recall_at_fpr_01: float
    operating_threshold: float
    subgroups: list[dict]
    importances: list[tuple[str, float]]
    subject_scores: dict[str, float] = field(repr=False, default_factory=dict)
    n_zeroed: int = 0

    def to_json_dict(self) -> dict:
        return {
            "classifier": self.classifier,
            "params": self.params,
            "k": self.k,
            "seed": self.seed,
            "config_fingerprint": self.config_fingerprint,
            "n_subjects": self.n_subjects,
            "n_positive": self.n_positive,
            "n_negative": self.n_negative,
            "per_fold_auc": self.per_fold_auc,
            "pooled_auc": self.pooled_auc,
            "operating_points": {
                "precision_at_recall_0.5": self.precision_at_recall_50,
                "recall_at_fpr_0.1": self.recall_at_fpr_10,
                "recall_at_fpr_0.01": self.recall_at_fpr_01,
            },
            "operating_threshold_fpr_0.1": self.operating_threshold,
            "subgroups": self.subgroups,
            "top_importances": [
                [name, value] for name, value in self.importances[:TOP_IMPORTANCES]
            ],
            "n_nonfinite_zeroed": self.n_zeroed,
        }


def _config_fingerprint(
    manifest_fingerprint: str, schema_names, classifier: str, params: dict, k: int
) -> str:
    payload = json.dumps(
        {
            "manifest": manifest_fingerprint,
            "schema": list(schema_names),
            "classifier": classifier,
            "params": {key: params[key] for key in sorted(params)},
            "k": k,
        },
        sort_keys=True,
    ).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def _evaluate_rows(
    manifest: CohortManifest,
    X: np.ndarray,
    row_subjects: list[str],
    row_types: list[AudioType | None],
    schema: FeatureSchema,
    classifier_kind: str,
    params: dict,
    k: int,
    seed: int,
    n_zeroed: int = 0,
    progress: Callable[[int, int, float], None] | None = None,
    manifest_fingerprint: str | None = None,
) -> EvalReport:
    subjects = manifest.subjects
    if manifest_fingerprint is None:
        manifest_fingerprint = manifest.fingerprint()
    label_of = {r.subject_id: 1 if r.is_positive else 0 for r in subjects}
    fold_of = assign_speaker_folds(
        list(label_of), list(label_of.values()), k, seed
    )
    y_rows = np.asarray([label_of[sid] for sid in row_subjects], dtype=np.int64)
    row_fold = np.asarray([fold_of[sid] for sid in row_subjects])
    fingerprint = schema.fingerprint()

    subject_scores: dict[str, float] = {}
    per_fold_auc: list[float] = []
    importance_acc = np.zeros(schema.dimension)
    n_rf_folds = 0
    for fold in range(k):
        train = row_fold != fold
        test = ~train
        model = train_classifier(
            classifier_kind, X[train], y_rows[train], params, fold_seed(seed, fold)
        )
        model.feature_names = schema.names
        model.schema_fingerprint = fingerprint
        scores = score_rows(model, X[test], schema_fingerprint=fingerprint)
        per_type: dict[str, dict] = {}
        for sid, atype, score in zip(
            np.asarray(row_subjects)[test], np.asarray(row_types)[test], scores
        ):
            per_type.setdefault(str(sid), {})[atype] = float(score)
        fold_ids = sorted(per_type)
        for sid in fold_ids:
            subject_scores[sid] = aggregate_subject_scores(per_type[sid])
        fold_auc = auc(
            [subject_scores[sid] for sid in fold_ids],
            [label_of[sid] for sid in fold_ids],
        )
        per_fold_auc.append(fold_auc)
        if classifier_kind == "rf":
            name_to_col = {name: i for i, name in enumerate(schema.names)}
            for name, value in rf_feature_importance(model):
                importance_acc[name_to_col[name]] += value
            n_rf_folds += 1
        if progress is not None:
            progress(fold, k, fold_auc)

    ordered_ids = sorted(subject_scores)
    pooled_scores = [subject_scores[sid] for sid in ordered_ids]
    pooled_labels = [label_of[sid] for sid in ordered_ids]
    pooled = auc(pooled_scores, pooled_labels)
    threshold, _ = operating_point_at_fpr(
        pooled_scores, pooled_labels, DEFAULT_OPERATING_FPR
    )
    subgroup_rows = []
    for name, predicate in builtin_subgroups(subjects):
        recall, support = recall_within_subgroup(
            subjects, subject_scores, threshold, predicate
        )
        subgroup_rows.append({"name": name, "recall": recall, "support": support})
    if n_rf_folds:
        importance_acc /= n_rf_folds
        order = np.argsort(-importance_acc, kind="stable")
        importances = [(schema.names[i], float(importance_acc[i])) for i in order]
    else:
        importances = []
    return EvalReport(
        classifier=classifier_kind,
        params={key: params[key] for key in sorted(params)},
        k=k,
        seed=seed,
        config_fingerprint=_config_fingerprint(
            manifest_fingerprint, schema.names, classifier_kind, params, k
        ),
        n_subjects=len(subjects),
        n_positive=sum(1 for r in subjects if r.is_positive),
        n_negative=sum(1 for r in subjects if not r.is_positive),
        per_fold_auc=per_fold_auc,
        pooled_auc=pooled,
        roc=roc_points(pooled_scores, pooled_labels),
        pr=pr_points(pooled_scores, pooled_labels),
        precision_at_recall_50=precision_at_recall(pooled_scores, pooled_labels, 0.5),
        recall_at_fpr_10=recall_at_fpr(pooled_scores, pooled_labels, 0.1),
        recall_at_fpr_01=recall_at_fpr(pooled_scores, pooled_labels, 0.01),
        operating_threshold=threshold,
        subgroups=subgroup_rows,
        importances=importances,
        subject_scores=subject_scores,
        n_zeroed=n_zeroed,
    )


def cohort_rows(
    manifest: CohortManifest, feature_table: FeatureTable
) -> tuple[np.ndarray, list[str], list[AudioType]]:
    """One matrix row per recording, subjects sorted, types in enum order."""
    rows = []
    row_subjects: list[str] = []
    row_types: list[AudioType] = []
    for record in sorted(manifest.subjects, key=lambda r: r.subject_id):
        for atype in AudioType:
            path = record.recordings.get(atype)
            if path is None:
                continue
            rows.append(feature_table.vectors[Path(path).stem])
            row_subjects.append(record.subject_id)
            row_types.append(atype)
    return np.vstack(rows), row_subjects, row_types


def cross_validate(
    manifest: CohortManifest,
    feature_config: FeatureConfig,
    classifier_kind: str,
    params: dict | None = None,
    k: int = 5,
    seed: int = 42,
    jobs: int = 1,
    feature_table: FeatureTable | None = None,
    progress: Callable[[int, int, float], None] | None = None,
) -> EvalReport:
    """Speaker-disjoint k-fold CV over the cohort's recordings.

    Every recording is one training row with its subject's label; held-out
    recordings are scored and fused to one score per subject. Each subject
    lands in the pooled score list exactly once.
    """
    params = dict(params or {})
    if feature_table is None:
        feature_table = extract_cohort_features(manifest, feature_config, jobs=jobs)
    X, row_subjects, row_types = cohort_rows(manifest, feature_table)
    return _evaluate_rows(
        manifest,
        X,
        row_subjects,
        row_types,
        feature_table.schema,
        classifier_kind,
        params,
        k,
        seed,
        n_zeroed=feature_table.n_zeroed,
        progress=progress,
    )


def per_audio_type_eval(
    manifest: CohortManifest,
    feature_config: FeatureConfig,
    classifier_kind: str = "rf",
    params: dict | None = None,
    k: int = 5,
    seed: int = 42,
    jobs: int = 1,
    feature_table: FeatureTable | None = None,
) -> dict[AudioType, float]:
    """Pooled AUC per audio type, each from a CV restricted to that type."""
    if feature_table is None:
        feature_table = extract_cohort_features(manifest, feature_config, jobs=jobs)
    results: dict[AudioType, float] = {}
    for atype in AudioType:
        restricted = tuple(
            replace(record, recordings={atype: record.recordings[atype]})
            for record in manifest.subjects
            if atype in record.recordings
        )
        if not restricted:
            continue
        sub_manifest = CohortManifest(
            subjects=restricted, provenance=manifest.provenance
        )
        report = cross_validate(
            sub_manifest,
            feature_config,
            classifier_kind,
            params=params,
            k=k,
            seed=seed,
            jobs=jobs,
            feature_table=feature_table,
        )
        results[atype] = report.pooled_auc
    return results


def symptom_only_baseline(
    manifest: CohortManifest, k: int = 5, seed: int = 42
) -> EvalReport:
    """Random-forest screening from symptoms + asthma + smoker alone.

    One binary-indicator row per subject (missing treated as 0); no audio
    is decoded. Same folds and fusion protocol as the audio pipeline.
    """
    subjects = sorted(manifest.subjects, key=lambda r: r.subject_id)
    vocabulary = sorted(set().union(*(r.symptoms for r in subjects)))
    names = [f"symptom:{tok}" for tok in vocabulary] + ["asthma", "smoker"]
    entries = tuple((name, FeatureSource.EXTERNAL) for name in names)
    schema = FeatureSchema(label="symptoms", entries=entries)
    X = np.zeros((len(subjects), len(names)))
    for i, record in enumerate(subjects):
        for j, token in enumerate(vocabulary):
            X[i, j] = 1.0 if token in record.symptoms else 0.0
        X[i, len(vocabulary)] = 1.0 if record.asthma is True else 0.0
        X[i, len(vocabulary) + 1] = 1.0 if record.smoker is True else 0.0
    row_subjects = [r.subject_id for r in subjects]
    row_types: list[AudioType | None] = [None] * len(subjects)
    return _evaluate_rows(
        manifest,
        X,
        row_subjects,
        row_types,
        schema,
        "rf",
        dict(classifiers.DEFAULT_PARAMS["rf"]),
        k,
        seed,
        manifest_fingerprint=manifest.fingerprint(include_audio=False),
    )


def write_report(report: EvalReport, out_dir: str | Path) -> None:
    """Emit report.json plus the four plot-ready CSVs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
    )
    with (out_dir / "roc_points.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, threshold in report.roc:
            writer.writerow([_CSV_FLOAT % fpr, _CSV_FLOAT % tpr, _CSV_FLOAT % threshold])
    with (out_dir / "pr_points.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["recall", "precision", "threshold"])
        for recall, precision, threshold in report.pr:
            writer.writerow(
                [_CSV_FLOAT % recall, _CSV_FLOAT % precision, _CSV_FLOAT % threshold]
            )
    with (out_dir / "subgroups.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["name", "recall", "support"])
        for row in report.subgroups:
            recall = "" if row["recall"] is None else _CSV_FLOAT % row["recall"]
            writer.writerow([row["name"], recall, row["support"]])
    with (out_dir / "importances.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["rank", "feature", "importance"])
        for rank, (name, value) in enumerate(report.importances, start=1):
            writer.writerow([rank, name, _CSV_FLOAT % value])
