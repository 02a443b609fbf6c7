"""Cohort loading, folds, metrics, CV protocol, subgroup analyses."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

import reference as ref
from vocalscreen import audio_io
from vocalscreen.audio_io import AudioType, write_wav
from vocalscreen.errors import (
    BadLabelError,
    ConflictingMetadataError,
    DuplicateRecordingError,
    MissingFileError,
    SingleClassError,
    TooFewSubjectsError,
)
from vocalscreen.evaluation import (
    CohortManifest,
    Label,
    SubjectRecord,
    aggregate_subject_scores,
    assign_speaker_folds,
    auc,
    builtin_subgroups,
    cross_validate,
    extract_cohort_features,
    load_manifest,
    operating_point_at_fpr,
    per_audio_type_eval,
    pr_points,
    precision_at_recall,
    recall_at_fpr,
    recall_within_subgroup,
    roc_points,
    speaker_disjoint_folds,
    symptom_only_baseline,
    write_report,
)
from vocalscreen.features import FeatureConfig

MANIFEST_HEADER = [
    "subject_id", "label", "audio_type", "recording_path", "age", "gender",
    "symptoms", "asthma", "smoker", "diagnosis_offset_days",
]


def _write_cohort_csv(tmp_path: Path, rows: list[dict], make_files=True) -> Path:
    audio_dir = tmp_path / "audio"
    audio_dir.mkdir(exist_ok=True)
    if make_files:
        rng = np.random.default_rng(0)
        for row in rows:
            target = tmp_path / row["recording_path"]
            if not target.exists():
                write_wav(target, 0.2 * rng.standard_normal(8000), 8000)
    path = tmp_path / "manifest.csv"
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=MANIFEST_HEADER)
        writer.writeheader()
        writer.writerows(rows)
    return path


def _row(sid, label, atype, age="35", **overrides):
    row = {
        "subject_id": sid,
        "label": label,
        "audio_type": atype,
        "recording_path": f"audio/{sid}_{atype}.wav",
        "age": age,
        "gender": "F",
        "symptoms": "",
        "asthma": "",
        "smoker": "",
        "diagnosis_offset_days": "",
    }
    row.update(overrides)
    return row


def _mem_subject(sid, positive, **kwargs):
    defaults = dict(
        recordings={AudioType.VOWEL_AH: Path(f"/dev/null/{sid}.wav")},
        age=None,
        gender=None,
        symptoms=frozenset(),
        asthma=None,
        smoker=None,
        diagnosis_offset_days=None,
    )
    defaults.update(kwargs)
    return SubjectRecord(
        subject_id=sid,
        label=Label.POSITIVE if positive else Label.NEGATIVE,
        **defaults,
    )


# --- load_manifest -----------------------------------------------------------


def test_manifest_groups_rows_by_subject(tmp_path):
    rows = []
    for sid, label in (("s1", "positive"), ("s2", "negative")):
        for atype in AudioType:
            rows.append(_row(sid, label, atype.value))
    manifest = load_manifest(_write_cohort_csv(tmp_path, rows))
    assert len(manifest.subjects) == 2
    for record in manifest.subjects:
        assert len(record.recordings) == 6


def test_manifest_conflicting_metadata(tmp_path):
    rows = [
        _row("s1", "positive", "vowel_ah", age="35"),
        _row("s1", "positive", "vowel_iy", age="36"),
        _row("s2", "negative", "vowel_ah"),
    ]
    with pytest.raises(ConflictingMetadataError):
        load_manifest(_write_cohort_csv(tmp_path, rows))


def test_manifest_duplicate_recording(tmp_path):
    rows = [
        _row("s1", "positive", "vowel_ah"),
        dict(_row("s1", "positive", "vowel_ah"), recording_path="audio/other.wav"),
        _row("s2", "negative", "vowel_ah"),
    ]
    with pytest.raises(DuplicateRecordingError):
        load_manifest(_write_cohort_csv(tmp_path, rows))


def test_manifest_labels_case_insensitive(tmp_path):
    rows = [_row("s1", "POSITIVE", "cough"), _row("s2", "Negative", "cough")]
    manifest = load_manifest(_write_cohort_csv(tmp_path, rows))
    by_id = {r.subject_id: r for r in manifest.subjects}
    assert by_id["s1"].label is Label.POSITIVE
    assert by_id["s2"].label is Label.NEGATIVE


def test_manifest_bad_label(tmp_path):
    rows = [_row("s1", "sick", "cough")]
    with pytest.raises(BadLabelError):
        load_manifest(_write_cohort_csv(tmp_path, rows))


def test_manifest_missing_file(tmp_path):
    rows = [_row("s1", "positive", "cough")]
    with pytest.raises(MissingFileError):
        load_manifest(_write_cohort_csv(tmp_path, rows, make_files=False))


def test_manifest_parses_covariates(tmp_path):
    rows = [
        _row(
            "s1", "positive", "cough",
            age="41", gender="m", symptoms="Cough; Fever",
            asthma="true", smoker="no", diagnosis_offset_days="12",
        ),
        _row("s2", "negative", "cough", age=""),
    ]
    manifest = load_manifest(_write_cohort_csv(tmp_path, rows))
    s1 = next(r for r in manifest.subjects if r.subject_id == "s1")
    s2 = next(r for r in manifest.subjects if r.subject_id == "s2")
    assert s1.age == 41 and s1.gender == "M"
    assert s1.symptoms == frozenset({"cough", "fever"})
    assert s1.asthma is True and s1.smoker is False
    assert s1.diagnosis_offset_days == 12
    assert s2.age is None


# --- folds ---------------------------------------------------------------------


def test_balanced_folds_five_by_five():
    ids = [f"p{i}" for i in range(5)] + [f"n{i}" for i in range(5)]
    labels = [1] * 5 + [0] * 5
    assignment = assign_speaker_folds(ids, labels, k=5, seed=0)
    for fold in range(5):
        members = [sid for sid, f in assignment.items() if f == fold]
        assert len(members) == 2
        assert sum(1 for sid in members if sid.startswith("p")) == 1


def test_fold_properties_random_manifests():
    rng = np.random.default_rng(0)
    for _ in range(30):
        k = int(rng.choice([3, 5, 10]))
        n_pos = int(rng.integers(k, 30))
        n_neg = int(rng.integers(k, 40))
        ids = [f"p{i}" for i in range(n_pos)] + [f"n{i}" for i in range(n_neg)]
        labels = [1] * n_pos + [0] * n_neg
        seed = int(rng.integers(0, 10_000))
        assignment = assign_speaker_folds(ids, labels, k, seed)
        assert set(assignment) == set(ids)  # every subject exactly once
        sizes = [0] * k
        pos_sizes = [0] * k
        for sid, fold in assignment.items():
            sizes[fold] += 1
            pos_sizes[fold] += sid.startswith("p")
        neg_sizes = [t - p for t, p in zip(sizes, pos_sizes)]
        assert max(sizes) - min(sizes) <= 1
        assert max(pos_sizes) - min(pos_sizes) <= 1
        assert max(neg_sizes) - min(neg_sizes) <= 1
        assert assignment == assign_speaker_folds(ids, labels, k, seed)


def test_different_seeds_usually_differ():
    ids = [f"p{i}" for i in range(8)] + [f"n{i}" for i in range(8)]
    labels = [1] * 8 + [0] * 8
    differing = sum(
        assign_speaker_folds(ids, labels, 4, seed)
        != assign_speaker_folds(ids, labels, 4, seed + 1)
        for seed in range(100)
    )
    assert differing >= 90


def test_too_few_subjects():
    with pytest.raises(TooFewSubjectsError):
        assign_speaker_folds(["a", "b", "c"], [1, 0, 0], k=2, seed=0)


def test_fold_assignment_wrapper():
    subjects = tuple(
        _mem_subject(f"s{i}", positive=i % 2 == 0) for i in range(10)
    )
    manifest = CohortManifest(subjects=subjects)
    folds = speaker_disjoint_folds(manifest, k=5, seed=3)
    assert folds.k == 5
    assert set(folds.assignment) == {f"s{i}" for i in range(10)}


# --- score fusion & metrics ------------------------------------------------------


def test_aggregate_examples():
    six = {atype: 0.7 for atype in AudioType}
    assert aggregate_subject_scores(six) == pytest.approx(0.7)
    assert aggregate_subject_scores(
        {AudioType.COUGH: 0.2, AudioType.COUNT: 0.4, AudioType.VOWEL_AH: 0.9}
    ) == pytest.approx(0.5)
    assert aggregate_subject_scores({AudioType.COUGH: 0.31}) == 0.31
    with pytest.raises(ValueError):
        aggregate_subject_scores({})


def test_auc_examples():
    assert auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc([0.5] * 6, [1, 1, 1, 0, 0, 0]) == 0.5
    with pytest.raises(SingleClassError):
        auc([0.1, 0.2], [1, 1])


def test_auc_matches_pairwise_oracle_exactly():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(4, 200))
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(rng.uniform(0, 1, n), 1)  # plenty of ties
        assert auc(scores, labels) == ref.pairwise_auc(scores.tolist(), labels.tolist())


def test_auc_invariant_under_monotone_transform():
    rng = np.random.default_rng(2)
    scores = rng.standard_normal(50)
    labels = rng.integers(0, 2, 50)
    labels[0], labels[1] = 0, 1
    assert auc(scores, labels) == auc(np.exp(scores), labels)


def test_roc_examples():
    points = roc_points([1.0, 0.0], [1, 0])
    assert points == [(0.0, 0.0, float("inf")), (0.0, 1.0, 1.0), (1.0, 1.0, 0.0)]
    perfect = roc_points([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert (0.0, 1.0) in [(f, t) for f, t, _ in perfect]


def test_roc_monotone_and_trapezoid_equals_auc():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(4, 120))
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(rng.standard_normal(n), 1)
        points = roc_points(scores, labels)
        fpr = np.array([p[0] for p in points])
        tpr = np.array([p[1] for p in points])
        assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
        area = np.trapezoid(tpr, fpr)
        assert abs(area - auc(scores, labels)) < 1e-12


def test_precision_at_recall_examples():
    assert precision_at_recall([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0], 0.5) == 1.0
    # only the all-inclusive threshold reaches recall 1.0 here
    scores = [0.9, 0.05, 0.6, 0.5, 0.4]
    labels = [1, 1, 0, 0, 0]
    assert precision_at_recall(scores, labels, 1.0) == pytest.approx(2 / 5)


def test_recall_at_fpr_examples():
    assert recall_at_fpr([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0], 0.01) == 1.0
    assert recall_at_fpr([0.5] * 8, [1, 1, 1, 1, 0, 0, 0, 0], 0.1) == 0.0


def test_threshold_metrics_match_enumeration_oracle():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = 20
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(rng.uniform(0, 1, n), 1)
        for target in (0.25, 0.5, 0.9):
            assert precision_at_recall(scores, labels, target) == pytest.approx(
                ref.exhaustive_precision_at_recall(scores.tolist(), labels.tolist(), target)
            )
        for budget in (0.01, 0.1, 0.3):
            assert recall_at_fpr(scores, labels, budget) == pytest.approx(
                ref.exhaustive_recall_at_fpr(scores.tolist(), labels.tolist(), budget)
            )


def test_pr_points_skip_zero_prediction():
    points = pr_points([0.9, 0.1], [1, 0])
    assert all(p[1] is not None for p in points)
    assert points[0] == (1.0, 1.0, 0.9)


# --- subgroups -------------------------------------------------------------------


def test_subgroup_recall_hand_count():
    subjects = tuple(
        [
            _mem_subject("a", True, smoker=True),
            _mem_subject("b", True, smoker=True),
            _mem_subject("c", True, smoker=False),
            _mem_subject("d", False, smoker=True),
            _mem_subject("e", False, smoker=False),
            _mem_subject("f", True),
        ]
    )
    scores = {"a": 0.9, "b": 0.2, "c": 0.8, "d": 0.1, "e": 0.3, "f": 0.7}
    recall, support = recall_within_subgroup(
        subjects, scores, threshold=0.5, predicate=lambda r: r.smoker is True
    )
    assert support == 2  # positives a and b
    assert recall == pytest.approx(0.5)  # only a clears the threshold

    overall, n_pos = recall_within_subgroup(
        subjects, scores, threshold=0.5, predicate=lambda r: True
    )
    assert n_pos == 4
    assert overall == pytest.approx(3 / 4)

    empty, zero = recall_within_subgroup(
        subjects, scores, threshold=0.5, predicate=lambda r: r.age == 99
    )
    assert empty is None and zero == 0


def test_builtin_subgroups_cover_spec_axes():
    subjects = tuple(
        [
            _mem_subject("a", True, age=25, symptoms=frozenset({"cough"})),
            _mem_subject("b", False, age=35, diagnosis_offset_days=10),
            _mem_subject("c", True, age=55, asthma=True, smoker=True),
        ]
    )
    names = [name for name, _ in builtin_subgroups(subjects)]
    for expected in (
        "all", "age<=30", "30<age<=40", "age>40", "age_missing",
        "symptom:cough", "asthma", "smoker",
        "diagnosis<=7", "7<diagnosis<=14", "diagnosis>14", "diagnosis_unknown",
    ):
        assert expected in names


# --- cross-validation protocol ----------------------------------------------------


def test_cross_validate_scores_each_subject_once(small_cohort):
    manifest, _ = small_cohort
    report = cross_validate(
        manifest, FeatureConfig(), "rf", params={"n_trees": 30}, k=3, seed=5
    )
    assert sorted(report.subject_scores) == sorted(
        r.subject_id for r in manifest.subjects
    )
    assert len(report.per_fold_auc) == 3
    assert 0.0 <= report.pooled_auc <= 1.0
    assert report.pooled_auc >= 0.9  # strong contrast cohort
    assert report.n_subjects == 20


def test_cross_validate_reports_are_reproducible(small_cohort, tmp_path):
    manifest, _ = small_cohort
    table = extract_cohort_features(manifest, FeatureConfig())
    kwargs = dict(params={"n_trees": 20}, k=3, seed=5, feature_table=table)
    a = cross_validate(manifest, FeatureConfig(), "rf", **kwargs)
    b = cross_validate(manifest, FeatureConfig(), "rf", **kwargs)
    write_report(a, tmp_path / "a")
    write_report(b, tmp_path / "b")
    for name in ("report.json", "roc_points.csv", "pr_points.csv", "subgroups.csv", "importances.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a.config_fingerprint == b.config_fingerprint


def test_parallel_extraction_matches_serial(small_cohort):
    manifest, _ = small_cohort
    serial = extract_cohort_features(manifest, FeatureConfig(), jobs=1)
    parallel = extract_cohort_features(manifest, FeatureConfig(), jobs=2)
    assert sorted(serial.vectors) == sorted(parallel.vectors)
    for rid in serial.vectors:
        assert np.array_equal(serial.vectors[rid], parallel.vectors[rid])


def test_operating_threshold_definition(small_cohort):
    manifest, _ = small_cohort
    report = cross_validate(
        manifest, FeatureConfig(), "rf", params={"n_trees": 30}, k=3, seed=5
    )
    ids = sorted(report.subject_scores)
    scores = [report.subject_scores[i] for i in ids]
    labels = [1 if i.startswith("pos") else 0 for i in ids]
    threshold, recall = operating_point_at_fpr(scores, labels, 0.1)
    assert report.operating_threshold == threshold
    assert report.recall_at_fpr_10 == recall


def test_per_audio_type_identical_audio_gives_equal_aucs(tmp_path):
    rng = np.random.default_rng(0)
    rows = []
    waves = {}
    for i in range(12):
        sid = f"s{i:02d}"
        label = "positive" if i % 2 == 0 else "negative"
        waves[sid] = 0.2 * rng.standard_normal(8000)
        for atype in AudioType:
            rows.append(_row(sid, label, atype.value))
    path = _write_cohort_csv(tmp_path, rows, make_files=False)
    for row in rows:
        write_wav(tmp_path / row["recording_path"], waves[row["subject_id"]], 8000)
    manifest = load_manifest(path)
    results = per_audio_type_eval(
        manifest, FeatureConfig(), "rf", params={"n_trees": 10}, k=3, seed=1
    )
    values = list(results.values())
    assert len(values) == 6
    assert all(v == values[0] for v in values)


def test_per_audio_type_one_entry_per_present_type(small_cohort):
    manifest, _ = small_cohort
    table = extract_cohort_features(manifest, FeatureConfig())
    results = per_audio_type_eval(
        manifest, FeatureConfig(), "rf", params={"n_trees": 10}, k=3, seed=1,
        feature_table=table,
    )
    assert set(results) == set(AudioType)


# --- symptom baseline ---------------------------------------------------------------


def test_symptom_baseline_never_opens_audio(monkeypatch):
    def boom(*args, **kwargs):
        raise AssertionError("symptom baseline must not decode audio")

    monkeypatch.setattr(audio_io, "load_wav", boom)
    rng = np.random.default_rng(0)
    subjects = tuple(
        _mem_subject(
            f"s{i:03d}",
            positive=i % 2 == 0,
            symptoms=frozenset({"fever"}) if i % 2 == 0 else frozenset(),
            asthma=bool(rng.integers(0, 2)),
        )
        for i in range(30)
    )
    manifest = CohortManifest(subjects=subjects)
    report = symptom_only_baseline(manifest, k=3, seed=0)
    assert report.pooled_auc == 1.0  # one symptom perfectly predicts the label


def test_symptom_baseline_null_band():
    rng = np.random.default_rng(1)
    subjects = []
    for i in range(200):
        symptoms = frozenset(
            tok for tok in ("cough", "fever", "sneeze") if rng.uniform() < 0.3
        )
        subjects.append(
            _mem_subject(f"s{i:03d}", positive=i % 2 == 0, symptoms=symptoms)
        )
    manifest = CohortManifest(subjects=tuple(subjects))
    report = symptom_only_baseline(manifest, k=5, seed=2)
    assert 0.4 <= report.pooled_auc <= 0.6
