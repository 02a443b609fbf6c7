"""Batch command-line front end.

Subcommands map 1:1 onto pipeline operations: synth, extract, cv, grid,
per-type, symptom-baseline, importance. The resolved configuration is
echoed to the output directory as run_config.json, and two invocations
with identical resolved configs produce byte-identical reports.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import classifiers, evaluation, features, synth
from .errors import VocalScreenError
from .features import FeatureConfig

JOBS_ENV_VAR = "VOCALSCREEN_JOBS"
DEFAULT_SEED = 42


class _ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 with usage, not argparse's exit 2
        raise _ValidationError(f"{self.format_usage()}error: {message}")


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV_VAR, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _add_feature_flags(parser: argparse.ArgumentParser, with_cache: bool):
    parser.add_argument("--sample-rate", type=int, default=8000)
    parser.add_argument("--stats-on-deltas", action="store_true")
    parser.add_argument(
        "--embedding",
        action="append",
        default=[],
        metavar="LABEL=PATH",
        help="external embedding table to fuse (repeatable)",
    )
    if with_cache:
        parser.add_argument("--features-cache", default=None, metavar="CSV")


def _add_classifier_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--classifier", choices=classifiers.CLASSIFIER_KINDS, default="rf")
    parser.add_argument("--n-trees", type=int, default=None)
    parser.add_argument("--max-features", type=int, default=None)
    parser.add_argument("--min-samples-leaf", type=int, default=None)
    parser.add_argument("--l2-lambda", type=float, default=None)
    parser.add_argument("--svm-c", type=float, default=None)
    parser.add_argument("--gamma", type=float, default=None)


def _build_parser() -> _Parser:
    parser = _Parser(prog="vocalscreen")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic cohort")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--spec", default=None, help="SynthSpec JSON file")
    p_synth.add_argument("--n-per-class", type=int, default=None)
    p_synth.add_argument("--seed", type=int, default=None)

    p_extract = sub.add_parser("extract", help="extract features to a cache CSV")
    p_extract.add_argument("--manifest", required=True)
    p_extract.add_argument("--out", required=True, help="features CSV path")
    p_extract.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_extract.add_argument("--jobs", type=int, default=None)
    _add_feature_flags(p_extract, with_cache=False)

    for name, help_text in (
        ("cv", "speaker-disjoint cross-validation report"),
        ("per-type", "per-audio-type AUC report"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--manifest", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--k", type=int, default=5, help="folds (3, 5 or 10 typical)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--jobs", type=int, default=None)
        _add_feature_flags(p, with_cache=True)
        _add_classifier_flags(p)

    p_grid = sub.add_parser("grid", help="hyper-parameter grid search")
    p_grid.add_argument("--manifest", required=True)
    p_grid.add_argument("--out", required=True)
    p_grid.add_argument("--grid", required=True, help="JSON of param -> candidates")
    p_grid.add_argument("--k", type=int, default=5)
    p_grid.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_grid.add_argument("--jobs", type=int, default=None)
    _add_feature_flags(p_grid, with_cache=True)
    p_grid.add_argument(
        "--classifier", choices=classifiers.CLASSIFIER_KINDS, default="rf"
    )

    p_sym = sub.add_parser("symptom-baseline", help="symptoms-only RF baseline")
    p_sym.add_argument("--manifest", required=True)
    p_sym.add_argument("--out", required=True)
    p_sym.add_argument("--k", type=int, default=5)
    p_sym.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p_imp = sub.add_parser("importance", help="train RF on all rows, rank features")
    p_imp.add_argument("--manifest", required=True)
    p_imp.add_argument("--out", required=True)
    p_imp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_imp.add_argument("--jobs", type=int, default=None)
    _add_feature_flags(p_imp, with_cache=True)
    _add_classifier_flags(p_imp)
    return parser


def _parse_embeddings(pairs: list[str]) -> tuple[tuple[str, str], ...]:
    out = []
    for pair in pairs:
        label, sep, path = pair.partition("=")
        if not sep or not label or not path:
            raise _ValidationError(f"--embedding expects LABEL=PATH, got {pair!r}")
        if not Path(path).is_file():
            raise _ValidationError(f"embedding table not found: {path}")
        out.append((label, path))
    return tuple(out)


def _feature_config(args) -> FeatureConfig:
    return FeatureConfig(
        sample_rate=args.sample_rate,
        stats_on_deltas=args.stats_on_deltas,
        embeddings=_parse_embeddings(args.embedding),
    )


def _classifier_params(args) -> dict:
    params = dict(classifiers.DEFAULT_PARAMS[args.classifier])
    overrides = {
        "rf": {
            "n_trees": args.n_trees,
            "max_features": args.max_features,
            "min_samples_leaf": args.min_samples_leaf,
        },
        "lr": {"l2_lambda": args.l2_lambda},
        "svm": {"C": args.svm_c, "gamma": args.gamma},
    }[args.classifier]
    for key, value in overrides.items():
        if value is not None:
            params[key] = value
    return params


def _require_manifest(args) -> Path:
    path = Path(args.manifest)
    if not path.is_file():
        raise _ValidationError(f"manifest not found: {path}")
    return path


def _require_k(args) -> int:
    if args.k < 2:
        raise _ValidationError("k must be ≥ 2")
    return args.k


def _resolve_jobs(args) -> int:
    jobs = getattr(args, "jobs", None)
    if jobs is None:
        return _default_jobs()
    if jobs < 1:
        raise _ValidationError("--jobs must be >= 1")
    return jobs


def _write_run_config(target: Path, config: dict):
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")


def _load_feature_table(args, manifest, config, jobs):
    cache = getattr(args, "features_cache", None)
    if cache:
        if not Path(cache).is_file():
            raise _ValidationError(f"features cache not found: {cache}")
        schema, vectors = features.read_feature_cache(cache)
        return evaluation.FeatureTable(schema=schema, vectors=vectors)
    return evaluation.extract_cohort_features(manifest, config, jobs=jobs)


def _fold_logger(fold: int, k: int, fold_auc: float):
    print(f"fold {fold + 1}/{k} auc={fold_auc:.4f}", file=sys.stderr)


def _run_synth(args) -> int:
    spec = synth.SynthSpec()
    if args.spec:
        if not Path(args.spec).is_file():
            raise _ValidationError(f"spec file not found: {args.spec}")
        try:
            spec = synth.SynthSpec.from_json(args.spec)
        except (ValueError, TypeError, json.JSONDecodeError) as exc:
            raise _ValidationError(f"bad synth spec: {exc}") from None
    overrides = {}
    if args.n_per_class is not None:
        overrides["n_per_class"] = args.n_per_class
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        spec = synth.SynthSpec.from_dict({**spec.to_dict(), **overrides})
    out = Path(args.out)
    manifest = synth.generate_cohort(spec, out)
    _write_run_config(
        out / "run_config.json",
        {"subcommand": "synth", "out": str(out), "spec": spec.to_dict()},
    )
    print(f"wrote {len(manifest.subjects)} subjects under {out}", file=sys.stderr)
    return 0


def _run_extract(args) -> int:
    manifest_path = _require_manifest(args)
    config = _feature_config(args)
    jobs = _resolve_jobs(args)
    manifest = evaluation.load_manifest(manifest_path)
    table = evaluation.extract_cohort_features(manifest, config, jobs=jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    features.write_feature_cache(out, table.schema, table.vectors)
    _write_run_config(
        out.parent / f"{out.stem}.run_config.json",
        {
            "subcommand": "extract",
            "manifest": str(manifest_path),
            "out": str(out),
            "seed": args.seed,
            "jobs": jobs,
            "feature_config": config.as_dict(),
        },
    )
    print(f"wrote {len(table.vectors)} feature rows to {out}", file=sys.stderr)
    return 0


def _run_cv(args) -> int:
    manifest_path = _require_manifest(args)
    k = _require_k(args)
    jobs = _resolve_jobs(args)
    config = _feature_config(args)
    params = _classifier_params(args)
    manifest = evaluation.load_manifest(manifest_path)
    table = _load_feature_table(args, manifest, config, jobs)
    report = evaluation.cross_validate(
        manifest,
        config,
        args.classifier,
        params=params,
        k=k,
        seed=args.seed,
        jobs=jobs,
        feature_table=table,
        progress=_fold_logger,
    )
    out = Path(args.out)
    evaluation.write_report(report, out)
    _write_run_config(
        out / "run_config.json",
        {
            "subcommand": "cv",
            "manifest": str(manifest_path),
            "out": str(out),
            "classifier": args.classifier,
            "params": params,
            "k": k,
            "seed": args.seed,
            "jobs": jobs,
            "feature_config": config.as_dict(),
            "features_cache": args.features_cache,
        },
    )
    print(f"pooled auc={report.pooled_auc:.4f}", file=sys.stderr)
    return 0


def _run_per_type(args) -> int:
    manifest_path = _require_manifest(args)
    k = _require_k(args)
    jobs = _resolve_jobs(args)
    config = _feature_config(args)
    params = _classifier_params(args)
    manifest = evaluation.load_manifest(manifest_path)
    table = _load_feature_table(args, manifest, config, jobs)
    results = evaluation.per_audio_type_eval(
        manifest,
        config,
        args.classifier,
        params=params,
        k=k,
        seed=args.seed,
        jobs=jobs,
        feature_table=table,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {atype.value: auc_value for atype, auc_value in results.items()}
    (out / "per_type.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    _write_run_config(
        out / "run_config.json",
        {
            "subcommand": "per-type",
            "manifest": str(manifest_path),
            "out": str(out),
            "classifier": args.classifier,
            "params": params,
            "k": k,
            "seed": args.seed,
            "jobs": jobs,
            "feature_config": config.as_dict(),
            "features_cache": args.features_cache,
        },
    )
    for atype, value in payload.items():
        print(f"{atype}: auc={value:.4f}", file=sys.stderr)
    return 0


def _run_grid(args) -> int:
    manifest_path = _require_manifest(args)
    k = _require_k(args)
    jobs = _resolve_jobs(args)
    config = _feature_config(args)
    grid_path = Path(args.grid)
    if not grid_path.is_file():
        raise _ValidationError(f"grid file not found: {grid_path}")
    try:
        grid_axes = json.loads(grid_path.read_text())
        grid = classifiers.ParamGrid.from_dict(grid_axes)
    except (json.JSONDecodeError, ValueError, AttributeError) as exc:
        raise _ValidationError(f"bad grid file: {exc}") from None
    manifest = evaluation.load_manifest(manifest_path)
    table = _load_feature_table(args, manifest, config, jobs)
    X, row_subjects, _ = evaluation.cohort_rows(manifest, table)
    label_of = {r.subject_id: 1 if r.is_positive else 0 for r in manifest.subjects}
    y = np.asarray([label_of[sid] for sid in row_subjects])
    result = classifiers.grid_search(
        args.classifier, grid, X, y, row_subjects, k, args.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "grid.json").write_text(
        json.dumps(
            {
                "best_params": result.best_params,
                "best_mean_auc": result.best_mean_auc,
                "cells": [
                    {"params": params, "mean_auc": mean_auc}
                    for params, mean_auc in result.cells
                ],
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    _write_run_config(
        out / "run_config.json",
        {
            "subcommand": "grid",
            "manifest": str(manifest_path),
            "out": str(out),
            "classifier": args.classifier,
            "grid": grid_axes,
            "k": k,
            "seed": args.seed,
            "jobs": jobs,
            "feature_config": config.as_dict(),
            "features_cache": args.features_cache,
        },
    )
    print(
        f"best {result.best_params} mean_auc={result.best_mean_auc:.4f}",
        file=sys.stderr,
    )
    return 0


def _run_symptom_baseline(args) -> int:
    manifest_path = _require_manifest(args)
    k = _require_k(args)
    manifest = evaluation.load_manifest(manifest_path)
    report = evaluation.symptom_only_baseline(manifest, k=k, seed=args.seed)
    out = Path(args.out)
    evaluation.write_report(report, out)
    _write_run_config(
        out / "run_config.json",
        {
            "subcommand": "symptom-baseline",
            "manifest": str(manifest_path),
            "out": str(out),
            "k": k,
            "seed": args.seed,
        },
    )
    print(f"pooled auc={report.pooled_auc:.4f}", file=sys.stderr)
    return 0


def _run_importance(args) -> int:
    manifest_path = _require_manifest(args)
    jobs = _resolve_jobs(args)
    config = _feature_config(args)
    params = _classifier_params(args)
    if args.classifier != "rf":
        raise _ValidationError("importance requires --classifier rf")
    manifest = evaluation.load_manifest(manifest_path)
    table = _load_feature_table(args, manifest, config, jobs)
    X, row_subjects, _ = evaluation.cohort_rows(manifest, table)
    label_of = {r.subject_id: 1 if r.is_positive else 0 for r in manifest.subjects}
    y = np.asarray([label_of[sid] for sid in row_subjects])
    model = classifiers.train_classifier("rf", X, y, params, args.seed)
    model.feature_names = table.schema.names
    ranking = classifiers.rf_feature_importance(model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "importances.csv").open("w", newline="") as handle:
        handle.write("rank,feature,importance\n")
        for rank, (name, value) in enumerate(ranking, start=1):
            handle.write(f"{rank},{name},{value!r}\n")
    _write_run_config(
        out / "run_config.json",
        {
            "subcommand": "importance",
            "manifest": str(manifest_path),
            "out": str(out),
            "params": params,
            "seed": args.seed,
            "jobs": jobs,
            "feature_config": config.as_dict(),
            "features_cache": args.features_cache,
        },
    )
    print(f"top feature: {ranking[0][0]}", file=sys.stderr)
    return 0


_RUNNERS = {
    "synth": _run_synth,
    "extract": _run_extract,
    "cv": _run_cv,
    "per-type": _run_per_type,
    "grid": _run_grid,
    "symptom-baseline": _run_symptom_baseline,
    "importance": _run_importance,
}


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        runner = _RUNNERS[args.subcommand]
    except _ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        return runner(args)
    except _ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (VocalScreenError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
