"""Voice-biomarker screening toolkit.

Hand-crafted statistical spectral features plus simple binary classifiers
under speaker-disjoint cross-validation, with a deterministic synthetic
cohort generator for verification.
"""

from . import audio_io, classifiers, dsp, evaluation, features, synth
from .audio_io import AudioClip, AudioType, frame_signal, load_wav, resample
from .evaluation import (
    CohortManifest,
    EvalReport,
    Label,
    SubjectRecord,
    auc,
    cross_validate,
    load_manifest,
    per_audio_type_eval,
    speaker_disjoint_folds,
    symptom_only_baseline,
)
from .features import (
    CustomFeatureVector,
    FeatureConfig,
    FeatureSchema,
    StatSummary,
    build_custom_features,
    summarize_series,
)
from .synth import SynthSpec, generate_cohort

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "AudioType",
    "CohortManifest",
    "CustomFeatureVector",
    "EvalReport",
    "FeatureConfig",
    "FeatureSchema",
    "Label",
    "StatSummary",
    "SubjectRecord",
    "SynthSpec",
    "audio_io",
    "auc",
    "build_custom_features",
    "classifiers",
    "cross_validate",
    "dsp",
    "evaluation",
    "features",
    "frame_signal",
    "generate_cohort",
    "load_manifest",
    "load_wav",
    "per_audio_type_eval",
    "resample",
    "speaker_disjoint_folds",
    "summarize_series",
    "symptom_only_baseline",
    "synth",
]
