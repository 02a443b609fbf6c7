"""Deterministic synthetic cohort generator for desk-scale verification.

Vowels come from a source-filter chain: an impulse train with per-cycle
jitter and per-cycle amplitude shimmer drives two second-order resonators,
plus white noise at a target harmonic-to-noise ratio. Alphabet and count
recordings concatenate short random vowel segments; coughs are noise
bursts with decaying envelopes over a noise floor. The class contrast
(f0 / jitter / shimmer / formant / HNR shifts) applies only to positive
subjects and only on the flagged audio types, so cohorts with zero
contrast carry no class signal in the audio at all.

Every waveform and metadata draw is keyed by (seed, class, subject index,
audio type), making output byte-identical across runs and safe to generate
in parallel.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio_io import AudioType, write_wav
from .errors import IoWriteError
from .evaluation import CohortManifest, load_manifest

SYMPTOM_TOKENS = ("cough", "sneeze", "sore-throat", "breath-diff", "fever")

# Per-vowel scaling of the spec's base formant pair.
VOWEL_FORMANT_SCALE = {
    AudioType.VOWEL_AH: (1.0, 1.0),
    AudioType.VOWEL_IY: (0.43, 1.92),
    AudioType.VOWEL_UW: (0.43, 0.70),
}

_VOICED_RMS = 0.15
_BURST_RMS = 0.30
_PEAK_CAP = 0.95

# Keep the stable per-subject pitch trait small next to the per-recording
# wobble: a strong stable trait lets a finite cohort's accidental
# trait/label correlation inflate the zero-contrast AUC away from 0.5.
_SUBJECT_F0_SPREAD = 0.01
_RECORDING_F0_WOBBLE = 0.04


@dataclass(frozen=True)
class SynthSpec:
    """Cohort size, seed, and the class-contrast knobs."""

    n_per_class: int = 50
    seed: int = 42
    sample_rate: int = 8000
    vowel_duration_s: float = 2.0
    speech_duration_s: float = 2.5
    cough_duration_s: float = 1.5
    f0_hz: float = 120.0
    f0_shift_hz: float = 0.0
    jitter_negative: float = 0.002
    jitter_positive: float = 0.002
    shimmer_negative: float = 0.02
    shimmer_positive: float = 0.02
    formants_hz: tuple[float, float] = (700.0, 1200.0)
    formant_shift_hz: float = 0.0
    hnr_db_negative: float = 25.0
    hnr_db_positive: float = 25.0
    contrast_types: tuple[str, ...] = tuple(t.value for t in AudioType)
    symptom_label_coupling: float = 0.0

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")
        for name in ("vowel_duration_s", "speech_duration_s", "cough_duration_s"):
            if getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be >= 1 s")
        for name in ("f0_shift_hz", "formant_shift_hz"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for token in self.contrast_types:
            AudioType.parse(token)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["formants_hz"] = list(self.formants_hz)
        data["contrast_types"] = list(self.contrast_types)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown SynthSpec fields: {sorted(unknown)}")
        kwargs = dict(data)
        if "formants_hz" in kwargs:
            kwargs["formants_hz"] = tuple(kwargs["formants_hz"])
        if "contrast_types" in kwargs:
            kwargs["contrast_types"] = tuple(kwargs["contrast_types"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | Path) -> "SynthSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _resonate(excitation: np.ndarray, formants, sample_rate: int) -> np.ndarray:
    y = excitation
    for f in formants:
        bandwidth = 80.0 + 0.06 * f
        r = np.exp(-np.pi * bandwidth / sample_rate)
        a = [1.0, -2.0 * r * np.cos(2.0 * np.pi * f / sample_rate), r * r]
        y = lfilter([1.0], a, y)
    return y


def _voiced_segment(
    rng: np.random.Generator,
    n: int,
    sample_rate: int,
    f0: float,
    jitter: float,
    shimmer: float,
    formants,
    hnr_db: float,
) -> np.ndarray:
    excitation = np.zeros(n)
    period = sample_rate / f0
    t = float(rng.uniform(0.0, period))
    while t < n:
        excitation[int(t)] += 1.0 + shimmer * rng.standard_normal()
        t += period * max(0.2, 1.0 + jitter * rng.standard_normal())
    voiced = _resonate(excitation, formants, sample_rate)
    rms = float(np.sqrt(np.mean(voiced**2)))
    if rms > 0.0:
        voiced *= _VOICED_RMS / rms
    noise_rms = _VOICED_RMS * 10.0 ** (-hnr_db / 20.0)
    return voiced + noise_rms * rng.standard_normal(n)


def _finalize(samples: np.ndarray) -> np.ndarray:
    peak = float(np.max(np.abs(samples)))
    if peak > _PEAK_CAP:
        samples = samples * (_PEAK_CAP / peak)
    return samples


@dataclass(frozen=True)
class _VoiceParams:
    f0: float
    jitter: float
    shimmer: float
    formant_shift: float
    hnr_db: float


def _render_vowel(
    rng, spec: SynthSpec, voice: _VoiceParams, atype: AudioType
) -> np.ndarray:
    n = int(spec.vowel_duration_s * spec.sample_rate)
    scale = VOWEL_FORMANT_SCALE[atype]
    formants = [
        base * s + voice.formant_shift for base, s in zip(spec.formants_hz, scale)
    ]
    f0 = voice.f0 * (1.0 + _RECORDING_F0_WOBBLE * rng.standard_normal())
    return _finalize(
        _voiced_segment(
            rng,
            n,
            spec.sample_rate,
            f0,
            voice.jitter,
            voice.shimmer,
            formants,
            voice.hnr_db,
        )
    )


def _render_speech(rng, spec: SynthSpec, voice: _VoiceParams) -> np.ndarray:
    n = int(spec.speech_duration_s * spec.sample_rate)
    sr = spec.sample_rate
    out = np.zeros(n)
    vowel_types = list(VOWEL_FORMANT_SCALE)
    pos = 0
    while pos < n:
        seg_len = min(int(sr * rng.uniform(0.25, 0.5)), n - pos)
        if seg_len < int(0.1 * sr):
            break
        atype = vowel_types[int(rng.integers(0, len(vowel_types)))]
        scale = VOWEL_FORMANT_SCALE[atype]
        formants = [
            base * s + voice.formant_shift
            for base, s in zip(spec.formants_hz, scale)
        ]
        f0 = voice.f0 * float(rng.uniform(0.9, 1.15))
        out[pos : pos + seg_len] = _voiced_segment(
            rng, seg_len, sr, f0, voice.jitter, voice.shimmer, formants, voice.hnr_db
        )
        pos += seg_len + int(sr * rng.uniform(0.04, 0.12))
    return _finalize(out)


def _render_cough(rng, spec: SynthSpec, voice: _VoiceParams) -> np.ndarray:
    n = int(spec.cough_duration_s * spec.sample_rate)
    sr = spec.sample_rate
    floor_rms = _BURST_RMS * 10.0 ** (-voice.hnr_db / 20.0)
    out = floor_rms * rng.standard_normal(n)
    n_bursts = int(rng.integers(2, 5))
    for b in range(n_bursts):
        start = int(rng.uniform(0.0, max(1, n - int(0.3 * sr))))
        length = int(sr * rng.uniform(0.12, 0.25))
        length = min(length, n - start)
        if length <= 0:
            continue
        envelope = np.exp(-np.arange(length) / (0.05 * sr))
        gain = _BURST_RMS * float(rng.uniform(0.8, 1.2))
        out[start : start + length] += gain * envelope * rng.standard_normal(length)
    return _finalize(out)


def _voice_params(spec: SynthSpec, positive: bool, atype: AudioType, f0_base: float) -> _VoiceParams:
    contrast = positive and atype.value in spec.contrast_types
    return _VoiceParams(
        f0=f0_base + (spec.f0_shift_hz if contrast else 0.0),
        jitter=spec.jitter_positive if contrast else spec.jitter_negative,
        shimmer=spec.shimmer_positive if contrast else spec.shimmer_negative,
        formant_shift=spec.formant_shift_hz if contrast else 0.0,
        hnr_db=spec.hnr_db_positive if contrast else spec.hnr_db_negative,
    )


def _metadata(rng, positive: bool, coupling: float) -> dict:
    age = "" if rng.uniform() < 0.2 else str(int(rng.integers(18, 81)))
    gender = "M" if rng.uniform() < 0.5 else "F"
    p_symptom = min(1.0, max(0.0, 0.15 + (coupling if positive else 0.0)))
    symptoms = ";".join(tok for tok in SYMPTOM_TOKENS if rng.uniform() < p_symptom)
    asthma = "" if rng.uniform() < 0.3 else str(rng.uniform() < 0.12).lower()
    smoker = "" if rng.uniform() < 0.3 else str(rng.uniform() < 0.25).lower()
    if positive and rng.uniform() >= 0.1:
        diagnosis = str(int(rng.integers(0, 29)))
    else:
        diagnosis = ""
    return {
        "age": age,
        "gender": gender,
        "symptoms": symptoms,
        "asthma": asthma,
        "smoker": smoker,
        "diagnosis_offset_days": diagnosis,
    }


def generate_cohort(spec: SynthSpec, out_dir: str | Path) -> CohortManifest:
    """Write the cohort's WAV tree and manifest.csv; return the loaded manifest."""
    out_dir = Path(out_dir)
    audio_dir = out_dir / "audio"
    try:
        audio_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoWriteError(f"cannot create {audio_dir}: {exc}") from None

    renderers = {
        AudioType.VOWEL_AH: _render_vowel,
        AudioType.VOWEL_IY: _render_vowel,
        AudioType.VOWEL_UW: _render_vowel,
        AudioType.ALPHABET: lambda rng, s, v, _t: _render_speech(rng, s, v),
        AudioType.COUNT: lambda rng, s, v, _t: _render_speech(rng, s, v),
        AudioType.COUGH: lambda rng, s, v, _t: _render_cough(rng, s, v),
    }
    rows: list[dict] = []
    try:
        for class_bit, prefix in ((0, "neg"), (1, "pos")):
            positive = class_bit == 1
            for idx in range(spec.n_per_class):
                sid = f"{prefix}{idx:03d}"
                subject_rng = np.random.default_rng([spec.seed, class_bit, idx, 7])
                f0_base = spec.f0_hz * (
                    1.0 + _SUBJECT_F0_SPREAD * subject_rng.standard_normal()
                )
                meta = _metadata(
                    np.random.default_rng([spec.seed, class_bit, idx, 101]),
                    positive,
                    spec.symptom_label_coupling,
                )
                for type_idx, atype in enumerate(AudioType):
                    rng = np.random.default_rng(
                        [spec.seed, class_bit, idx, type_idx]
                    )
                    voice = _voice_params(spec, positive, atype, f0_base)
                    samples = renderers[atype](rng, spec, voice, atype)
                    rel_path = Path("audio") / f"{sid}_{atype.value}.wav"
                    write_wav(out_dir / rel_path, samples, spec.sample_rate)
                    rows.append(
                        {
                            "subject_id": sid,
                            "label": "positive" if positive else "negative",
                            "audio_type": atype.value,
                            "recording_path": rel_path.as_posix(),
                            **meta,
                        }
                    )
        manifest_path = out_dir / "manifest.csv"
        with manifest_path.open("w", newline="") as handle:
            writer = csv.DictWriter(
                handle,
                fieldnames=[
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
                ],
            )
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise IoWriteError(f"failed writing cohort under {out_dir}: {exc}") from None
    return load_manifest(manifest_path)
