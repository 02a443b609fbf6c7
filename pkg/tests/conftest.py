"""Shared fixtures: clip factories, hand-built WAV bytes, small cohorts."""

from __future__ import annotations

import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `reference` imports

from vocalscreen.audio_io import AudioClip


def make_clip(samples, sample_rate=8000, recording_id="test", audio_type=None):
    return AudioClip(
        samples=np.asarray(samples, dtype=np.float64),
        sample_rate=sample_rate,
        recording_id=recording_id,
        audio_type=audio_type,
    )


def tone_clip(freq_hz, duration_s=1.0, sample_rate=8000, amplitude=0.5, phase=0.0):
    t = np.arange(int(duration_s * sample_rate)) / sample_rate
    return make_clip(amplitude * np.sin(2 * np.pi * freq_hz * t + phase), sample_rate)


def noise_clip(seed, duration_s=1.0, sample_rate=8000, amplitude=0.3):
    rng = np.random.default_rng(seed)
    n = int(duration_s * sample_rate)
    return make_clip(amplitude * rng.uniform(-1.0, 1.0, size=n), sample_rate)


def random_clip(seed, sample_rate=8000):
    """Mixed tone + noise clip with a random length between 1 and 2 s."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(sample_rate, 2 * sample_rate))
    t = np.arange(n) / sample_rate
    x = 0.05 * rng.standard_normal(n)
    for _ in range(int(rng.integers(1, 4))):
        freq = float(rng.uniform(60.0, 3500.0))
        x += rng.uniform(0.05, 0.3) * np.sin(2 * np.pi * freq * t + rng.uniform(0, 7))
    peak = np.max(np.abs(x))
    if peak > 0.95:
        x *= 0.95 / peak
    return make_clip(x, sample_rate, recording_id=f"rand{seed}")


def pcm16_wav_bytes(samples_int16, sample_rate=8000, n_channels=1):
    """Hand-assembled RIFF for decoder tests (independent of the writer)."""
    data = b"".join(struct.pack("<h", v) for v in samples_int16)
    return _riff(data, sample_rate, n_channels, fmt=1, bits=16)


def float32_wav_bytes(samples, sample_rate=8000, n_channels=1):
    data = b"".join(struct.pack("<f", v) for v in samples)
    return _riff(data, sample_rate, n_channels, fmt=3, bits=32)


def _riff(data, sample_rate, n_channels, fmt, bits):
    block_align = n_channels * bits // 8
    byte_rate = sample_rate * block_align
    fmt_chunk = struct.pack(
        "<HHIIHH", fmt, n_channels, sample_rate, byte_rate, block_align, bits
    )
    body = (
        b"WAVE"
        + b"fmt "
        + struct.pack("<I", len(fmt_chunk))
        + fmt_chunk
        + b"data"
        + struct.pack("<I", len(data))
        + data
    )
    return b"RIFF" + struct.pack("<I", len(body)) + body


@pytest.fixture(scope="session")
def small_cohort(tmp_path_factory):
    """10+10 subjects with a strong voicing contrast; cheap enough to share."""
    from vocalscreen.synth import SynthSpec, generate_cohort

    out = tmp_path_factory.mktemp("small_cohort")
    spec = SynthSpec(
        n_per_class=10,
        seed=11,
        jitter_negative=0.002,
        jitter_positive=0.02,
        hnr_db_negative=30.0,
        hnr_db_positive=12.0,
        vowel_duration_s=1.2,
        speech_duration_s=1.4,
        cough_duration_s=1.0,
    )
    manifest = generate_cohort(spec, out)
    return manifest, out
