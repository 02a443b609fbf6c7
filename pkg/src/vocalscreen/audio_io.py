"""WAV decoding, resampling, and framing.

All recordings are normalized to mono float64 in [-1, 1]. The analysis
framing is center-aligned: the signal is reflect-padded by half a frame on
each side so the frame count depends only on the signal length and hop.
"""

from __future__ import annotations

import math
import struct
import wave
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import upfirdn

from .errors import (
    ClipTooShortError,
    CorruptHeaderError,
    EmptyAudioError,
    UnsupportedCodecError,
)

DEFAULT_SAMPLE_RATE = 8000
DEFAULT_FRAME_LEN = 2048
DEFAULT_HOP = 512

# Polyphase anti-alias filter: windowed sinc, Kaiser window.
KAISER_BETA = 8.6
TAPS_PER_PHASE = 64

_PCM16_SCALE = 32768.0
_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3


class AudioType(Enum):
    VOWEL_AH = "vowel_ah"
    VOWEL_IY = "vowel_iy"
    VOWEL_UW = "vowel_uw"
    ALPHABET = "alphabet"
    COUNT = "count"
    COUGH = "cough"

    @classmethod
    def parse(cls, token: str) -> "AudioType":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise ValueError(f"unknown audio type {token!r}") from None


@dataclass(frozen=True)
class AudioClip:
    """Decoded mono waveform plus its recording identity."""

    samples: np.ndarray
    sample_rate: int
    recording_id: str
    audio_type: AudioType | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise EmptyAudioError(f"{self.recording_id}: clip has no samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        peak = float(np.max(np.abs(samples))) if samples.size else 0.0
        if peak > 1.0 + 1e-6:
            raise ValueError(f"{self.recording_id}: samples exceed [-1, 1] (peak {peak:.4g})")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrameMatrix:
    """Center-aligned analysis frames; rows are views of the padded signal."""

    frames: np.ndarray
    frame_len: int
    hop: int
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def _read_chunks(data: bytes) -> dict[bytes, bytes]:
    chunks: dict[bytes, bytes] = {}
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        payload = data[pos + 8 : pos + 8 + size]
        if len(payload) < size and cid != b"data":
            raise CorruptHeaderError(f"truncated {cid!r} chunk")
        if cid not in chunks:  # first occurrence wins
            chunks[cid] = payload
        pos += 8 + size + (size & 1)
    return chunks


def load_wav(path: str | Path, audio_type: AudioType | None = None) -> AudioClip:
    """Decode a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit, mono/stereo).

    Stereo is averaged to mono; integer samples are scaled by 1/32768.
    The recording id is the file stem; the audio type comes from the caller
    (normally the cohort manifest), never from the filename.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")
    chunks = _read_chunks(data)
    fmt = chunks.get(b"fmt ")
    if fmt is None or len(fmt) < 16:
        raise CorruptHeaderError(f"{path}: missing fmt chunk")
    audio_format, n_channels, sample_rate, _, block_align, bits = struct.unpack(
        "<HHIIHH", fmt[:16]
    )
    if n_channels < 1 or sample_rate <= 0:
        raise CorruptHeaderError(f"{path}: invalid fmt chunk")
    if audio_format == _WAVE_FORMAT_PCM and bits == 16:
        dtype = np.dtype("<i2")
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedCodecError(
            f"{path}: format {audio_format} / {bits}-bit not supported"
        )
    raw = chunks.get(b"data")
    if raw is None:
        raise CorruptHeaderError(f"{path}: missing data chunk")
    frame_bytes = dtype.itemsize * n_channels
    n_frames = len(raw) // frame_bytes
    if n_frames == 0:
        raise EmptyAudioError(f"{path}: data chunk holds no samples")
    values = np.frombuffer(raw[: n_frames * frame_bytes], dtype=dtype)
    samples = values.astype(np.float64)
    if audio_format == _WAVE_FORMAT_PCM:
        samples /= _PCM16_SCALE
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return AudioClip(
        samples=samples,
        sample_rate=int(sample_rate),
        recording_id=path.stem,
        audio_type=audio_type,
    )


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write mono float samples as a 16-bit PCM WAV file.

    Quantization mirrors the reader's 1/32768 scaling; +1.0 clips to 32767.
    """
    scaled = np.round(np.asarray(samples, dtype=np.float64) * _PCM16_SCALE)
    pcm = np.clip(scaled, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as out:
        out.setnchannels(1)
        out.setsampwidth(2)
        out.setframerate(int(sample_rate))
        out.writeframes(pcm.tobytes())


def _design_lowpass(up: int, down: int) -> np.ndarray:
    """Kaiser-windowed sinc for the polyphase resampler (odd length)."""
    n_taps = TAPS_PER_PHASE * up + 1
    cutoff = min(1.0 / up, 1.0 / down)  # fraction of the upsampled Nyquist
    m = np.arange(n_taps) - (n_taps - 1) / 2.0
    h = cutoff * np.sinc(cutoff * m) * np.kaiser(n_taps, KAISER_BETA)
    return h / h.sum()


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Polyphase windowed-sinc resampling to ``target_rate``.

    Output length is round(n * target / source); equal rates return the
    clip unchanged.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    source_rate = clip.sample_rate
    if target_rate == source_rate:
        return clip
    g = math.gcd(source_rate, target_rate)
    up, down = target_rate // g, source_rate // g
    h = _design_lowpass(up, down) * up
    delay = (len(h) - 1) // 2
    n_pre = (-delay) % down  # shift the group delay onto the output grid
    h_padded = np.concatenate([np.zeros(n_pre), h])
    out = upfirdn(h_padded, clip.samples, up=up, down=down)
    skip = (delay + n_pre) // down
    n_out = int(round(clip.samples.size * target_rate / source_rate))
    out = out[skip : skip + n_out]
    if out.size < n_out:
        out = np.pad(out, (0, n_out - out.size))
    return replace(clip, samples=out, sample_rate=int(target_rate))


def frame_signal(
    clip: AudioClip, frame_len: int = DEFAULT_FRAME_LEN, hop: int = DEFAULT_HOP
) -> FrameMatrix:
    """Slice the clip into overlapping frames with center alignment.

    The signal is reflect-padded by frame_len // 2 on each side and the
    trailing partial frame is dropped, so
    n_frames = 1 + (len(padded) - frame_len) // hop.
    """
    if frame_len < 2 or hop < 1:
        raise ValueError("frame_len must be >= 2 and hop >= 1")
    x = clip.samples
    if x.size < 2:
        raise ClipTooShortError(
            f"{clip.recording_id}: need at least 2 samples to reflect-pad"
        )
    pad = frame_len // 2
    padded = np.pad(x, pad, mode="reflect")
    n_frames = 1 + (padded.size - frame_len) // hop
    frames = sliding_window_view(padded, frame_len)[::hop][:n_frames]
    return FrameMatrix(
        frames=frames, frame_len=frame_len, hop=hop, sample_rate=clip.sample_rate
    )
