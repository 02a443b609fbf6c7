"""Frame-level spectral descriptors and the MFCC family.

Conventions are pinned here so results stay bit-comparable across
implementations:

* periodic Hann window w[n] = 0.5 - 0.5*cos(2*pi*n/N)
* mel scale m(f) = 2595 * log10(1 + f/700), 128 triangular filters with
  edges equally spaced in mel over [0, sr/2], each area-normalized by
  2 / (f_hi - f_lo)
* log-mel in dB: 10*log10(max(p, 1e-10)), clamped per recording to
  max(L) - 80
* DCT-II with orthonormal scaling along the mel axis
* delta is a local regression slope over an odd window (default 9) with
  replicate edge padding; spectral centroid weights magnitudes, roll-off
  accumulates power.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from .audio_io import (
    DEFAULT_FRAME_LEN,
    DEFAULT_HOP,
    AudioClip,
    FrameMatrix,
    frame_signal,
)
from .errors import ClipTooShortError, DegenerateFilterbankError

DEFAULT_N_MELS = 128
DEFAULT_N_MFCC = 20
DEFAULT_DELTA_WIDTH = 9
DEFAULT_ROLLOFF_PCT = 0.85

LOG_FLOOR = 1e-10
DB_DYNAMIC_RANGE = 80.0

TEMPO_START_BPM = 120.0
TEMPO_SIGMA_OCTAVES = 1.0
TEMPO_MIN_BPM = 30.0
TEMPO_MAX_BPM = 300.0


@dataclass(frozen=True)
class PowerSpectrogram:
    """Per-frame power spectrum; columns cover 0 .. sample_rate/2."""

    bins: np.ndarray  # n_frames x (n_fft/2 + 1)
    bin_hz: float

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.bins.shape[1]) * self.bin_hz


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # n_mels x (n_fft/2 + 1)
    empty_rows: tuple[int, ...] = ()


@dataclass(frozen=True)
class TimeSeriesFeature:
    name: str
    values: np.ndarray


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window (denominator N, not N-1)."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def power_spectrogram(fm: FrameMatrix, n_fft: int | None = None) -> PowerSpectrogram:
    """Windowed real FFT power per frame: |X[k]|^2 with a periodic Hann."""
    if n_fft is None:
        n_fft = fm.frame_len
    if n_fft != fm.frame_len:
        raise ValueError(f"n_fft ({n_fft}) must equal frame_len ({fm.frame_len})")
    spectrum = np.fft.rfft(fm.frames * hann_window(n_fft), n=n_fft, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    return PowerSpectrogram(bins=power, bin_hz=fm.sample_rate / n_fft)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank_matrix(
    n_mels: int, sample_rate: int, n_fft: int
) -> MelFilterbank:
    """Triangular mel filterbank over [0, sample_rate/2].

    Filter i rises over (edge_i, edge_{i+1}) and falls over
    (edge_{i+1}, edge_{i+2}); rows are scaled by 2 / (f_hi - f_lo) so each
    triangle has unit area. Rows whose support contains no FFT bin are left
    all-zero and flagged; it is an error only if every row is empty.
    """
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    edges = mel_to_hz(np.linspace(0.0, float(hz_to_mel(sample_rate / 2.0)), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    weights = np.zeros((n_mels, bin_freqs.size))
    empty: list[int] = []
    for i in range(n_mels):
        lo, center, hi = edges[i], edges[i + 1], edges[i + 2]
        if center - lo <= 0.0 or hi - center <= 0.0:
            empty.append(i)
            continue
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        if not np.any(tri > 0.0):
            empty.append(i)
            continue
        weights[i] = tri * (2.0 / (hi - lo))
    if len(empty) == n_mels:
        raise DegenerateFilterbankError(
            f"all {n_mels} mel filters are empty on a {n_fft}-point grid"
        )
    if empty:
        warnings.warn(f"{len(empty)} mel filters have empty support", stacklevel=2)
    return MelFilterbank(weights=weights, empty_rows=tuple(empty))


@lru_cache(maxsize=8)
def _cached_filterbank(n_mels: int, sample_rate: int, n_fft: int) -> np.ndarray:
    return mel_filterbank_matrix(n_mels, sample_rate, n_fft).weights


def log_mel_spectrogram(
    clip: AudioClip,
    n_fft: int = DEFAULT_FRAME_LEN,
    hop: int = DEFAULT_HOP,
    n_mels: int = DEFAULT_N_MELS,
) -> np.ndarray:
    """Log-mel energies in dB with the per-recording dynamic-range clamp."""
    ps = power_spectrogram(frame_signal(clip, n_fft, hop), n_fft)
    mel_power = ps.bins @ _cached_filterbank(n_mels, clip.sample_rate, n_fft).T
    log_mel = 10.0 * np.log10(np.maximum(mel_power, LOG_FLOOR))
    return np.maximum(log_mel, log_mel.max() - DB_DYNAMIC_RANGE)


def mfcc(
    clip: AudioClip,
    n_mfcc: int = DEFAULT_N_MFCC,
    n_fft: int = DEFAULT_FRAME_LEN,
    hop: int = DEFAULT_HOP,
    n_mels: int = DEFAULT_N_MELS,
) -> np.ndarray:
    """MFCC matrix (n_frames x n_mfcc): orthonormal DCT-II of the log-mels."""
    log_mel = log_mel_spectrogram(clip, n_fft=n_fft, hop=hop, n_mels=n_mels)
    return dct(log_mel, type=2, norm="ortho", axis=1)[:, :n_mfcc]


def delta(series: np.ndarray, width: int = DEFAULT_DELTA_WIDTH) -> np.ndarray:
    """Local regression slope along the frame axis (axis 0).

    d[t] = sum_k k * (x[t+k] - x[t-k]) / (2 * sum_k k^2) for k = 1..K,
    K = (width - 1) // 2, with replicate padding at the edges. Apply twice
    for the double-difference (acceleration).
    """
    if width < 3 or width % 2 == 0:
        raise ValueError("width must be odd and >= 3")
    x = np.asarray(series, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    half = (width - 1) // 2
    n = x.shape[0]
    padded = np.pad(x, ((half, half), (0, 0)), mode="edge")
    num = np.zeros_like(x)
    for k in range(1, half + 1):
        num += k * (padded[half + k : half + k + n] - padded[half - k : half - k + n])
    out = num / (2.0 * sum(k * k for k in range(1, half + 1)))
    return out[:, 0] if squeeze else out


def zero_crossing_rate(fm: FrameMatrix) -> TimeSeriesFeature:
    """Fraction of adjacent sample pairs that change sign (sign(0) = +)."""
    signs = np.where(fm.frames >= 0.0, 1, -1)
    crossings = np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1)
    rate = crossings / (fm.frame_len - 1)
    return TimeSeriesFeature(name="zcr", values=rate)


def spectral_centroid(ps: PowerSpectrogram) -> TimeSeriesFeature:
    """Magnitude-weighted mean frequency per frame; all-zero frames give 0."""
    mag = np.sqrt(ps.bins)
    total = mag.sum(axis=1)
    weighted = mag @ ps.frequencies
    values = np.divide(
        weighted, total, out=np.zeros_like(total), where=total > 0.0
    )
    return TimeSeriesFeature(name="centroid", values=values)


def spectral_rolloff(
    ps: PowerSpectrogram, pct: float = DEFAULT_ROLLOFF_PCT
) -> TimeSeriesFeature:
    """Lowest frequency below which ``pct`` of the frame power lies."""
    if not 0.0 < pct <= 1.0:
        raise ValueError("pct must be in (0, 1]")
    cumulative = np.cumsum(ps.bins, axis=1)
    threshold = pct * cumulative[:, -1:]
    idx = np.argmax(cumulative >= threshold, axis=1)
    return TimeSeriesFeature(name="rolloff", values=idx * ps.bin_hz)


def rms_energy(fm: FrameMatrix) -> TimeSeriesFeature:
    values = np.sqrt(np.mean(fm.frames**2, axis=1))
    return TimeSeriesFeature(name="rms", values=values)


def tempo_estimate(
    clip: AudioClip,
    n_fft: int = DEFAULT_FRAME_LEN,
    hop: int = DEFAULT_HOP,
    n_mels: int = DEFAULT_N_MELS,
) -> float:
    """Single tempo estimate in BPM, clipped to [30, 300].

    Onset strength is the per-frame sum over mel bands of the half-wave
    rectified first difference of the log-mel spectrogram. Lags of its
    autocorrelation are scored against a log-normal prior centered at
    120 BPM with sigma of one octave.
    """
    if clip.samples.size < clip.sample_rate:
        raise ClipTooShortError(
            f"{clip.recording_id}: tempo needs at least 1 s of audio"
        )
    log_mel = log_mel_spectrogram(clip, n_fft=n_fft, hop=hop, n_mels=n_mels)
    onset = np.maximum(0.0, np.diff(log_mel, axis=0)).sum(axis=1)
    if onset.size < 2:
        raise ClipTooShortError(f"{clip.recording_id}: too few frames for tempo")
    autocorr = np.correlate(onset, onset, mode="full")[onset.size - 1 :]
    frame_rate = clip.sample_rate / hop
    lags = np.arange(1, onset.size)
    bpm = 60.0 * frame_rate / lags
    prior = np.exp(
        -0.5 * (np.log2(bpm / TEMPO_START_BPM) / TEMPO_SIGMA_OCTAVES) ** 2
    )
    best = int(np.argmax(autocorr[1:] * prior))
    return float(np.clip(bpm[best], TEMPO_MIN_BPM, TEMPO_MAX_BPM))
