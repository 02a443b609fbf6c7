"""Independent naive reference implementations used as test oracles.

Everything here re-derives results straight from definitions: direct DFT
via an explicit transform matrix, explicit filterbank and DCT loops,
pairwise AUC counting, exhaustive threshold enumeration, lattice search
over the SVM dual. None of it calls into vocalscreen's DSP or metric code.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


# --- framing / spectra ---------------------------------------------------


def reflect_index(i: int, n: int) -> int:
    """Index into a length-n signal under repeated boundary reflection."""
    if n == 1:
        return 0
    period = 2 * n - 2
    j = i % period
    return j if j < n else period - j


def naive_frames(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    n = len(x)
    pad = frame_len // 2
    padded = np.array(
        [x[reflect_index(i - pad, n)] for i in range(n + 2 * pad)], dtype=np.float64
    )
    n_frames = 1 + (len(padded) - frame_len) // hop
    return np.stack(
        [padded[i * hop : i * hop + frame_len] for i in range(n_frames)]
    )


@lru_cache(maxsize=4)
def naive_hann(n: int) -> np.ndarray:
    return np.array(
        [0.5 - 0.5 * math.cos(2.0 * math.pi * k / n) for k in range(n)]
    )


@lru_cache(maxsize=4)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n // 2 + 1)
    return np.exp(-2j * np.pi * np.outer(k, np.arange(n)) / n)


def naive_power_spectrum(frame: np.ndarray) -> np.ndarray:
    """Direct DFT power of one windowed frame via the transform matrix."""
    n = len(frame)
    spectrum = _dft_matrix(n) @ (frame * naive_hann(n))
    return np.abs(spectrum) ** 2


def naive_power_spectrogram(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    return np.stack([naive_power_spectrum(f) for f in naive_frames(x, frame_len, hop)])


@lru_cache(maxsize=4)
def naive_mel_weights(n_mels: int, sample_rate: int, n_fft: int) -> np.ndarray:
    def to_mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    top = to_mel(sample_rate / 2.0)
    edges = [to_hz(top * i / (n_mels + 1)) for i in range(n_mels + 2)]
    n_bins = n_fft // 2 + 1
    weights = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        for k in range(n_bins):
            f = k * sample_rate / n_fft
            if lo < f < hi:
                if f <= center:
                    w = (f - lo) / (center - lo)
                else:
                    w = (hi - f) / (hi - center)
                weights[m, k] = w * 2.0 / (hi - lo)
    return weights


def naive_dct2_ortho(row: np.ndarray, n_out: int) -> np.ndarray:
    n = len(row)
    out = np.zeros(n_out)
    for k in range(n_out):
        acc = 0.0
        for i in range(n):
            acc += row[i] * math.cos(math.pi * (2 * i + 1) * k / (2 * n))
        scale = math.sqrt(1.0 / n) if k == 0 else math.sqrt(2.0 / n)
        out[k] = scale * acc
    return out


def naive_mfcc(
    x: np.ndarray,
    sample_rate: int,
    frame_len: int = 2048,
    hop: int = 512,
    n_mels: int = 128,
    n_mfcc: int = 20,
) -> np.ndarray:
    power = naive_power_spectrogram(x, frame_len, hop)
    weights = naive_mel_weights(n_mels, sample_rate, frame_len)
    mel = power @ weights.T
    log_mel = 10.0 * np.log10(np.maximum(mel, 1e-10))
    log_mel = np.maximum(log_mel, log_mel.max() - 80.0)
    return np.stack([naive_dct2_ortho(row, n_mfcc) for row in log_mel])


def naive_delta(series: np.ndarray, width: int = 9) -> np.ndarray:
    arr = np.asarray(series, dtype=np.float64)
    squeeze = arr.ndim == 1
    x = arr[:, None] if squeeze else arr
    half = (width - 1) // 2
    n, d = x.shape
    denom = 2.0 * sum(k * k for k in range(1, half + 1))
    out = np.zeros_like(x)
    for t in range(n):
        for c in range(d):
            acc = 0.0
            for k in range(1, half + 1):
                right = x[min(t + k, n - 1), c]
                left = x[max(t - k, 0), c]
                acc += k * (right - left)
            out[t, c] = acc / denom
    return out[:, 0] if squeeze else out


def naive_zcr(frames: np.ndarray) -> np.ndarray:
    out = np.zeros(frames.shape[0])
    for i, frame in enumerate(frames):
        crossings = 0
        for a, b in zip(frame[:-1], frame[1:]):
            sa = 1 if a >= 0 else -1
            sb = 1 if b >= 0 else -1
            if sa != sb:
                crossings += 1
        out[i] = crossings / (len(frame) - 1)
    return out


def naive_centroid(power: np.ndarray, bin_hz: float) -> np.ndarray:
    out = np.zeros(power.shape[0])
    for i, row in enumerate(power):
        mags = [math.sqrt(p) for p in row]
        total = sum(mags)
        if total > 0.0:
            out[i] = sum(k * bin_hz * m for k, m in enumerate(mags)) / total
    return out


def naive_rolloff(power: np.ndarray, bin_hz: float, pct: float = 0.85) -> np.ndarray:
    out = np.zeros(power.shape[0])
    for i, row in enumerate(power):
        total = 0.0
        for p in row:
            total += p
        threshold = pct * total
        acc = 0.0
        for k, p in enumerate(row):
            acc += p
            if acc >= threshold:
                out[i] = k * bin_hz
                break
    return out


def naive_rms(frames: np.ndarray) -> np.ndarray:
    out = np.zeros(frames.shape[0])
    for i, frame in enumerate(frames):
        out[i] = math.sqrt(sum(v * v for v in frame) / len(frame))
    return out


# --- statistics -----------------------------------------------------------


def naive_stats(values) -> dict:
    """Sort-based brute-force 14-statistic summary (population moments)."""
    vals = [float(v) for v in values]
    n = len(vals)
    ordered = sorted(vals)

    def quantile(p):
        h = (n - 1) * p
        lo = math.floor(h)
        hi = min(lo + 1, n - 1)
        frac = h - lo
        return ordered[lo] + frac * (ordered[hi] - ordered[lo])

    mean = float(np.sum(np.asarray(vals)) / n)
    rms = math.sqrt(float(np.sum(np.asarray([v * v for v in vals])) / n))
    deviations = [v - mean for v in vals]
    m2 = float(np.sum(np.asarray([d * d for d in deviations])) / n)
    std = math.sqrt(m2)
    if m2 > 0.0:
        m3 = float(np.sum(np.asarray([d * d * d for d in deviations])) / n)
        m4 = float(np.sum(np.asarray([(d * d) * (d * d) for d in deviations])) / n)
        skew = m3 / m2**1.5
        kurt = m4 / (m2 * m2) - 3.0
    else:
        skew = 0.0
        kurt = 0.0
    mad = float(np.sum(np.asarray([abs(d) for d in deviations])) / n)
    q1, median, q3 = quantile(0.25), quantile(0.5), quantile(0.75)
    return {
        "min": ordered[0],
        "max": ordered[-1],
        "range": ordered[-1] - ordered[0],
        "mean": mean,
        "rms": rms,
        "q1": q1,
        "median": median,
        "q3": q3,
        "iqr": q3 - q1,
        "std": std,
        "variance": m2,
        "skew": skew,
        "excess_kurtosis": kurt,
        "mad": mad,
    }


# --- ranking metrics ------------------------------------------------------


def pairwise_auc(scores, labels) -> float:
    """O(n^2) Mann-Whitney count: wins plus half-ties over all pos/neg pairs."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    numerator = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                numerator += 1.0
            elif p == q:
                numerator += 0.5
    return numerator / (len(pos) * len(neg))


def _threshold_sweep(scores, labels):
    thresholds = sorted(set(scores), reverse=True)
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    points = []
    for theta in [float("inf")] + thresholds:
        tp = sum(1 for s, y in zip(scores, labels) if s >= theta and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= theta and y == 0)
        n_pred = tp + fp
        precision = tp / n_pred if n_pred else None
        points.append(
            {
                "threshold": theta,
                "tpr": tp / n_pos,
                "fpr": fp / n_neg,
                "precision": precision,
            }
        )
    return points


def exhaustive_precision_at_recall(scores, labels, target) -> float:
    best = 0.0
    for point in _threshold_sweep(scores, labels):
        if point["precision"] is None:
            continue
        if point["tpr"] >= target:
            best = max(best, point["precision"])
    return best


def exhaustive_recall_at_fpr(scores, labels, max_fpr) -> float:
    best = 0.0
    for point in _threshold_sweep(scores, labels):
        if point["fpr"] <= max_fpr:
            best = max(best, point["tpr"])
    return best


# --- optimization oracles -------------------------------------------------


def numeric_gradient(func, w: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(w)
    for i in range(w.size):
        up = w.copy()
        down = w.copy()
        up[i] += eps
        down[i] -= eps
        grad[i] = (func(up) - func(down)) / (2.0 * eps)
    return grad


def svm_lattice_dual_max(
    X: np.ndarray, y_sign: np.ndarray, C: float, gamma: float, steps: int = 50
) -> float:
    """Exhaustive dual maximum over an alpha lattice honoring sum(alpha*y)=0.

    Four training points only; all (steps+1)^4 lattice combinations are
    evaluated (vectorized over the last three coordinates). X must already
    be standardized exactly as the solver standardizes it.
    """
    n = X.shape[0]
    if n != 4:
        raise ValueError("lattice oracle is written for exactly 4 points")
    K = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            diff = X[i] - X[j]
            K[i, j] = math.exp(-gamma * float(diff @ diff))
    Q = np.outer(y_sign, y_sign) * K
    grid = np.linspace(0.0, C, steps + 1)
    a2, a3, a4 = np.meshgrid(grid, grid, grid, indexing="ij")
    inner = (
        a2 * a2 * Q[1, 1]
        + a3 * a3 * Q[2, 2]
        + a4 * a4 * Q[3, 3]
        + 2.0 * a2 * a3 * Q[1, 2]
        + 2.0 * a2 * a4 * Q[1, 3]
        + 2.0 * a3 * a4 * Q[2, 3]
    )
    rest = a2 * y_sign[1] + a3 * y_sign[2] + a4 * y_sign[3]
    best = -math.inf
    tol = C / steps * 1e-9
    for a1 in grid:
        feasible = np.abs(a1 * y_sign[0] + rest) <= tol
        if not feasible.any():
            continue
        cross = a2 * Q[0, 1] + a3 * Q[0, 2] + a4 * Q[0, 3]
        dual = (
            a1
            + a2
            + a3
            + a4
            - 0.5 * (a1 * a1 * Q[0, 0] + 2.0 * a1 * cross + inner)
        )
        best = max(best, float(dual[feasible].max()))
    return best
