"""Per-recording feature vectors: statistical summaries of the frame-level
descriptors, plus ingestion and fusion of precomputed external embeddings.

The custom layout, in order:

* recording averages of zcr, centroid, rolloff, rms, the 20 MFCCs and their
  deltas and double-deltas, plus the tempo scalar (65 values, ``*.avg`` /
  ``tempo``),
* the 14-statistic summary of zcr, centroid, rolloff and rms (56 values),
* the 14-statistic summary of each MFCC coefficient (280 values),
* optionally (``stats_on_deltas``) the same summaries for every delta and
  double-delta coefficient (+560 values).

Default dimension 401, or 961 with delta statistics enabled. Statistics use
population (not sample) moments.
"""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import dsp
from .audio_io import AudioClip, AudioType, frame_signal, load_wav, resample
from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    EmptySeriesError,
    NameCollisionError,
    ParseError,
)

STAT_NAMES = (
    "min",
    "max",
    "range",
    "mean",
    "rms",
    "q1",
    "median",
    "q3",
    "iqr",
    "std",
    "variance",
    "skew",
    "excess_kurtosis",
    "mad",
)

CACHE_FLOAT_FORMAT = "%.17g"  # round-trips every IEEE double


@dataclass(frozen=True)
class StatSummary:
    """Fixed 14-component summary of a real series."""

    min: float
    max: float
    range: float
    mean: float
    rms: float
    q1: float
    median: float
    q3: float
    iqr: float
    std: float
    variance: float
    skew: float
    excess_kurtosis: float
    mad: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in STAT_NAMES)


def _quantile(sorted_values: np.ndarray, p: float) -> float:
    """Linear interpolation at rank h = (n - 1) * p over sorted data."""
    n = sorted_values.size
    h = (n - 1) * p
    lo = int(np.floor(h))
    hi = min(lo + 1, n - 1)
    frac = h - lo
    lo_val = float(sorted_values[lo])
    return lo_val + frac * (float(sorted_values[hi]) - lo_val)


def summarize_series(values) -> StatSummary:
    """Compute the 14 summary statistics of a non-empty series.

    Quartiles interpolate linearly at rank (n-1)*p; skew is the
    Fisher-Pearson m3 / m2^1.5 and kurtosis is excess (m4 / m2^2 - 3), both
    from population moments. Zero-variance series report skew and kurtosis
    of exactly 0.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptySeriesError("summarize_series needs a non-empty 1-D series")
    n = x.size
    sorted_x = np.sort(x)
    minimum = float(sorted_x[0])
    maximum = float(sorted_x[-1])
    mean = float(np.sum(x) / n)
    rms = float(np.sqrt(np.sum(x * x) / n))
    q1 = _quantile(sorted_x, 0.25)
    median = _quantile(sorted_x, 0.5)
    q3 = _quantile(sorted_x, 0.75)
    d = x - mean
    m2 = float(np.sum(d * d) / n)
    std = float(np.sqrt(m2))
    if m2 > 0.0:
        m3 = float(np.sum(d * d * d) / n)
        m4 = float(np.sum((d * d) * (d * d)) / n)
        skew = m3 / m2**1.5
        excess_kurtosis = m4 / (m2 * m2) - 3.0
    else:
        skew = 0.0
        excess_kurtosis = 0.0
    mad = float(np.sum(np.abs(d)) / n)
    return StatSummary(
        min=minimum,
        max=maximum,
        range=maximum - minimum,
        mean=mean,
        rms=rms,
        q1=q1,
        median=median,
        q3=q3,
        iqr=q3 - q1,
        std=std,
        variance=m2,
        skew=skew,
        excess_kurtosis=excess_kurtosis,
        mad=mad,
    )


class FeatureSource(Enum):
    MEAN = "mean"
    STAT = "stat"
    EXTERNAL = "external"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered, named layout of a feature vector."""

    label: str
    entries: tuple[tuple[str, FeatureSource], ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    @property
    def dimension(self) -> int:
        return len(self.entries)

    def fingerprint(self) -> str:
        payload = ",".join(self.names).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def __post_init__(self):
        names = self.names
        if len(set(names)) != len(names):
            raise NameCollisionError(f"schema {self.label!r} has duplicate names")


@dataclass(frozen=True)
class FeatureConfig:
    """Knobs of the custom feature pipeline (defaults are the canon)."""

    sample_rate: int = 8000
    n_fft: int = 2048
    hop: int = 512
    n_mels: int = 128
    n_mfcc: int = 20
    delta_width: int = 9
    rolloff_pct: float = 0.85
    stats_on_deltas: bool = False
    embeddings: tuple[tuple[str, str], ...] = ()  # (source label, table path)

    def as_dict(self) -> dict:
        return {
            "sample_rate": self.sample_rate,
            "n_fft": self.n_fft,
            "hop": self.hop,
            "n_mels": self.n_mels,
            "n_mfcc": self.n_mfcc,
            "delta_width": self.delta_width,
            "rolloff_pct": self.rolloff_pct,
            "stats_on_deltas": self.stats_on_deltas,
            "embeddings": [list(pair) for pair in self.embeddings],
        }


@dataclass
class CustomFeatureVector:
    schema: FeatureSchema
    values: np.ndarray
    n_zeroed: int = 0  # non-finite intermediates replaced by 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.schema.dimension,):
            raise DimensionMismatchError(
                f"vector length {self.values.size} != schema dimension "
                f"{self.schema.dimension}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector contains non-finite values")


def _base_feature_names(n_mfcc: int) -> list[str]:
    names = ["zcr", "centroid", "rolloff", "rms"]
    names += [f"mfcc{i:02d}" for i in range(n_mfcc)]
    names += [f"dmfcc{i:02d}" for i in range(n_mfcc)]
    names += [f"ddmfcc{i:02d}" for i in range(n_mfcc)]
    return names


def custom_schema(config: FeatureConfig) -> FeatureSchema:
    """The deterministic layout produced by :func:`build_custom_features`."""
    entries: list[tuple[str, FeatureSource]] = []
    for base in _base_feature_names(config.n_mfcc):
        entries.append((f"{base}.avg", FeatureSource.MEAN))
    entries.append(("tempo", FeatureSource.MEAN))
    stat_bases = ["zcr", "centroid", "rolloff", "rms"]
    stat_bases += [f"mfcc{i:02d}" for i in range(config.n_mfcc)]
    if config.stats_on_deltas:
        stat_bases += [f"dmfcc{i:02d}" for i in range(config.n_mfcc)]
        stat_bases += [f"ddmfcc{i:02d}" for i in range(config.n_mfcc)]
    for base in stat_bases:
        for stat in STAT_NAMES:
            entries.append((f"{base}.{stat}", FeatureSource.STAT))
    return FeatureSchema(label="custom", entries=tuple(entries))


def feature_category(name: str) -> str:
    """Coarse acoustic category of a schema name (used for interpretability).

    Voicing covers ZCR, RMS energy and the low-order MFCCs (c0..c4); deltas
    fall under dynamics, tempo under rhythm, everything spectral otherwise.
    """
    parts = name.split(".")
    if len(parts) > 1 and (parts[-1] in STAT_NAMES or parts[-1] == "avg"):
        parts = parts[:-1]
    base = parts[-1]
    if base == "tempo":
        return "rhythm"
    if base in ("zcr", "rms"):
        return "voicing"
    if base.startswith("ddmfcc") or base.startswith("dmfcc"):
        return "dynamics"
    if base.startswith("mfcc"):
        try:
            index = int(base[4:])
        except ValueError:
            return "spectral"
        return "voicing" if index <= 4 else "spectral"
    if base in ("centroid", "rolloff"):
        return "spectral"
    return "external"


def build_custom_features(clip: AudioClip, config: FeatureConfig) -> CustomFeatureVector:
    """Turn one recording into the fixed-schema custom vector.

    Non-finite intermediates are zeroed (and counted) rather than
    propagated; downstream classifiers require finite inputs.
    """
    fm = frame_signal(clip, config.n_fft, config.hop)
    ps = dsp.power_spectrogram(fm, config.n_fft)
    series = {
        "zcr": dsp.zero_crossing_rate(fm).values,
        "centroid": dsp.spectral_centroid(ps).values,
        "rolloff": dsp.spectral_rolloff(ps, config.rolloff_pct).values,
        "rms": dsp.rms_energy(fm).values,
    }
    mfcc_matrix = dsp.mfcc(
        clip, config.n_mfcc, n_fft=config.n_fft, hop=config.hop, n_mels=config.n_mels
    )
    d1 = dsp.delta(mfcc_matrix, config.delta_width)
    d2 = dsp.delta(d1, config.delta_width)
    for i in range(config.n_mfcc):
        series[f"mfcc{i:02d}"] = mfcc_matrix[:, i]
        series[f"dmfcc{i:02d}"] = d1[:, i]
        series[f"ddmfcc{i:02d}"] = d2[:, i]
    tempo = dsp.tempo_estimate(
        clip, n_fft=config.n_fft, hop=config.hop, n_mels=config.n_mels
    )

    values: list[float] = []
    for base in _base_feature_names(config.n_mfcc):
        values.append(float(np.mean(series[base])))
    values.append(tempo)
    stat_bases = ["zcr", "centroid", "rolloff", "rms"]
    stat_bases += [f"mfcc{i:02d}" for i in range(config.n_mfcc)]
    if config.stats_on_deltas:
        stat_bases += [f"dmfcc{i:02d}" for i in range(config.n_mfcc)]
        stat_bases += [f"ddmfcc{i:02d}" for i in range(config.n_mfcc)]
    for base in stat_bases:
        values.extend(summarize_series(series[base]).as_tuple())

    vector = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(vector)
    n_zeroed = int(vector.size - np.count_nonzero(finite))
    if n_zeroed:
        warnings.warn(
            f"{clip.recording_id}: zeroed {n_zeroed} non-finite feature values",
            stacklevel=2,
        )
        vector = np.where(finite, vector, 0.0)
    return CustomFeatureVector(
        schema=custom_schema(config), values=vector, n_zeroed=n_zeroed
    )


@dataclass(frozen=True)
class ExternalEmbeddingTable:
    """Precomputed per-recording vectors from a fixed external extractor."""

    source_label: str
    dimension: int
    vectors: dict[str, np.ndarray] = field(repr=False)

    @property
    def schema(self) -> FeatureSchema:
        entries = tuple(
            (f"v{i:04d}", FeatureSource.EXTERNAL) for i in range(self.dimension)
        )
        return FeatureSchema(label=self.source_label, entries=entries)

    def vector_for(self, recording_id: str) -> np.ndarray:
        try:
            return self.vectors[recording_id]
        except KeyError:
            raise ParseError(
                f"recording {recording_id!r} missing from embedding table "
                f"{self.source_label!r}"
            ) from None


def _parse_float_row(tokens: list[str], line_no: int) -> np.ndarray:
    try:
        return np.asarray([float(tok) for tok in tokens], dtype=np.float64)
    except ValueError:
        raise ParseError(f"line {line_no}: non-numeric vector entry") from None


def load_embedding_table(path: str | Path, source_label: str) -> ExternalEmbeddingTable:
    """Load an embedding table from CSV (recording_id,v0,v1,...) or JSON lines.

    The dimension is inferred from the first row and enforced on the rest.
    """
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    stripped = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if not stripped:
        raise ParseError(f"{path}: empty embedding table")
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None

    def add_row(rid: str, vec: np.ndarray, line_no: int, row_no: int):
        nonlocal dimension
        if dimension is None:
            dimension = vec.size
        elif vec.size != dimension:
            raise DimensionMismatchError(
                f"{path}: row {row_no} has {vec.size} values, expected {dimension}"
            )
        if rid in vectors:
            raise DuplicateIdError(f"{path}: duplicate recording id {rid!r} at line {line_no}")
        vec.setflags(write=False)
        vectors[rid] = vec

    if stripped[0][1].lstrip().startswith("{"):
        for row_no, (line_no, line) in enumerate(stripped, start=1):
            try:
                record = json.loads(line)
                rid = record["id"]
                raw = record["vector"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ParseError(f"{path}: line {line_no}: bad JSON record") from None
            add_row(str(rid), _parse_float_row([str(v) for v in raw], line_no), line_no, row_no)
    else:
        header_no, header = stripped[0]
        fields = [f.strip() for f in header.split(",")]
        if not fields or fields[0] != "recording_id":
            raise ParseError(f"{path}: line {header_no}: header must start with recording_id")
        for row_no, (line_no, line) in enumerate(stripped[1:], start=1):
            cells = [c.strip() for c in line.split(",")]
            if len(cells) < 2:
                raise ParseError(f"{path}: line {line_no}: expected id plus vector")
            add_row(cells[0], _parse_float_row(cells[1:], line_no), line_no, row_no)
    if not vectors:
        raise ParseError(f"{path}: embedding table has a header but no rows")
    assert dimension is not None
    return ExternalEmbeddingTable(
        source_label=source_label, dimension=dimension, vectors=vectors
    )


def fuse_features(
    parts: list[tuple[FeatureSchema, np.ndarray]]
) -> CustomFeatureVector:
    """Concatenate feature parts in order, prefixing names by source label."""
    if not parts:
        raise ValueError("fuse_features needs at least one part")
    entries: list[tuple[str, FeatureSource]] = []
    seen: set[str] = set()
    chunks: list[np.ndarray] = []
    for schema, values in parts:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (schema.dimension,):
            raise DimensionMismatchError(
                f"part {schema.label!r}: vector length {values.size} != "
                f"schema dimension {schema.dimension}"
            )
        for name, source in schema.entries:
            prefixed = f"{schema.label}.{name}"
            if prefixed in seen:
                raise NameCollisionError(f"fused name collision: {prefixed!r}")
            seen.add(prefixed)
            entries.append((prefixed, source))
        chunks.append(values)
    fused = FeatureSchema(label="fused", entries=tuple(entries))
    return CustomFeatureVector(schema=fused, values=np.concatenate(chunks))


def _infer_source(name: str) -> FeatureSource:
    tail = name.rsplit(".", 1)[-1]
    if tail in ("avg", "tempo"):
        return FeatureSource.MEAN
    if tail in STAT_NAMES:
        return FeatureSource.STAT
    return FeatureSource.EXTERNAL


def write_feature_cache(
    path: str | Path,
    schema: FeatureSchema,
    vectors: dict[str, np.ndarray],
) -> None:
    """Write extracted vectors as CSV, one row per recording, 17 sig digits."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["recording_id", *schema.names])
        for rid in sorted(vectors):
            row = [CACHE_FLOAT_FORMAT % v for v in vectors[rid]]
            writer.writerow([rid, *row])


def read_feature_cache(path: str | Path) -> tuple[FeatureSchema, dict[str, np.ndarray]]:
    """Load a feature cache written by :func:`write_feature_cache`."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty feature cache") from None
        if not header or header[0] != "recording_id":
            raise ParseError(f"{path}: header must start with recording_id")
        names = header[1:]
        if not names:
            raise ParseError(f"{path}: cache has no feature columns")
        entries = tuple((name, _infer_source(name)) for name in names)
        schema = FeatureSchema(label="cache", entries=entries)
        vectors: dict[str, np.ndarray] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DimensionMismatchError(
                    f"{path}: line {line_no} has {len(row) - 1} values, "
                    f"expected {len(names)}"
                )
            if row[0] in vectors:
                raise DuplicateIdError(f"{path}: duplicate recording id {row[0]!r}")
            vectors[row[0]] = _parse_float_row(row[1:], line_no)
    return schema, vectors


def extract_recording(
    path: str | Path,
    audio_type: AudioType | None,
    config: FeatureConfig,
    embedding_tables: list[ExternalEmbeddingTable] | None = None,
) -> CustomFeatureVector:
    """Decode one recording and produce its (optionally fused) feature vector."""
    clip = load_wav(path, audio_type=audio_type)
    if clip.sample_rate != config.sample_rate:
        clip = resample(clip, config.sample_rate)
    vector = build_custom_features(clip, config)
    if not embedding_tables:
        return vector
    parts = [(vector.schema, vector.values)]
    for table in embedding_tables:
        parts.append((table.schema, table.vector_for(clip.recording_id)))
    fused = fuse_features(parts)
    fused.n_zeroed = vector.n_zeroed
    return fused


def cohort_feature_schema(
    config: FeatureConfig,
    embedding_tables: list[ExternalEmbeddingTable] | None = None,
) -> FeatureSchema:
    """Schema produced by :func:`extract_recording` under this config."""
    base = custom_schema(config)
    if not embedding_tables:
        return base
    entries: list[tuple[str, FeatureSource]] = []
    for schema in [base] + [t.schema for t in embedding_tables]:
        entries.extend(
            (f"{schema.label}.{name}", source) for name, source in schema.entries
        )
    return FeatureSchema(label="fused", entries=tuple(entries))
