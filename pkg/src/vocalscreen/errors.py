"""Exception and warning types shared across the pipeline.

Every exception carries a stable ``code`` string so callers (and the CLI)
can classify failures without string-matching messages.
"""


class VocalScreenError(Exception):
    code = "ERROR"


# --- audio decoding / framing ---

class UnsupportedCodecError(VocalScreenError):
    code = "UNSUPPORTED_CODEC"


class CorruptHeaderError(VocalScreenError):
    code = "CORRUPT_HEADER"


class EmptyAudioError(VocalScreenError):
    code = "EMPTY_AUDIO"


class ClipTooShortError(VocalScreenError):
    code = "CLIP_TOO_SHORT"


# --- DSP ---

class DegenerateFilterbankError(VocalScreenError):
    code = "DEGENERATE_FILTERBANK"


# --- features ---

class EmptySeriesError(VocalScreenError):
    code = "EMPTY_SERIES"


class DimensionMismatchError(VocalScreenError):
    code = "DIMENSION_MISMATCH"


class DuplicateIdError(VocalScreenError):
    code = "DUPLICATE_ID"


class ParseError(VocalScreenError):
    code = "PARSE_ERROR"


class NameCollisionError(VocalScreenError):
    code = "NAME_COLLISION"


# --- classifiers ---

class SingleClassError(VocalScreenError):
    code = "SINGLE_CLASS"


class NonFiniteInputError(VocalScreenError):
    code = "NONFINITE_INPUT"


class SchemaMismatchError(VocalScreenError):
    code = "SCHEMA_MISMATCH"


class ConvergenceWarning(UserWarning):
    """Solver hit its iteration cap; the best iterate is returned anyway."""


# --- cohort / evaluation ---

class TooFewSubjectsError(VocalScreenError):
    code = "TOO_FEW_SUBJECTS"


class DuplicateRecordingError(VocalScreenError):
    code = "DUPLICATE_RECORDING"


class ConflictingMetadataError(VocalScreenError):
    code = "CONFLICTING_METADATA"


class MissingFileError(VocalScreenError):
    code = "MISSING_FILE"


class BadLabelError(VocalScreenError):
    code = "BAD_LABEL"


# --- synthesis / IO ---

class IoWriteError(VocalScreenError):
    code = "IO_WRITE_FAILURE"
