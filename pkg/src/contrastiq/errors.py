"""Exception types raised across the package, grouped by subsystem."""


class ContrastiqError(Exception):
    """Base class for all package errors."""


# --- image decoding / encoding ---

class ImageError(ContrastiqError):
    pass


class UnsupportedFormat(ImageError):
    pass


class CorruptData(ImageError):
    pass


class ZeroStd(ImageError):
    pass


# --- synthetic distortions ---

class DistortionError(ContrastiqError):
    pass


class InvalidGamma(DistortionError):
    pass


class InvalidScale(DistortionError):
    pass


class IoFailure(ContrastiqError):
    pass


# --- manifests / normalization ---

class ManifestError(ContrastiqError):
    pass


class MissingFile(ManifestError):
    pass


class BadHeader(ManifestError):
    pass


class UnparsableMos(ManifestError):
    def __init__(self, row: int, value: str):
        super().__init__(f"row {row}: cannot parse mos value {value!r}")
        self.row = row
        self.value = value


class UnparsableSplit(ManifestError):
    def __init__(self, row: int, value: str):
        super().__init__(f"row {row}: unknown split label {value!r}")
        self.row = row
        self.value = value


class DuplicatePath(ManifestError):
    pass


class EmptyManifest(ManifestError):
    pass


class DegenerateScores(ManifestError):
    pass


class TooFewRecords(ManifestError):
    pass


# --- feature extraction / archives ---

class FeatureError(ContrastiqError):
    pass


class ConstraintViolation(FeatureError):
    pass


class ShapeMismatch(FeatureError):
    pass


class MissingParameter(FeatureError):
    pass


class ArchiveError(ContrastiqError):
    pass


class BadMagic(ArchiveError):
    pass


class ChecksumMismatch(ArchiveError):
    pass


class TruncatedFile(ArchiveError):
    pass


# --- regression head / training ---

class RegressorError(ContrastiqError):
    pass


class DimMismatch(RegressorError):
    pass


class StaleTrace(RegressorError):
    pass


class EmptyBatch(RegressorError):
    pass


class EmptySplit(RegressorError):
    pass


class NoAnchors(RegressorError):
    pass


# --- metrics ---

class MetricError(ContrastiqError):
    pass


class LengthMismatch(MetricError):
    pass


class DegenerateVector(MetricError):
    pass


# --- configuration ---

class ConfigError(ContrastiqError):
    pass
