"""Typed exceptions shared across the pipeline."""


class GaussfindError(Exception):
    """Base class for all pipeline errors."""


class InvalidParameter(GaussfindError):
    """A numeric argument is outside its legal domain (non-finite, non-positive sigma, ...)."""


class Unparseable(GaussfindError):
    """No extraction strategy could recover structured content from the raw model text."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class SchemaViolation(GaussfindError):
    """The parsed candidate cannot be coerced into an analysis.

    Carries machine-readable paths of the offending fields so callers can
    surface them for human review.
    """

    def __init__(self, message: str, paths: list[str] | None = None):
        super().__init__(message)
        self.paths = paths or []


class DegenerateFinding(GaussfindError):
    """A finding's bounding box collapsed to zero area after clamping."""


class DimensionMismatch(GaussfindError):
    """Two grids or images that must share dimensions do not."""


class UnsupportedFormat(GaussfindError):
    """Input bytes are not a recognized image format."""


class CorruptImage(GaussfindError):
    """Image bytes were recognized but could not be decoded."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class EmptyInput(GaussfindError):
    """Zero-byte input where image data was required."""


class BackendError(GaussfindError):
    """Base class for model-backend failures."""


class Timeout(BackendError):
    """The live backend timed out after all retries."""


class AuthFailure(BackendError):
    """API key missing from the environment or rejected by the endpoint."""


class FixtureMissing(BackendError):
    """Replay backend could not find the requested fixture file."""


class BackendUnavailable(BackendError):
    """The live endpoint was unreachable after all retries."""
