"""VLM-driven medical image localization pipeline.

Prompts a pluggable vision-language backend for structured findings,
robustly parses and geometrically validates the response, models each
finding as a bivariate Gaussian, renders annotation layers, and generates
a structured clinical report. Operable as a library, CLI (``gaussfind``),
and HTTP service with an interactive review UI.
"""

from .errors import (
    AuthFailure,
    BackendUnavailable,
    CorruptImage,
    DegenerateFinding,
    DimensionMismatch,
    EmptyInput,
    FixtureMissing,
    GaussfindError,
    InvalidParameter,
    SchemaViolation,
    Timeout,
    Unparseable,
    UnsupportedFormat,
)
from .model import (
    AnalysisResponse,
    BoundingBox,
    CheckName,
    Contour,
    Finding,
    GaussianParams,
    ImageMeta,
    Modality,
    Point,
    ValidationEntry,
    ValidationLog,
    normalize_theta,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisResponse",
    "BoundingBox",
    "CheckName",
    "Contour",
    "Finding",
    "GaussianParams",
    "ImageMeta",
    "Modality",
    "Point",
    "ValidationEntry",
    "ValidationLog",
    "normalize_theta",
    "GaussfindError",
    "InvalidParameter",
    "Unparseable",
    "SchemaViolation",
    "DegenerateFinding",
    "DimensionMismatch",
    "UnsupportedFormat",
    "CorruptImage",
    "EmptyInput",
    "Timeout",
    "AuthFailure",
    "FixtureMissing",
    "BackendUnavailable",
    "__version__",
]
