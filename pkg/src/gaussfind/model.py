"""Domain types for image analyses: findings, geometry, Gaussian parameters.

All types are immutable value objects and are safe to share between threads.
The canonical wire/storage form is a snake_case JSON document produced by
``serialize_analysis`` / consumed by the parser; field names here are the
schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidParameter


class Modality(Enum):
    CT = "CT"
    MRI = "MRI"
    XRAY = "XRay"
    ULTRASOUND = "Ultrasound"
    UNKNOWN = "Unknown"


class CheckName(Enum):
    """Correction categories recorded by the geometry validator."""

    BOUNDARY_CLAMP = "BoundaryClamp"
    CENTER_REPAIR = "CenterRepair"
    CONTOUR_CLOSURE = "ContourClosure"
    GAUSSIAN_RANGE = "GaussianRange"


@dataclass(frozen=True)
class ImageMeta:
    """Pixel dimensions and acquisition context of the analyzed image."""

    width: int
    height: int
    modality: Modality = Modality.UNKNOWN
    pixel_spacing: tuple[float, float] | None = None  # mm per pixel (x, y)
    source_name: str = ""

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidParameter(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        if self.pixel_spacing is not None:
            sx, sy = self.pixel_spacing
            if not (sx > 0 and sy > 0):
                raise InvalidParameter(f"pixel_spacing must be positive, got {self.pixel_spacing}")


@dataclass(frozen=True)
class Point:
    """Pixel position, top-left origin, x rightward, y downward, pixel-center addressing."""

    x: float
    y: float


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def midpoint(self) -> Point:
        return Point((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def contains(self, p: Point) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max


@dataclass(frozen=True)
class Contour:
    """Closed polygon; closure is implicit (last point connects to first)."""

    points: tuple[Point, ...]


@dataclass(frozen=True)
class GaussianParams:
    """Bivariate Gaussian: means, per-axis spreads (pixels), rotation (radians)."""

    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    theta: float


@dataclass(frozen=True)
class Finding:
    """One detected abnormality with geometry, statistics, and narrative."""

    id: int
    label: str
    description: str
    bbox: BoundingBox
    center: Point
    confidence: int
    clinical_significance: str = ""
    contour: Contour | None = None
    gaussian: GaussianParams | None = None


@dataclass(frozen=True)
class AnalysisResponse:
    """Canonical structured result of one model call."""

    examination_type: str
    anatomical_region: str
    image: ImageMeta
    findings: tuple[Finding, ...]
    overall_impression: str = ""


@dataclass(frozen=True)
class ValidationEntry:
    """One geometric correction applied by the validator."""

    finding_id: int
    check: CheckName
    original: str
    corrected: str
    origin: str = "auto"  # "auto" for pipeline corrections, "human" after manual edits


@dataclass(frozen=True)
class ValidationLog:
    entries: tuple[ValidationEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def extend(self, more: list[ValidationEntry] | tuple[ValidationEntry, ...]) -> "ValidationLog":
        return ValidationLog(self.entries + tuple(more))


def normalize_theta(theta: float) -> float:
    """Fold a rotation angle into [-pi/2, pi/2).

    Gaussian ellipses have period pi, so angles congruent modulo pi are
    equivalent; a canonical half-open range makes equality testable.
    """
    if not math.isfinite(theta):
        raise InvalidParameter(f"theta must be finite, got {theta}")
    t = (theta + math.pi / 2.0) % math.pi - math.pi / 2.0
    # Float modulo can land exactly on the open end for tiny negative inputs.
    if t >= math.pi / 2.0:
        t -= math.pi
    return t


def round_half_up(value: float) -> int:
    """Round with halves away from the floor (0.5 -> 1, 1.5 -> 2, 9.6 -> 10)."""
    return int(math.floor(value + 0.5))


def clamp_confidence(value: float) -> int:
    """Round half-up, then clamp to the 1..10 confidence scale."""
    return max(1, min(10, round_half_up(value)))


# ---------------------------------------------------------------------------
# Canonical JSON schema
# ---------------------------------------------------------------------------


def point_to_dict(p: Point) -> dict:
    return {"x": p.x, "y": p.y}


def bbox_to_dict(b: BoundingBox) -> dict:
    return {"x_min": b.x_min, "y_min": b.y_min, "x_max": b.x_max, "y_max": b.y_max}


def gaussian_to_dict(g: GaussianParams) -> dict:
    return {
        "mu_x": g.mu_x,
        "mu_y": g.mu_y,
        "sigma_x": g.sigma_x,
        "sigma_y": g.sigma_y,
        "theta": g.theta,
    }


def finding_to_dict(f: Finding) -> dict:
    d = {
        "id": f.id,
        "label": f.label,
        "description": f.description,
        "bbox": bbox_to_dict(f.bbox),
        "center": point_to_dict(f.center),
        "confidence": f.confidence,
        "clinical_significance": f.clinical_significance,
    }
    if f.contour is not None:
        d["contour"] = [point_to_dict(p) for p in f.contour.points]
    if f.gaussian is not None:
        d["gaussian"] = gaussian_to_dict(f.gaussian)
    return d


def meta_to_dict(meta: ImageMeta) -> dict:
    d = {
        "width": meta.width,
        "height": meta.height,
        "modality": meta.modality.value,
        "source_name": meta.source_name,
    }
    if meta.pixel_spacing is not None:
        d["pixel_spacing"] = [meta.pixel_spacing[0], meta.pixel_spacing[1]]
    return d


def meta_from_dict(d: dict) -> ImageMeta:
    spacing = d.get("pixel_spacing")
    return ImageMeta(
        width=int(d["width"]),
        height=int(d["height"]),
        modality=Modality(d.get("modality", "Unknown")),
        pixel_spacing=(float(spacing[0]), float(spacing[1])) if spacing else None,
        source_name=d.get("source_name", ""),
    )


def entry_to_dict(e: ValidationEntry) -> dict:
    return {
        "finding_id": e.finding_id,
        "check": e.check.value,
        "original": e.original,
        "corrected": e.corrected,
        "origin": e.origin,
    }


def log_to_list(log: ValidationLog) -> list[dict]:
    return [entry_to_dict(e) for e in log.entries]


def log_from_list(items: list[dict]) -> ValidationLog:
    return ValidationLog(
        tuple(
            ValidationEntry(
                finding_id=int(i["finding_id"]),
                check=CheckName(i["check"]),
                original=str(i["original"]),
                corrected=str(i["corrected"]),
                origin=i.get("origin", "auto"),
            )
            for i in items
        )
    )


def analysis_to_dict(r: AnalysisResponse, log: ValidationLog | None = None) -> dict:
    d = {
        "examination_type": r.examination_type,
        "anatomical_region": r.anatomical_region,
        "image": meta_to_dict(r.image),
        "findings": [finding_to_dict(f) for f in r.findings],
        "overall_impression": r.overall_impression,
    }
    if log is not None:
        d["validation_log"] = log_to_list(log)
    return d


def serialize_analysis(r: AnalysisResponse, log: ValidationLog | None = None) -> str:
    return json.dumps(analysis_to_dict(r, log), indent=2)


__all__ = [
    "Modality",
    "CheckName",
    "ImageMeta",
    "Point",
    "BoundingBox",
    "Contour",
    "GaussianParams",
    "Finding",
    "AnalysisResponse",
    "ValidationEntry",
    "ValidationLog",
    "normalize_theta",
    "round_half_up",
    "clamp_confidence",
    "analysis_to_dict",
    "serialize_analysis",
    "finding_to_dict",
    "meta_to_dict",
    "meta_from_dict",
    "log_to_list",
    "log_from_list",
    "point_to_dict",
    "bbox_to_dict",
    "gaussian_to_dict",
]
