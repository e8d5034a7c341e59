"""Geometric validation and repair of parsed findings.

Clamps every coordinate into image bounds, repairs center/bbox
inconsistencies, normalizes contours, and range-checks (or synthesizes)
Gaussian parameters. Every mutation is recorded once in the returned
validation log. Validation is idempotent: a second pass changes nothing
and produces an empty log.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .errors import DegenerateFinding
from .model import (
    AnalysisResponse,
    BoundingBox,
    CheckName,
    Contour,
    Finding,
    GaussianParams,
    ImageMeta,
    Point,
    ValidationEntry,
    ValidationLog,
    normalize_theta,
)

SIGMA_MIN = 0.5  # pixels; excludes degenerate spreads
BBOX_SIGMA_DIVISOR = 4.0  # bbox span ~ +/- 2 sigma when synthesizing


def clamp_coordinate(raw: float, extent: int) -> float:
    """Clamp a pixel coordinate into [0, extent - 1]."""
    return max(0.0, min(float(extent - 1), float(raw)))


def _fmt_point(p: Point) -> str:
    return f"({p.x:g}, {p.y:g})"


def _fmt_bbox(b: BoundingBox) -> str:
    return f"({b.x_min:g}, {b.y_min:g}, {b.x_max:g}, {b.y_max:g})"


def _fmt_gaussian(g: GaussianParams) -> str:
    return f"(mu=({g.mu_x:g}, {g.mu_y:g}), sigma=({g.sigma_x:g}, {g.sigma_y:g}), theta={g.theta:g})"


def _clamp_bbox(f: Finding, meta: ImageMeta, origin: str, entries: list[ValidationEntry]) -> BoundingBox:
    coords = {
        "x_min": (f.bbox.x_min, meta.width),
        "y_min": (f.bbox.y_min, meta.height),
        "x_max": (f.bbox.x_max, meta.width),
        "y_max": (f.bbox.y_max, meta.height),
    }
    clamped = {}
    for name, (value, extent) in coords.items():
        new = clamp_coordinate(value, extent)
        if new != value:
            entries.append(
                ValidationEntry(f.id, CheckName.BOUNDARY_CLAMP, f"bbox.{name}={value:g}", f"bbox.{name}={new:g}", origin)
            )
        clamped[name] = new
    x_lo, x_hi = sorted((clamped["x_min"], clamped["x_max"]))
    y_lo, y_hi = sorted((clamped["y_min"], clamped["y_max"]))
    if (x_lo, y_lo, x_hi, y_hi) != (clamped["x_min"], clamped["y_min"], clamped["x_max"], clamped["y_max"]):
        entries.append(
            ValidationEntry(
                f.id,
                CheckName.BOUNDARY_CLAMP,
                f"bbox corners inverted {_fmt_bbox(f.bbox)}",
                f"bbox reordered ({x_lo:g}, {y_lo:g}, {x_hi:g}, {y_hi:g})",
                origin,
            )
        )
    return BoundingBox(x_lo, y_lo, x_hi, y_hi)


def _repair_center(f: Finding, bbox: BoundingBox, meta: ImageMeta, origin: str, entries: list[ValidationEntry]) -> Point:
    center = Point(clamp_coordinate(f.center.x, meta.width), clamp_coordinate(f.center.y, meta.height))
    if center != f.center:
        entries.append(
            ValidationEntry(f.id, CheckName.BOUNDARY_CLAMP, f"center={_fmt_point(f.center)}", f"center={_fmt_point(center)}", origin)
        )
    if not bbox.contains(center):
        # Nearest point of the closed box; lies on its boundary for an outside point.
        repaired = Point(
            max(bbox.x_min, min(bbox.x_max, center.x)),
            max(bbox.y_min, min(bbox.y_max, center.y)),
        )
        entries.append(
            ValidationEntry(f.id, CheckName.CENTER_REPAIR, f"center={_fmt_point(center)}", f"center={_fmt_point(repaired)}", origin)
        )
        center = repaired
    return center


def _normalize_contour(f: Finding, meta: ImageMeta, origin: str, entries: list[ValidationEntry]) -> Contour | None:
    if f.contour is None:
        return None
    points = []
    for p in f.contour.points:
        q = Point(clamp_coordinate(p.x, meta.width), clamp_coordinate(p.y, meta.height))
        if q != p:
            entries.append(
                ValidationEntry(f.id, CheckName.BOUNDARY_CLAMP, f"contour point {_fmt_point(p)}", f"contour point {_fmt_point(q)}", origin)
            )
        points.append(q)
    # Canonical form is implicitly closed: drop an explicit closing duplicate,
    # then collapse consecutive duplicates (clamping can create them).
    deduped: list[Point] = []
    for q in points:
        if deduped and q == deduped[-1]:
            entries.append(
                ValidationEntry(f.id, CheckName.CONTOUR_CLOSURE, f"duplicate contour point {_fmt_point(q)}", "removed", origin)
            )
            continue
        deduped.append(q)
    if len(deduped) > 1 and deduped[0] == deduped[-1]:
        entries.append(
            ValidationEntry(f.id, CheckName.CONTOUR_CLOSURE, f"explicit closing point {_fmt_point(deduped[-1])}", "removed (closure is implicit)", origin)
        )
        deduped.pop()
    if len(deduped) < 3:
        entries.append(
            ValidationEntry(
                f.id,
                CheckName.CONTOUR_CLOSURE,
                f"contour with {len(deduped)} surviving point(s)",
                "dropped (closed boundary needs >= 3 points)",
                origin,
            )
        )
        return None
    return Contour(tuple(deduped))


def _validate_gaussian(
    f: Finding, bbox: BoundingBox, center: Point, meta: ImageMeta, origin: str, entries: list[ValidationEntry]
) -> GaussianParams:
    sigma_cap = float(max(meta.width, meta.height))
    g = f.gaussian
    if g is not None and not all(
        math.isfinite(v) for v in (g.mu_x, g.mu_y, g.sigma_x, g.sigma_y, g.theta)
    ):
        entries.append(
            ValidationEntry(f.id, CheckName.GAUSSIAN_RANGE, "non-finite gaussian parameters", "discarded", origin)
        )
        g = None
    if g is None:
        synthesized = GaussianParams(
            mu_x=bbox.midpoint().x,
            mu_y=bbox.midpoint().y,
            sigma_x=min(max(bbox.width / BBOX_SIGMA_DIVISOR, SIGMA_MIN), sigma_cap),
            sigma_y=min(max(bbox.height / BBOX_SIGMA_DIVISOR, SIGMA_MIN), sigma_cap),
            theta=0.0,
        )
        entries.append(
            ValidationEntry(f.id, CheckName.GAUSSIAN_RANGE, "gaussian absent", f"synthesized {_fmt_gaussian(synthesized)}", origin)
        )
        return synthesized

    sigma_x = min(max(g.sigma_x, SIGMA_MIN), sigma_cap)
    sigma_y = min(max(g.sigma_y, SIGMA_MIN), sigma_cap)
    theta = normalize_theta(g.theta)
    if sigma_x != g.sigma_x:
        entries.append(
            ValidationEntry(f.id, CheckName.GAUSSIAN_RANGE, f"sigma_x={g.sigma_x:g}", f"sigma_x={sigma_x:g}", origin)
        )
    if sigma_y != g.sigma_y:
        entries.append(
            ValidationEntry(f.id, CheckName.GAUSSIAN_RANGE, f"sigma_y={g.sigma_y:g}", f"sigma_y={sigma_y:g}", origin)
        )
    if theta != g.theta:
        entries.append(
            ValidationEntry(f.id, CheckName.GAUSSIAN_RANGE, f"theta={g.theta:g}", f"theta={theta:g} (folded into [-pi/2, pi/2))", origin)
        )
    return GaussianParams(g.mu_x, g.mu_y, sigma_x, sigma_y, theta)


def validate_finding(f: Finding, meta: ImageMeta, origin: str = "auto") -> tuple[Finding, list[ValidationEntry]]:
    """Clamp and repair one finding against the image bounds.

    Raises DegenerateFinding when the bbox collapses to zero area after
    clamping; callers exclude such findings.
    """
    entries: list[ValidationEntry] = []
    bbox = _clamp_bbox(f, meta, origin, entries)
    if bbox.width <= 0.0 or bbox.height <= 0.0:
        raise DegenerateFinding(f"finding {f.id}: bbox {_fmt_bbox(f.bbox)} collapses to zero area in {meta.width}x{meta.height}")
    center = _repair_center(f, bbox, meta, origin, entries)
    contour = _normalize_contour(f, meta, origin, entries)
    gaussian = _validate_gaussian(f, bbox, center, meta, origin, entries)
    return (
        replace(f, bbox=bbox, center=center, contour=contour, gaussian=gaussian),
        entries,
    )


def validate_analysis(r: AnalysisResponse, origin: str = "auto") -> tuple[AnalysisResponse, ValidationLog]:
    """Validate every finding; degenerate ones are excluded and logged.

    Surviving findings are renumbered 1..n in their original order.
    """
    entries: list[ValidationEntry] = []
    survivors: list[Finding] = []
    for f in r.findings:
        try:
            validated, f_entries = validate_finding(f, r.image, origin)
        except DegenerateFinding as exc:
            entries.append(
                ValidationEntry(f.id, CheckName.BOUNDARY_CLAMP, str(exc), "finding excluded", origin)
            )
            continue
        entries.extend(f_entries)
        survivors.append(validated)
    renumbered = tuple(replace(f, id=i + 1) for i, f in enumerate(survivors))
    return replace(r, findings=renumbered), ValidationLog(tuple(entries))


def order_findings_for_display(r: AnalysisResponse) -> AnalysisResponse:
    """Sort findings by descending confidence (ties: y_min, then x_min) and renumber 1..n.

    Applied once after validation so stored ids always equal the display
    numbers used by the renderer and in reports.
    """
    ordered = sorted(r.findings, key=lambda f: (-f.confidence, f.bbox.y_min, f.bbox.x_min))
    return replace(r, findings=tuple(replace(f, id=i + 1) for i, f in enumerate(ordered)))
