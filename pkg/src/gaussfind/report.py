"""Structured clinical report generation and export (JSON / Markdown / HTML).

Reports are deterministic given an injected clock: two builds from the same
analysis differ only in the generation timestamp. Dimensions are reported
in pixels and, when pixel spacing is known, in millimeters. The caveat
block is always present: automated output requires clinician review.
"""

from __future__ import annotations

import html
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

from .model import (
    AnalysisResponse,
    BoundingBox,
    GaussianParams,
    Point,
    ValidationLog,
    bbox_to_dict,
    gaussian_to_dict,
    log_to_list,
    log_from_list,
    point_to_dict,
)

CAVEATS = (
    "This report was generated by an automated image-analysis pipeline.",
    "All findings, measurements, and recommendations require review by a qualified clinician before any clinical use.",
    "Coordinates and statistical parameters are estimates subject to the geometric corrections listed in the validation appendix.",
)

REC_HIGH_CONFIDENCE = "High-confidence finding(s) present: correlate clinically; specialist review advised."
REC_LOW_CONFIDENCE = "Low-confidence finding(s) present: repeat imaging or expert over-read suggested."
REC_NO_FINDINGS = "No abnormality detected by automated analysis."

HIGH_CONFIDENCE_THRESHOLD = 8
LOW_CONFIDENCE_THRESHOLD = 3


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class ReportHeader:
    examination_type: str
    anatomical_region: str
    image_width: int
    image_height: int
    generated_at: str
    backend_id: str
    source_name: str = ""


@dataclass(frozen=True)
class FindingBlock:
    display_number: int
    label: str
    description: str
    center: Point
    bbox: BoundingBox
    width_px: float
    height_px: float
    gaussian: GaussianParams
    confidence: int
    clinical_significance: str
    width_mm: float | None = None
    height_mm: float | None = None

    def dimensions_text(self) -> str:
        px = f"{self.width_px:g}×{self.height_px:g} px"
        if self.width_mm is None:
            return px
        return f"{px} ({self.width_mm:.1f}×{self.height_mm:.1f} mm)"


@dataclass(frozen=True)
class ClinicalReport:
    header: ReportHeader
    findings_section: tuple[FindingBlock, ...]
    impression: str
    recommendations: tuple[str, ...]
    caveats: tuple[str, ...] = CAVEATS
    validation_appendix: ValidationLog = field(default_factory=ValidationLog)


def build_report(
    r: AnalysisResponse,
    log: ValidationLog,
    spacing: tuple[float, float] | None = None,
    backend_id: str = "unknown",
    clock: Callable[[], str] = _utc_now,
) -> ClinicalReport:
    """Assemble the report from a validated analysis.

    ``spacing`` (mm per pixel, x then y) overrides any spacing carried by
    the image metadata; millimeter dimensions appear only when one of the
    two is present.
    """
    if spacing is None:
        spacing = r.image.pixel_spacing

    blocks = []
    for f in r.findings:
        width_px = f.bbox.width
        height_px = f.bbox.height
        width_mm = height_mm = None
        if spacing is not None:
            width_mm = width_px * spacing[0]
            height_mm = height_px * spacing[1]
        blocks.append(
            FindingBlock(
                display_number=f.id,
                label=f.label,
                description=f.description,
                center=f.center,
                bbox=f.bbox,
                width_px=width_px,
                height_px=height_px,
                width_mm=width_mm,
                height_mm=height_mm,
                gaussian=f.gaussian,
                confidence=f.confidence,
                clinical_significance=f.clinical_significance,
            )
        )

    recommendations = []
    if not r.findings:
        recommendations.append(REC_NO_FINDINGS)
    else:
        if any(f.confidence >= HIGH_CONFIDENCE_THRESHOLD for f in r.findings):
            recommendations.append(REC_HIGH_CONFIDENCE)
        if any(f.confidence <= LOW_CONFIDENCE_THRESHOLD for f in r.findings):
            recommendations.append(REC_LOW_CONFIDENCE)

    header = ReportHeader(
        examination_type=r.examination_type,
        anatomical_region=r.anatomical_region,
        image_width=r.image.width,
        image_height=r.image.height,
        generated_at=clock(),
        backend_id=backend_id,
        source_name=r.image.source_name,
    )
    return ClinicalReport(
        header=header,
        findings_section=tuple(blocks),
        impression=r.overall_impression,
        recommendations=tuple(recommendations),
        validation_appendix=log,
    )


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def report_to_dict(report: ClinicalReport) -> dict:
    return {
        "header": {
            "examination_type": report.header.examination_type,
            "anatomical_region": report.header.anatomical_region,
            "image_width": report.header.image_width,
            "image_height": report.header.image_height,
            "generated_at": report.header.generated_at,
            "backend_id": report.header.backend_id,
            "source_name": report.header.source_name,
        },
        "findings": [
            {
                "display_number": b.display_number,
                "label": b.label,
                "description": b.description,
                "center": point_to_dict(b.center),
                "bbox": bbox_to_dict(b.bbox),
                "width_px": b.width_px,
                "height_px": b.height_px,
                "width_mm": b.width_mm,
                "height_mm": b.height_mm,
                "gaussian": gaussian_to_dict(b.gaussian),
                "confidence": b.confidence,
                "clinical_significance": b.clinical_significance,
            }
            for b in report.findings_section
        ],
        "impression": report.impression,
        "recommendations": list(report.recommendations),
        "caveats": list(report.caveats),
        "validation_appendix": log_to_list(report.validation_appendix),
    }


def report_from_dict(d: dict) -> ClinicalReport:
    h = d["header"]
    return ClinicalReport(
        header=ReportHeader(
            examination_type=h["examination_type"],
            anatomical_region=h["anatomical_region"],
            image_width=int(h["image_width"]),
            image_height=int(h["image_height"]),
            generated_at=h["generated_at"],
            backend_id=h["backend_id"],
            source_name=h.get("source_name", ""),
        ),
        findings_section=tuple(
            FindingBlock(
                display_number=int(b["display_number"]),
                label=b["label"],
                description=b["description"],
                center=Point(float(b["center"]["x"]), float(b["center"]["y"])),
                bbox=BoundingBox(
                    float(b["bbox"]["x_min"]),
                    float(b["bbox"]["y_min"]),
                    float(b["bbox"]["x_max"]),
                    float(b["bbox"]["y_max"]),
                ),
                width_px=float(b["width_px"]),
                height_px=float(b["height_px"]),
                width_mm=None if b.get("width_mm") is None else float(b["width_mm"]),
                height_mm=None if b.get("height_mm") is None else float(b["height_mm"]),
                gaussian=GaussianParams(
                    float(b["gaussian"]["mu_x"]),
                    float(b["gaussian"]["mu_y"]),
                    float(b["gaussian"]["sigma_x"]),
                    float(b["gaussian"]["sigma_y"]),
                    float(b["gaussian"]["theta"]),
                ),
                confidence=int(b["confidence"]),
                clinical_significance=b["clinical_significance"],
            )
            for b in d["findings"]
        ),
        impression=d["impression"],
        recommendations=tuple(d["recommendations"]),
        caveats=tuple(d["caveats"]),
        validation_appendix=log_from_list(d["validation_appendix"]),
    )


def _markdown(report: ClinicalReport) -> str:
    h = report.header
    lines = [
        "# Automated Imaging Analysis Report",
        "",
        f"- **Examination type:** {h.examination_type}",
        f"- **Anatomical region:** {h.anatomical_region}",
        f"- **Image dimensions:** {h.image_width}×{h.image_height} px",
        f"- **Generated at:** {h.generated_at}",
        f"- **Analysis backend:** {h.backend_id}",
    ]
    if h.source_name:
        lines.append(f"- **Source:** {h.source_name}")
    lines += ["", "## Findings", ""]
    if not report.findings_section:
        lines.append("No findings were reported.")
    for b in report.findings_section:
        g = b.gaussian
        lines += [
            f"## Finding {b.display_number}: {b.label}",
            "",
            f"- **Description:** {b.description}" if b.description else "- **Description:** (none)",
            f"- **Center:** ({b.center.x:g}, {b.center.y:g}) px",
            f"- **Bounding box:** ({b.bbox.x_min:g}, {b.bbox.y_min:g}) – ({b.bbox.x_max:g}, {b.bbox.y_max:g}) px",
            f"- **Dimensions:** {b.dimensions_text()}",
            f"- **Spread model:** mu=({g.mu_x:g}, {g.mu_y:g}), sigma=({g.sigma_x:g}, {g.sigma_y:g}) px, rotation {g.theta:g} rad",
            f"- **Confidence:** {b.confidence}/10",
            f"- **Clinical significance:** {b.clinical_significance}" if b.clinical_significance else "- **Clinical significance:** (not stated)",
            "",
        ]
    lines += ["## Impression", "", report.impression or "(none provided)", ""]
    lines += ["## Recommendations", ""]
    lines += [f"- {rec}" for rec in report.recommendations]
    lines += ["", "## Caveats", ""]
    lines += [f"- {c}" for c in report.caveats]
    lines += ["", "## Validation Appendix", ""]
    if not report.validation_appendix.entries:
        lines.append("No geometric corrections were required.")
    else:
        lines.append("| Finding | Check | Original | Corrected | Origin |")
        lines.append("|---|---|---|---|---|")
        for e in report.validation_appendix.entries:
            lines.append(
                f"| {e.finding_id} | {e.check.value} | {e.original} | {e.corrected} | {e.origin} |"
            )
    return "\n".join(lines) + "\n"


def _html(report: ClinicalReport) -> str:
    h = report.header
    esc = html.escape
    parts = [
        "<!DOCTYPE html>",
        "<html>",
        "<head>",
        '<meta charset="utf-8">',
        f"<title>Analysis report: {esc(h.examination_type)}</title>",
        "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto;}table{border-collapse:collapse;}td,th{border:1px solid #999;padding:0.3em 0.6em;}</style>",
        "</head>",
        "<body>",
        "<h1>Automated Imaging Analysis Report</h1>",
        "<ul>",
        f"<li><b>Examination type:</b> {esc(h.examination_type)}</li>",
        f"<li><b>Anatomical region:</b> {esc(h.anatomical_region)}</li>",
        f"<li><b>Image dimensions:</b> {h.image_width}×{h.image_height} px</li>",
        f"<li><b>Generated at:</b> {esc(h.generated_at)}</li>",
        f"<li><b>Analysis backend:</b> {esc(h.backend_id)}</li>",
        f"<li><b>Source:</b> {esc(h.source_name)}</li>" if h.source_name else "",
        "</ul>",
        "<h2>Findings</h2>",
    ]
    if not report.findings_section:
        parts.append("<p>No findings were reported.</p>")
    for b in report.findings_section:
        g = b.gaussian
        parts += [
            f"<h3>Finding {b.display_number}: {esc(b.label)}</h3>",
            "<ul>",
            f"<li><b>Description:</b> {esc(b.description) or '(none)'}</li>",
            f"<li><b>Center:</b> ({b.center.x:g}, {b.center.y:g}) px</li>",
            f"<li><b>Bounding box:</b> ({b.bbox.x_min:g}, {b.bbox.y_min:g}) &ndash; ({b.bbox.x_max:g}, {b.bbox.y_max:g}) px</li>",
            f"<li><b>Dimensions:</b> {esc(b.dimensions_text())}</li>",
            f"<li><b>Spread model:</b> mu=({g.mu_x:g}, {g.mu_y:g}), sigma=({g.sigma_x:g}, {g.sigma_y:g}) px, rotation {g.theta:g} rad</li>",
            f"<li><b>Confidence:</b> {b.confidence}/10</li>",
            f"<li><b>Clinical significance:</b> {esc(b.clinical_significance) or '(not stated)'}</li>",
            "</ul>",
        ]
    parts += ["<h2>Impression</h2>", f"<p>{esc(report.impression) or '(none provided)'}</p>"]
    parts += ["<h2>Recommendations</h2>", "<ul>"]
    parts += [f"<li>{esc(rec)}</li>" for rec in report.recommendations]
    parts += ["</ul>", "<h2>Caveats</h2>", "<ul>"]
    parts += [f"<li>{esc(c)}</li>" for c in report.caveats]
    parts += ["</ul>", "<h2>Validation Appendix</h2>"]
    if not report.validation_appendix.entries:
        parts.append("<p>No geometric corrections were required.</p>")
    else:
        parts.append("<table><tr><th>Finding</th><th>Check</th><th>Original</th><th>Corrected</th><th>Origin</th></tr>")
        for e in report.validation_appendix.entries:
            parts.append(
                f"<tr><td>{e.finding_id}</td><td>{esc(e.check.value)}</td>"
                f"<td>{esc(e.original)}</td><td>{esc(e.corrected)}</td><td>{esc(e.origin)}</td></tr>"
            )
        parts.append("</table>")
    parts += ["</body>", "</html>"]
    return "\n".join(p for p in parts if p) + "\n"


def export(report: ClinicalReport, fmt: str) -> bytes:
    """Serialize the report; fmt is one of json, md, html."""
    fmt = fmt.lower()
    if fmt == "json":
        return (json.dumps(report_to_dict(report), indent=2) + "\n").encode("utf-8")
    if fmt in ("md", "markdown"):
        return _markdown(report).encode("utf-8")
    if fmt == "html":
        return _html(report).encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r} (expected json, md, or html)")
