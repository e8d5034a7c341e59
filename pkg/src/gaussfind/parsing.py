"""Extraction of structured analyses from free-form model text.

Models rarely return clean JSON: the reply may be fenced, wrapped in prose,
truncated, or degraded to loose ``key: value`` lines. ``extract_structured``
tries four strategies in a fixed order and reports which one succeeded;
``coerce_response`` then bends the candidate object into the canonical
analysis schema, recording every default and repair as a warning.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum

from .errors import SchemaViolation, Unparseable
from .model import (
    AnalysisResponse,
    BoundingBox,
    Contour,
    Finding,
    GaussianParams,
    ImageMeta,
    Point,
    clamp_confidence,
)


class Strategy(Enum):
    DIRECT_PARSE = "direct_parse"
    FENCED_BLOCK = "fenced_block"
    BALANCED_BRACE_SCAN = "balanced_brace_scan"
    KEY_VALUE_FALLBACK = "key_value_fallback"


@dataclass(frozen=True)
class ExtractionOutcome:
    strategy_used: Strategy
    candidate_text: str
    warnings: tuple[str, ...] = ()


_FENCE_RE = re.compile(r"```(?:json)?[ \t]*\r?\n?(.*?)```", re.DOTALL | re.IGNORECASE)

# Loose "key: value" line, tolerating quotes, '=' separators, and trailing commas.
_KV_LINE_RE = re.compile(
    r"""^\s*["'*\-]*\s*([A-Za-z_][A-Za-z0-9_ \-]*?)\s*["']?\s*[:=]\s*(.*?)\s*[,;]?\s*$"""
)
_NUMBER_RE = re.compile(r"^[\"']?([-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)[\"']?$")

_EXAM_KEYS = {"examination_type", "examination", "exam_type", "exam"}
_REGION_KEYS = {"anatomical_region", "region", "anatomy", "anatomical_location"}
_IMPRESSION_KEYS = {"overall_impression", "impression"}
_LABEL_KEYS = {"label", "finding", "abnormality", "lesion"}
_COORD_KEYS = {
    "x_min", "y_min", "x_max", "y_max",
    "center_x", "center_y",
    "mu_x", "mu_y", "sigma_x", "sigma_y", "theta",
    "confidence",
}

# Scan budget so pathological inputs (walls of braces) stay cheap.
_MAX_SCAN_CHARS = 1_000_000
_MAX_TEXT_CHARS = 200_000


def _try_parse_object(text: str) -> dict | None:
    """json.loads that only accepts objects and never raises."""
    try:
        value = json.loads(text)
    except Exception:
        return None
    return value if isinstance(value, dict) else None


def _scan_balanced(text: str, start: int) -> tuple[str | None, int]:
    """Extract the balanced {...} region starting at ``start``.

    String-aware: braces inside JSON string literals do not count. Returns
    (region or None, characters consumed).
    """
    depth = 0
    in_string = False
    escaped = False
    i = start
    n = len(text)
    while i < n:
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        else:
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start : i + 1], i + 1 - start
        i += 1
    return None, n - start


def _first_balanced_object(text: str) -> str | None:
    """First balanced top-level {...} region in the text, if any."""
    budget = _MAX_SCAN_CHARS
    pos = text.find("{")
    while pos != -1 and budget > 0:
        region, consumed = _scan_balanced(text, pos)
        budget -= consumed
        if region is not None:
            return region
        pos = text.find("{", pos + 1)
    return None


def _salvage_key_values(text: str) -> tuple[dict | None, list[str]]:
    """Line-oriented salvage of exam metadata and coordinate-bearing findings.

    A finding group is opened by a label-like key or by a repeated coordinate
    key; it survives only if it carries a complete bbox or a complete center.
    """
    warnings: list[str] = []
    result: dict = {}
    groups: list[dict] = []
    current: dict = {}

    def flush():
        nonlocal current
        if current:
            groups.append(current)
            current = {}

    for line in text.splitlines():
        m = _KV_LINE_RE.match(line)
        if not m:
            continue
        key = m.group(1).strip().lower().replace(" ", "_").replace("-", "_")
        value = m.group(2).strip()
        if key in _EXAM_KEYS and "examination_type" not in result:
            result["examination_type"] = value.strip("\"'")
        elif key in _REGION_KEYS and "anatomical_region" not in result:
            result["anatomical_region"] = value.strip("\"'")
        elif key in _IMPRESSION_KEYS and "overall_impression" not in result:
            result["overall_impression"] = value.strip("\"'")
        elif key in _LABEL_KEYS:
            flush()
            current["label"] = value.strip("\"'")
        elif key in _COORD_KEYS:
            num = _NUMBER_RE.match(value)
            if not num:
                continue
            if key in current:
                flush()
            current[key] = float(num.group(1))
        elif key == "description" and current:
            current.setdefault("description", value.strip("\"'"))
    flush()

    findings = []
    for g in groups:
        f: dict = {}
        if all(k in g for k in ("x_min", "y_min", "x_max", "y_max")):
            f["bbox"] = {k: g[k] for k in ("x_min", "y_min", "x_max", "y_max")}
        if "center_x" in g and "center_y" in g:
            f["center"] = {"x": g["center_x"], "y": g["center_y"]}
        if not f:
            continue  # no usable geometry on this group
        for k in ("label", "description"):
            if k in g:
                f[k] = g[k]
        if "confidence" in g:
            f["confidence"] = g["confidence"]
        if all(k in g for k in ("mu_x", "mu_y", "sigma_x", "sigma_y")):
            f["gaussian"] = {
                "mu_x": g["mu_x"],
                "mu_y": g["mu_y"],
                "sigma_x": g["sigma_x"],
                "sigma_y": g["sigma_y"],
                "theta": g.get("theta", 0.0),
            }
        findings.append(f)

    if not result and not findings:
        return None, warnings
    result["findings"] = findings
    warnings.append(f"key_value_fallback: salvaged {len(findings)} finding(s) from loose text")
    return result, warnings


def extract_structured(raw: str) -> ExtractionOutcome:
    """Recover a JSON-object candidate from raw model text.

    Strategies are attempted strictly in order; the first success wins:

    1. parse the entire trimmed text as JSON
    2. parse the first fenced code block (``` or ```json)
    3. parse the first balanced top-level {...} region (string-aware)
    4. line-oriented key-value salvage into a partial object

    Raises Unparseable when all four fail; the raw text is attached so the
    caller can surface it for human review.
    """
    if not raw or not raw.strip():
        raise Unparseable("empty response text", raw_text=raw or "")
    text = raw[:_MAX_TEXT_CHARS]

    trimmed = text.strip()
    if _try_parse_object(trimmed) is not None:
        return ExtractionOutcome(Strategy.DIRECT_PARSE, trimmed)

    fence = _FENCE_RE.search(text)
    if fence:
        candidate = fence.group(1).strip()
        if _try_parse_object(candidate) is not None:
            return ExtractionOutcome(
                Strategy.FENCED_BLOCK, candidate, ("fenced_block: stripped code fence",)
            )

    region = _first_balanced_object(text)
    if region is not None and _try_parse_object(region) is not None:
        return ExtractionOutcome(
            Strategy.BALANCED_BRACE_SCAN,
            region,
            ("balanced_brace_scan: extracted embedded object",),
        )

    salvaged, warnings = _salvage_key_values(text)
    if salvaged is not None:
        return ExtractionOutcome(
            Strategy.KEY_VALUE_FALLBACK, json.dumps(salvaged), tuple(warnings)
        )

    raise Unparseable("no strategy extracted structured content", raw_text=raw)


# ---------------------------------------------------------------------------
# Coercion into the canonical schema
# ---------------------------------------------------------------------------


def _as_number(value, path: str, warnings: list[str]) -> float | None:
    """Coerce a JSON value to a finite float, or None with a warning."""
    if isinstance(value, bool) or value is None:
        return None
    if isinstance(value, (int, float)):
        num = float(value)
    elif isinstance(value, str):
        m = _NUMBER_RE.match(value.strip())
        if not m:
            warnings.append(f"{path}: non-numeric string {value!r} ignored")
            return None
        num = float(m.group(1))
        warnings.append(f"{path}: coerced string {value!r} to number")
    else:
        warnings.append(f"{path}: non-numeric value ignored")
        return None
    if not math.isfinite(num):
        warnings.append(f"{path}: non-finite value ignored")
        return None
    return num


def _coerce_point(value, path: str, warnings: list[str]) -> Point | None:
    if isinstance(value, dict):
        x = _as_number(value.get("x"), f"{path}.x", warnings)
        y = _as_number(value.get("y"), f"{path}.y", warnings)
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        x = _as_number(value[0], f"{path}[0]", warnings)
        y = _as_number(value[1], f"{path}[1]", warnings)
        if x is not None and y is not None:
            warnings.append(f"{path}: coerced [x, y] pair to point object")
    else:
        return None
    if x is None or y is None:
        return None
    return Point(x, y)


def _coerce_bbox(value, path: str, warnings: list[str]) -> BoundingBox | None:
    if isinstance(value, dict):
        parts = [
            _as_number(value.get(k), f"{path}.{k}", warnings)
            for k in ("x_min", "y_min", "x_max", "y_max")
        ]
    elif isinstance(value, (list, tuple)) and len(value) == 4:
        parts = [_as_number(v, f"{path}[{i}]", warnings) for i, v in enumerate(value)]
        if all(p is not None for p in parts):
            warnings.append(f"{path}: coerced 4-element list to bbox object")
    else:
        return None
    if any(p is None for p in parts):
        return None
    return BoundingBox(*parts)


def _coerce_contour(value, path: str, warnings: list[str]) -> Contour | None:
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        return None
    points = []
    for i, item in enumerate(value):
        p = _coerce_point(item, f"{path}[{i}]", warnings)
        if p is not None:
            points.append(p)
    if len(points) < 3:
        warnings.append(f"{path}: fewer than 3 usable points, contour dropped")
        return None
    return Contour(tuple(points))


def _coerce_gaussian(value, center: Point, path: str, warnings: list[str]) -> GaussianParams | None:
    if not isinstance(value, dict):
        return None
    sigma_x = _as_number(value.get("sigma_x"), f"{path}.sigma_x", warnings)
    sigma_y = _as_number(value.get("sigma_y"), f"{path}.sigma_y", warnings)
    if sigma_x is None or sigma_y is None:
        warnings.append(f"{path}: missing spread parameters, discarded (will be synthesized)")
        return None
    mu_x = _as_number(value.get("mu_x"), f"{path}.mu_x", warnings)
    mu_y = _as_number(value.get("mu_y"), f"{path}.mu_y", warnings)
    if mu_x is None:
        mu_x = center.x
        warnings.append(f"{path}.mu_x: defaulted to finding center")
    if mu_y is None:
        mu_y = center.y
        warnings.append(f"{path}.mu_y: defaulted to finding center")
    theta = _as_number(value.get("theta"), f"{path}.theta", warnings)
    if theta is None:
        theta = 0.0
        if "theta" not in value:
            warnings.append(f"{path}.theta: defaulted to 0")
    return GaussianParams(mu_x, mu_y, sigma_x, sigma_y, theta)


def _coerce_finding(item: dict, idx: int, number: int, meta: ImageMeta, warnings: list[str]) -> Finding:
    path = f"findings[{idx}]"
    full_image = BoundingBox(0.0, 0.0, float(meta.width - 1), float(meta.height - 1))

    bbox = _coerce_bbox(item.get("bbox"), f"{path}.bbox", warnings)
    center = _coerce_point(item.get("center"), f"{path}.center", warnings)

    if bbox is None and center is None:
        # Keep the finding but mark it low-trust over the whole image.
        bbox = full_image
        center = bbox.midpoint()
        warnings.append(f"{path}: no usable coordinates; defaulted to full-image bbox (low trust)")
    elif bbox is None:
        bbox = full_image
        warnings.append(f"{path}.bbox: missing; defaulted to full-image bbox (low trust)")
    elif center is None:
        center = bbox.midpoint()
        warnings.append(f"{path}.center: defaulted to bbox midpoint")

    label = item.get("label")
    if not isinstance(label, str) or not label.strip():
        label = "unlabeled finding"
        warnings.append(f"{path}.label: defaulted")
    description = item.get("description")
    if not isinstance(description, str):
        description = ""
        if "description" in item:
            warnings.append(f"{path}.description: non-text value ignored")
    significance = item.get("clinical_significance")
    if not isinstance(significance, str):
        significance = ""

    conf_raw = _as_number(item.get("confidence"), f"{path}.confidence", warnings)
    if conf_raw is None:
        confidence = 5
        warnings.append(f"{path}.confidence: missing; defaulted to 5")
    else:
        confidence = clamp_confidence(conf_raw)
        if float(confidence) != conf_raw:
            warnings.append(f"{path}.confidence: {conf_raw} rounded/clamped to {confidence}")

    contour = _coerce_contour(item.get("contour"), f"{path}.contour", warnings) if "contour" in item else None
    gaussian = _coerce_gaussian(item.get("gaussian"), center, f"{path}.gaussian", warnings) if "gaussian" in item else None

    return Finding(
        id=number,
        label=label.strip(),
        description=description,
        bbox=bbox,
        center=center,
        confidence=confidence,
        clinical_significance=significance,
        contour=contour,
        gaussian=gaussian,
    )


def coerce_response(candidate: dict, meta: ImageMeta) -> tuple[AnalysisResponse, list[str]]:
    """Coerce a parsed candidate object into an AnalysisResponse.

    Missing optional fields are defaulted, numeric strings become numbers,
    confidence is rounded half-up and clamped to 1..10, and finding ids are
    renumbered 1..n in input order. Every coercion lands in the returned
    warnings list.

    Raises SchemaViolation when there is no findings array and nothing
    salvageable as a single finding.
    """
    if not isinstance(candidate, dict):
        raise SchemaViolation("candidate is not an object", paths=["$"])
    warnings: list[str] = []

    raw_findings = candidate.get("findings")
    if not isinstance(raw_findings, list):
        if isinstance(candidate.get("bbox"), (dict, list)) or isinstance(
            candidate.get("center"), (dict, list)
        ):
            raw_findings = [candidate]
            warnings.append("findings: response was a bare finding object; wrapped into a list")
        else:
            raise SchemaViolation("no findings array and no salvageable finding", paths=["findings"])

    exam = candidate.get("examination_type")
    if not isinstance(exam, str) or not exam.strip():
        exam = "Unknown"
        warnings.append("examination_type: defaulted to Unknown")
    region = candidate.get("anatomical_region")
    if not isinstance(region, str) or not region.strip():
        region = "Unknown"
        warnings.append("anatomical_region: defaulted to Unknown")
    impression = candidate.get("overall_impression")
    if not isinstance(impression, str):
        impression = ""
        if "overall_impression" in candidate:
            warnings.append("overall_impression: non-text value ignored")

    findings: list[Finding] = []
    for idx, item in enumerate(raw_findings):
        if not isinstance(item, dict):
            warnings.append(f"findings[{idx}]: not an object, skipped")
            continue
        findings.append(_coerce_finding(item, idx, len(findings) + 1, meta, warnings))

    return (
        AnalysisResponse(
            examination_type=exam.strip(),
            anatomical_region=region.strip(),
            image=meta,
            findings=tuple(findings),
            overall_impression=impression,
        ),
        warnings,
    )


def parse_response(raw: str, meta: ImageMeta) -> tuple[AnalysisResponse, ExtractionOutcome, list[str]]:
    """Extraction + coercion in one step; returns the analysis, the outcome, and all warnings."""
    outcome = extract_structured(raw)
    candidate = json.loads(outcome.candidate_text)
    analysis, warnings = coerce_response(candidate, meta)
    return analysis, outcome, list(outcome.warnings) + warnings
