"""End-to-end orchestration: ingest, prompt, parse, validate, render, report.

Both the CLI and the HTTP service drive this module; neither contains
pipeline logic of its own. An analysis run materializes a session
directory with a fixed file layout (ARTIFACT_FILES) that is inspectable,
portable, and fixture-friendly.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Callable

from . import render
from .gateway import BackendConfig, PromptSpec, RawResponse, analyze_image
from .gaussian import field_for_findings
from .ingest import PreprocessOptions, load_image, preprocess
from .model import (
    AnalysisResponse,
    ImageMeta,
    ValidationLog,
    analysis_to_dict,
    log_to_list,
)
from .parsing import parse_response
from .raster import RasterImage, encode_png, read_png, write_png
from .report import ClinicalReport, build_report, export
from .validation import order_findings_for_display, validate_analysis

STAGES = ("prompting", "parsing", "validating", "rendering", "reporting")

ARTIFACT_FILES = (
    "original.png",
    "raw.txt",
    "analysis.json",
    "validation.json",
    "sketch.png",
    "overlay.png",
    "heatmap.png",
    "composite.png",
    "report.json",
    "report.md",
    "report.html",
)


@dataclass(frozen=True)
class PipelineOptions:
    overlay_alpha: float = render.DEFAULT_OVERLAY_ALPHA
    heatmap_threshold: float = render.DEFAULT_HEATMAP_THRESHOLD
    spacing: tuple[float, float] | None = None
    preprocess: PreprocessOptions = field(default_factory=PreprocessOptions)


@dataclass
class PipelineResult:
    analysis: AnalysisResponse
    log: ValidationLog
    report: ClinicalReport
    raw: RawResponse
    parser_warnings: list[str]
    out_dir: str
    artifact_hashes: dict[str, str]


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_analysis_files(
    out_dir: str,
    analysis: AnalysisResponse,
    log: ValidationLog,
    parser_warnings: list[str] | None = None,
) -> None:
    doc = analysis_to_dict(analysis, log)
    if parser_warnings:
        doc["parser_warnings"] = list(parser_warnings)
    with open(os.path.join(out_dir, "analysis.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(out_dir, "validation.json"), "w", encoding="utf-8") as fh:
        json.dump(log_to_list(log), fh, indent=2)
        fh.write("\n")


def render_and_report(
    out_dir: str,
    base: RasterImage,
    analysis: AnalysisResponse,
    log: ValidationLog,
    options: PipelineOptions,
    backend_id: str,
    clock: Callable[[], str] | None = None,
    parser_warnings: list[str] | None = None,
    progress: Callable[[str], None] | None = None,
) -> tuple[ClinicalReport, dict[str, str]]:
    """Regenerate every derived artifact for the given analysis.

    Used for the initial run and after any finding edit: nothing derived
    may survive a geometry change.
    """
    meta = analysis.image
    density = field_for_findings([f.gaussian for f in analysis.findings], meta)
    layers = render.render_all_layers(
        base, analysis.findings, meta, density,
        alpha=options.overlay_alpha, threshold=options.heatmap_threshold,
    )
    hashes: dict[str, str] = {}
    for name, img in layers.items():
        blob = encode_png(img)
        with open(os.path.join(out_dir, f"{name}.png"), "wb") as fh:
            fh.write(blob)
        hashes[f"{name}.png"] = _sha256(blob)

    if progress is not None:
        progress("reporting")
    kwargs = {} if clock is None else {"clock": clock}
    rep = build_report(analysis, log, spacing=options.spacing, backend_id=backend_id, **kwargs)
    for fmt, fname in (("json", "report.json"), ("md", "report.md"), ("html", "report.html")):
        blob = export(rep, fmt)
        with open(os.path.join(out_dir, fname), "wb") as fh:
            fh.write(blob)
        hashes[fname] = _sha256(blob)

    write_analysis_files(out_dir, analysis, log, parser_warnings)
    return rep, hashes


def run_pipeline(
    image_bytes: bytes,
    name_hint: str,
    backend: BackendConfig,
    out_dir: str,
    options: PipelineOptions = PipelineOptions(),
    fixture_name: str | None = None,
    progress: Callable[[str], None] | None = None,
    clock: Callable[[], str] | None = None,
) -> PipelineResult:
    """Run the full pipeline and write the session layout into out_dir.

    On a parse failure the original image and raw model text are already
    on disk for human review before the error propagates.
    """
    os.makedirs(out_dir, exist_ok=True)

    def stage(name: str):
        if progress is not None:
            progress(name)

    base, meta = load_image(image_bytes, name_hint)
    write_png(base, os.path.join(out_dir, "original.png"))

    stage("prompting")
    model_input = preprocess(base, options.preprocess)
    spec = PromptSpec(image_meta=meta)
    raw = analyze_image(encode_png(model_input), spec, backend, fixture_name=fixture_name)
    with open(os.path.join(out_dir, "raw.txt"), "w", encoding="utf-8") as fh:
        fh.write(raw.text)

    stage("parsing")
    analysis, _outcome, warnings = parse_response(raw.text, meta)

    stage("validating")
    analysis, log = validate_analysis(analysis)
    analysis = order_findings_for_display(analysis)

    stage("rendering")
    rep, hashes = render_and_report(
        out_dir, base, analysis, log, options, raw.backend_id, clock, warnings, progress=progress
    )
    return PipelineResult(
        analysis=analysis,
        log=log,
        report=rep,
        raw=raw,
        parser_warnings=warnings,
        out_dir=out_dir,
        artifact_hashes=hashes,
    )


def load_base_image(out_dir: str) -> RasterImage:
    return read_png(os.path.join(out_dir, "original.png"))


def artifact_hashes(out_dir: str) -> dict[str, str]:
    hashes = {}
    for name in ARTIFACT_FILES:
        path = os.path.join(out_dir, name)
        if os.path.exists(path):
            with open(path, "rb") as fh:
                hashes[name] = _sha256(fh.read())
    return hashes
