"""Prompt construction and pluggable model backends (live HTTP, replay, scripted).

The live backend POSTs a generate-content style JSON body with the prompt
and base64 image, authenticating with a bearer token read from the
environment variable named in the config (keys never live in config files
or fixtures). The replay backend serves recorded raw responses from a
fixture directory, keyed by request digest or an explicit fixture name,
making the whole pipeline testable offline.
"""

from __future__ import annotations

import base64
import hashlib
import os
import threading
import time
from dataclasses import dataclass

import requests

from .errors import AuthFailure, BackendUnavailable, FixtureMissing, InvalidParameter, Timeout
from .model import ImageMeta

RETRY_BASE_SECONDS = 1.0
RETRY_FACTOR = 2.0
DEFAULT_RESPONSE_PATH = "candidates.0.content.parts.0.text"


@dataclass(frozen=True)
class PromptSpec:
    image_meta: ImageMeta
    require_coordinates: bool = True
    require_gaussian: bool = True
    require_contours: bool = True
    language: str = "en"


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "live", "replay", or "scripted"
    endpoint_url: str | None = None
    api_key_env_var: str | None = None
    model_name: str = "default"
    timeout: float = 30.0
    max_retries: int = 3
    fixture_dir: str | None = None
    script_text: str | None = None
    response_path: str = DEFAULT_RESPONSE_PATH
    max_in_flight: int = 4

    def __post_init__(self):
        if self.kind == "live" and not (self.endpoint_url and self.api_key_env_var):
            raise InvalidParameter("live backend requires endpoint_url and api_key_env_var")
        if self.kind == "replay" and not self.fixture_dir:
            raise InvalidParameter("replay backend requires fixture_dir")
        if self.kind not in ("live", "replay", "scripted"):
            raise InvalidParameter(f"unknown backend kind {self.kind!r}")


@dataclass(frozen=True)
class RawResponse:
    text: str
    latency: float
    backend_id: str
    request_digest: str


def build_prompt(spec: PromptSpec) -> str:
    """Deterministic analysis prompt for the given image.

    Always states the exact pixel dimensions and the coordinate convention;
    the coordinate / contour / spread-parameter blocks are included per the
    spec flags, and the requested JSON schema mirrors the canonical
    analysis schema field for field.
    """
    meta = spec.image_meta
    w, h = meta.width, meta.height
    lines = [
        "You are assisting with medical image analysis.",
        "",
        f"Modality hint: {meta.modality.value}."
        + (f" Source: {meta.source_name}." if meta.source_name else ""),
        f"The image is exactly {w}x{h} pixels.",
        "",
        "Coordinate convention: the origin (0, 0) is the center of the top-left pixel;",
        "x increases rightward and y increases downward. Every coordinate must be an",
        f"integer pixel position within [0, {w - 1}] horizontally and [0, {h - 1}] vertically.",
        "",
        "Examine the image in its anatomical context: identify the examination type,",
        "the anatomical region shown, the orientation, and the surrounding structures",
        "relevant for localizing any abnormality.",
        "",
    ]
    if spec.require_coordinates:
        lines += [
            "For every abnormality, report a tight bounding box and the center point",
            "of the abnormality in pixel coordinates.",
            "",
        ]
    if spec.require_contours:
        lines += [
            "When the boundary is discernible, also report a closed contour as an",
            "ordered list of at least 3 boundary points.",
            "",
        ]
    if spec.require_gaussian:
        lines += [
            "For every abnormality, estimate its spatial spread parameters:",
            "mu_x, mu_y: the distribution center in pixels;",
            "sigma_x, sigma_y: standard deviations along x and y in pixels (greater than 0);",
            "theta: the rotation angle of the spread ellipse in radians.",
            "",
        ]
    lines += [
        "Rate each finding's confidence as an integer from 1 (lowest) to 10 (highest).",
        "",
        "Reply with a single JSON object and no other text, using exactly this schema:",
        "{",
        '  "examination_type": "...",',
        '  "anatomical_region": "...",',
        '  "findings": [',
        "    {",
        '      "label": "...",',
        '      "description": "...",',
    ]
    if spec.require_coordinates:
        lines += [
            '      "bbox": {"x_min": 0, "y_min": 0, "x_max": 0, "y_max": 0},',
            '      "center": {"x": 0, "y": 0},',
        ]
    if spec.require_contours:
        lines += ['      "contour": [{"x": 0, "y": 0}],']
    if spec.require_gaussian:
        lines += [
            '      "gaussian": {"mu_x": 0.0, "mu_y": 0.0, "sigma_x": 0.0, "sigma_y": 0.0, "theta": 0.0},'
        ]
    lines += [
        '      "confidence": 1,',
        '      "clinical_significance": "..."',
        "    }",
        "  ],",
        '  "overall_impression": "..."',
        "}",
        "Report an empty findings list when no abnormality is present.",
        f"Respond in language: {spec.language}.",
    ]
    return "\n".join(lines)


def request_digest(prompt: str, image_bytes: bytes) -> str:
    digest = hashlib.sha256()
    digest.update(prompt.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(image_bytes)
    return digest.hexdigest()


def extract_by_path(payload, path: str):
    """Walk a dotted path through nested dicts/lists ('a.0.b' style)."""
    node = payload
    for part in path.split("."):
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError):
                return None
        elif isinstance(node, dict):
            if part not in node:
                return None
            node = node[part]
        else:
            return None
    return node


def _default_transport(url: str, body: dict, headers: dict, timeout: float):
    resp = requests.post(url, json=body, headers=headers, timeout=timeout)
    try:
        payload = resp.json()
    except ValueError:
        payload = {}
    return resp.status_code, payload


_SEMAPHORES: dict[BackendConfig, threading.BoundedSemaphore] = {}
_SEMAPHORE_GUARD = threading.Lock()


def _in_flight_gate(backend: BackendConfig) -> threading.BoundedSemaphore:
    with _SEMAPHORE_GUARD:
        gate = _SEMAPHORES.get(backend)
        if gate is None:
            gate = threading.BoundedSemaphore(max(1, backend.max_in_flight))
            _SEMAPHORES[backend] = gate
        return gate


def _call_live(
    prompt: str, image_bytes: bytes, backend: BackendConfig, transport, sleeper
) -> str:
    api_key = os.environ.get(backend.api_key_env_var or "")
    if not api_key:
        raise AuthFailure(f"environment variable {backend.api_key_env_var!r} is unset or empty")
    body = {
        "model": backend.model_name,
        "contents": [
            {
                "parts": [
                    {"text": prompt},
                    {
                        "inline_data": {
                            "mime_type": "image/png",
                            "data": base64.b64encode(image_bytes).decode("ascii"),
                        }
                    },
                ]
            }
        ],
    }
    headers = {"Authorization": f"Bearer {api_key}"}
    gate = _in_flight_gate(backend)
    last_error: Exception | None = None
    for attempt in range(max(1, backend.max_retries)):
        if attempt > 0:
            sleeper(RETRY_BASE_SECONDS * (RETRY_FACTOR ** (attempt - 1)))
        try:
            with gate:
                status, payload = transport(backend.endpoint_url, body, headers, backend.timeout)
        except requests.Timeout as exc:
            last_error = Timeout(f"backend timed out after {backend.timeout}s")
            last_error.__cause__ = exc
            continue
        except (requests.ConnectionError, OSError) as exc:
            last_error = BackendUnavailable(f"endpoint unreachable: {exc}")
            continue
        if status in (401, 403):
            raise AuthFailure(f"endpoint rejected credentials (HTTP {status})")
        if status >= 500:
            last_error = BackendUnavailable(f"endpoint error HTTP {status}")
            continue
        if status >= 400:
            raise BackendUnavailable(f"endpoint rejected request (HTTP {status})")
        text = extract_by_path(payload, backend.response_path)
        if not isinstance(text, str) or not text:
            raise BackendUnavailable(
                f"no text at response path {backend.response_path!r} in backend reply"
            )
        return text
    raise last_error if last_error is not None else BackendUnavailable("no attempts made")


def analyze_image(
    image_bytes: bytes,
    spec: PromptSpec,
    backend: BackendConfig,
    fixture_name: str | None = None,
    transport=_default_transport,
    sleeper=time.sleep,
) -> RawResponse:
    """Obtain raw model text for an image from the configured backend.

    Replay looks up ``fixture_dir/<request digest>.txt`` unless an explicit
    ``fixture_name`` is given. ``transport`` and ``sleeper`` exist for
    tests (attempt counting, no real sleeps).
    """
    prompt = build_prompt(spec)
    digest = request_digest(prompt, image_bytes)
    started = time.perf_counter()

    if backend.kind == "scripted":
        if backend.script_text is None:
            raise BackendUnavailable("scripted backend has no script_text configured")
        text = backend.script_text
        backend_id = "scripted"
    elif backend.kind == "replay":
        name = fixture_name or f"{digest}.txt"
        path = os.path.join(backend.fixture_dir, name)
        if not os.path.exists(path) and not os.path.splitext(name)[1]:
            path = os.path.join(backend.fixture_dir, name + ".txt")
        if not os.path.exists(path):
            raise FixtureMissing(f"no replay fixture at {path}")
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        backend_id = f"replay:{os.path.splitext(os.path.basename(path))[0]}"
    else:
        text = _call_live(prompt, image_bytes, backend, transport, sleeper)
        backend_id = f"live:{backend.model_name}"

    return RawResponse(
        text=text,
        latency=time.perf_counter() - started,
        backend_id=backend_id,
        request_digest=digest,
    )
