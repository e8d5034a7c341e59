"""Annotation rendering: sketch layer, alpha-blended overlay, colorized heatmap.

All rendering is deterministic: geometry is rasterized with the package's
own distance-based line fill (no font stack, no AA libraries), display
numbers use a built-in 5x7 bitmap glyph set, and identical inputs always
produce byte-identical PNG artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, InvalidParameter
from .gaussian import ScalarField
from .model import Finding, ImageMeta, Point
from .raster import RasterImage

DEFAULT_OVERLAY_ALPHA = 0.6
DEFAULT_HEATMAP_THRESHOLD = 0.05
ELLIPSE_SIGMA_FACTOR = 2.0  # semi-axes at 2 sigma cover ~95% per axis
CROSSHAIR_LENGTH = 12.0
DEFAULT_LINE_WIDTH = 2.0

# High-visibility annotation palette; cycles past 8 findings.
PALETTE: tuple[tuple[int, int, int], ...] = (
    (255, 64, 64),    # red
    (255, 220, 64),   # yellow
    (64, 220, 255),   # cyan
    (96, 255, 96),    # green
    (255, 96, 255),   # magenta
    (255, 160, 48),   # orange
    (96, 128, 255),   # blue
    (240, 240, 240),  # white
)


@dataclass(frozen=True)
class FindingStyle:
    color: tuple[int, int, int]
    display_number: int
    line_width: float = DEFAULT_LINE_WIDTH


@dataclass(frozen=True)
class StyleAssignment:
    styles: dict[int, FindingStyle]  # finding id -> style

    def __getitem__(self, finding_id: int) -> FindingStyle:
        return self.styles[finding_id]


def assign_styles(findings: tuple[Finding, ...] | list[Finding]) -> StyleAssignment:
    """Deterministic numbering and color coding.

    Findings are ranked by descending confidence, ties broken in raster
    order (y_min, then x_min); rank k gets display number k+1 and the k-th
    palette color.
    """
    ranked = sorted(findings, key=lambda f: (-f.confidence, f.bbox.y_min, f.bbox.x_min))
    styles = {
        f.id: FindingStyle(color=PALETTE[k % len(PALETTE)], display_number=k + 1)
        for k, f in enumerate(ranked)
    }
    return StyleAssignment(styles)


# ---------------------------------------------------------------------------
# Geometry rasterization (deterministic, clipped to image bounds)
# ---------------------------------------------------------------------------


def _paint_segment(data: np.ndarray, x0: float, y0: float, x1: float, y1: float,
                   color: tuple[int, int, int], width: float) -> None:
    """Fill pixels within width/2 of the segment; sub-pixel endpoints honored."""
    h, w = data.shape[0], data.shape[1]
    r = width / 2.0
    lo_x = max(0, int(math.floor(min(x0, x1) - r)))
    hi_x = min(w - 1, int(math.ceil(max(x0, x1) + r)))
    lo_y = max(0, int(math.floor(min(y0, y1) - r)))
    hi_y = min(h - 1, int(math.ceil(max(y0, y1) + r)))
    if hi_x < lo_x or hi_y < lo_y:
        return
    xs = np.arange(lo_x, hi_x + 1, dtype=np.float64)
    ys = np.arange(lo_y, hi_y + 1, dtype=np.float64)
    px, py = np.meshgrid(xs, ys)
    vx, vy = x1 - x0, y1 - y0
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0.0:
        t = np.zeros_like(px)
    else:
        t = np.clip(((px - x0) * vx + (py - y0) * vy) / seg_len2, 0.0, 1.0)
    dx = px - (x0 + t * vx)
    dy = py - (y0 + t * vy)
    mask = dx * dx + dy * dy <= r * r
    region = data[lo_y : hi_y + 1, lo_x : hi_x + 1]
    region[mask, 0] = color[0]
    region[mask, 1] = color[1]
    region[mask, 2] = color[2]
    region[mask, 3] = 255


def _paint_polyline(data, points, color, width, closed=False):
    n = len(points)
    if n == 0:
        return
    if n == 1:
        _paint_segment(data, points[0][0], points[0][1], points[0][0], points[0][1], color, width)
        return
    last = n if closed else n - 1
    for i in range(last):
        a = points[i]
        b = points[(i + 1) % n]
        _paint_segment(data, a[0], a[1], b[0], b[1], color, width)


def _paint_rect(data, x_min, y_min, x_max, y_max, color, width):
    corners = [(x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max)]
    _paint_polyline(data, corners, color, width, closed=True)


def _catmull_rom_closed(points: list[tuple[float, float]], samples_per_segment: int = 16):
    """Sample a closed Catmull-Rom spline through the given points."""
    n = len(points)
    out = []
    for i in range(n):
        p0 = points[(i - 1) % n]
        p1 = points[i]
        p2 = points[(i + 1) % n]
        p3 = points[(i + 2) % n]
        for s in range(samples_per_segment):
            t = s / samples_per_segment
            t2 = t * t
            t3 = t2 * t
            x = 0.5 * (
                2.0 * p1[0]
                + (-p0[0] + p2[0]) * t
                + (2.0 * p0[0] - 5.0 * p1[0] + 4.0 * p2[0] - p3[0]) * t2
                + (-p0[0] + 3.0 * p1[0] - 3.0 * p2[0] + p3[0]) * t3
            )
            y = 0.5 * (
                2.0 * p1[1]
                + (-p0[1] + p2[1]) * t
                + (2.0 * p0[1] - 5.0 * p1[1] + 4.0 * p2[1] - p3[1]) * t2
                + (-p0[1] + 3.0 * p1[1] - 3.0 * p2[1] + p3[1]) * t3
            )
            out.append((x, y))
    return out


def _ellipse_points(cx, cy, a, b, theta, samples=256):
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    pts = []
    for k in range(samples):
        t = 2.0 * math.pi * k / samples
        ex = a * math.cos(t)
        ey = b * math.sin(t)
        pts.append((cx + ex * cos_t - ey * sin_t, cy + ex * sin_t + ey * cos_t))
    return pts


# 5x7 bitmap digits; each entry is 7 rows of 5 bits, MSB left.
_DIGIT_GLYPHS = {
    "0": (0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110),
    "1": (0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110),
    "2": (0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111),
    "3": (0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110),
    "4": (0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010),
    "5": (0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110),
    "6": (0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110),
    "7": (0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000),
    "8": (0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110),
    "9": (0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100),
}


def _paint_text(data, text: str, x: int, y: int, color, scale: int = 2) -> None:
    h, w = data.shape[0], data.shape[1]
    cursor = x
    for ch in text:
        glyph = _DIGIT_GLYPHS.get(ch)
        if glyph is None:
            cursor += 6 * scale
            continue
        for row, bits in enumerate(glyph):
            for col in range(5):
                if not (bits >> (4 - col)) & 1:
                    continue
                py0 = y + row * scale
                px0 = cursor + col * scale
                for dy in range(scale):
                    for dx in range(scale):
                        py, px = py0 + dy, px0 + dx
                        if 0 <= px < w and 0 <= py < h:
                            data[py, px, 0] = color[0]
                            data[py, px, 1] = color[1]
                            data[py, px, 2] = color[2]
                            data[py, px, 3] = 255
        cursor += 6 * scale


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------


def render_sketch(
    findings: tuple[Finding, ...] | list[Finding],
    meta: ImageMeta,
    styles: StyleAssignment | None = None,
) -> RasterImage:
    """Transparent RGBA annotation layer: contour, bbox, crosshair, spread ellipse, number."""
    if styles is None:
        styles = assign_styles(findings)
    layer = np.zeros((meta.height, meta.width, 4), dtype=np.uint8)
    for f in findings:
        style = styles[f.id]
        color = style.color
        lw = style.line_width

        if f.contour is not None:
            pts = [(p.x, p.y) for p in f.contour.points]
            if len(pts) >= 4:
                _paint_polyline(layer, _catmull_rom_closed(pts), color, lw, closed=True)
            else:
                _paint_polyline(layer, pts, color, lw, closed=True)

        _paint_rect(layer, f.bbox.x_min, f.bbox.y_min, f.bbox.x_max, f.bbox.y_max, color, lw)

        half = CROSSHAIR_LENGTH / 2.0
        _paint_segment(layer, f.center.x - half, f.center.y, f.center.x + half, f.center.y, color, lw)
        _paint_segment(layer, f.center.x, f.center.y - half, f.center.x, f.center.y + half, color, lw)

        if f.gaussian is not None:
            g = f.gaussian
            pts = _ellipse_points(
                g.mu_x, g.mu_y, ELLIPSE_SIGMA_FACTOR * g.sigma_x, ELLIPSE_SIGMA_FACTOR * g.sigma_y, g.theta
            )
            _paint_polyline(layer, pts, color, lw, closed=True)

        _paint_text(layer, str(style.display_number), int(f.bbox.x_min) + 4, int(f.bbox.y_min) + 4, color)

    return RasterImage(meta.width, meta.height, "RGBA", layer)


def blend_overlay(base: RasterImage, layer: RasterImage, alpha: float) -> RasterImage:
    """Source-over blend of an RGBA layer onto the base image with global alpha scaling."""
    if not (0.0 <= alpha <= 1.0):
        raise InvalidParameter(f"alpha must be in [0, 1], got {alpha}")
    if (base.width, base.height) != (layer.width, layer.height):
        raise DimensionMismatch(
            f"base {base.width}x{base.height} vs layer {layer.width}x{layer.height}"
        )
    if layer.channels != "RGBA":
        layer = layer.to_rgba()
    base_rgba = base.to_rgba()
    out = _kernels.blend_rgba(base_rgba.data, layer.data, float(alpha))
    return RasterImage(base.width, base.height, "RGBA", out)


def colorize_heatmap(field: ScalarField, threshold: float = DEFAULT_HEATMAP_THRESHOLD) -> RasterImage:
    """Map a unit-normalized field through the fixed blue-green-yellow-red ramp.

    Values below the threshold are fully transparent; alpha ramps linearly
    from 0 at the threshold to 230 at peak.
    """
    if not (0.0 <= threshold <= 1.0):
        raise InvalidParameter(f"threshold must be in [0, 1], got {threshold}")
    out = _kernels.colorize_rgba(field.values, float(threshold))
    return RasterImage(field.width, field.height, "RGBA", out)


def render_all_layers(
    base: RasterImage,
    findings: tuple[Finding, ...] | list[Finding],
    meta: ImageMeta,
    field: ScalarField,
    alpha: float = DEFAULT_OVERLAY_ALPHA,
    threshold: float = DEFAULT_HEATMAP_THRESHOLD,
) -> dict[str, RasterImage]:
    """The four standard artifacts: sketch, overlay, heatmap, composite."""
    sketch = render_sketch(findings, meta)
    heatmap = colorize_heatmap(field, threshold)
    return {
        "sketch": sketch,
        "overlay": blend_overlay(base, sketch, alpha),
        "heatmap": heatmap,
        "composite": blend_overlay(base, heatmap, alpha),
    }
