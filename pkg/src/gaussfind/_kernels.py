"""Hot per-pixel kernels with numba acceleration and a pure-numpy fallback.

Set GAUSSFIND_NO_NUMBA=1 to force the numpy path (it is also used
automatically when numba is not importable). Both paths perform the same
scalar operations in the same order, so their outputs are bit-identical;
np.exp is applied outside the jitted code for the same reason. The
benchmark in benchmarks/bench_kernels.py compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("GAUSSFIND_NO_NUMBA", "") not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# Gaussian exponent over a pixel window
# ---------------------------------------------------------------------------


def _gaussian_exponent_numpy(x0, y0, w, h, mu_x, mu_y, sigma_x, sigma_y, rho):
    dx = np.arange(x0, x0 + w, dtype=np.float64) - mu_x
    dy = np.arange(y0, y0 + h, dtype=np.float64) - mu_y
    sx2 = sigma_x * sigma_x
    sy2 = sigma_y * sigma_y
    sxsy = sigma_x * sigma_y
    factor = -1.0 / (2.0 * (1.0 - rho * rho))
    t1 = (dx * dx) / sx2
    t3 = (dy * dy) / sy2
    t2 = (2.0 * rho * np.outer(dy, dx)) / sxsy
    return factor * ((t1[np.newaxis, :] - t2) + t3[:, np.newaxis])


def _gaussian_exponent_loop(x0, y0, w, h, mu_x, mu_y, sigma_x, sigma_y, rho):
    out = np.empty((h, w), dtype=np.float64)
    sx2 = sigma_x * sigma_x
    sy2 = sigma_y * sigma_y
    sxsy = sigma_x * sigma_y
    factor = -1.0 / (2.0 * (1.0 - rho * rho))
    for j in range(h):
        dy = float(y0 + j) - mu_y
        t3 = (dy * dy) / sy2
        for i in range(w):
            dx = float(x0 + i) - mu_x
            t1 = (dx * dx) / sx2
            t2 = (2.0 * rho * (dy * dx)) / sxsy
            out[j, i] = factor * ((t1 - t2) + t3)
    return out


# ---------------------------------------------------------------------------
# Heatmap colorization (piecewise-linear map, fixed anchors)
# ---------------------------------------------------------------------------

# Anchor positions are in rescaled [0, 1] space: blue -> green -> yellow -> red.
_ANCHOR_T = (0.0, 0.5, 0.75, 1.0)
_ANCHOR_R = (0.0, 0.0, 255.0, 255.0)
_ANCHOR_G = (0.0, 255.0, 255.0, 0.0)
_ANCHOR_B = (255.0, 0.0, 0.0, 0.0)
_ALPHA_MAX = 230.0


def _colorize_numpy(values, threshold):
    h, w = values.shape
    out = np.zeros((h, w, 4), dtype=np.uint8)
    denom = 1.0 - threshold
    visible = values >= threshold
    if not visible.any():
        return out
    if denom <= 0.0:
        t = np.ones(int(visible.sum()), dtype=np.float64)
    else:
        t = (values[visible] - threshold) / denom
    t = np.minimum(t, 1.0)
    r = np.empty_like(t)
    g = np.empty_like(t)
    b = np.empty_like(t)
    for k in range(3):
        lo, hi = _ANCHOR_T[k], _ANCHOR_T[k + 1]
        seg = (t >= lo) & (t <= hi) if k == 2 else (t >= lo) & (t < hi)
        u = (t[seg] - lo) / (hi - lo)
        r[seg] = _ANCHOR_R[k] + (_ANCHOR_R[k + 1] - _ANCHOR_R[k]) * u
        g[seg] = _ANCHOR_G[k] + (_ANCHOR_G[k + 1] - _ANCHOR_G[k]) * u
        b[seg] = _ANCHOR_B[k] + (_ANCHOR_B[k + 1] - _ANCHOR_B[k]) * u
    a = t * _ALPHA_MAX
    out[visible, 0] = np.floor(r + 0.5).astype(np.uint8)
    out[visible, 1] = np.floor(g + 0.5).astype(np.uint8)
    out[visible, 2] = np.floor(b + 0.5).astype(np.uint8)
    out[visible, 3] = np.floor(a + 0.5).astype(np.uint8)
    return out


def _colorize_loop(values, threshold):
    h, w = values.shape
    out = np.zeros((h, w, 4), dtype=np.uint8)
    denom = 1.0 - threshold
    for j in range(h):
        for i in range(w):
            v = values[j, i]
            if v < threshold:
                continue
            t = 1.0 if denom <= 0.0 else (v - threshold) / denom
            if t > 1.0:
                t = 1.0
            if t < 0.5:
                k = 0
            elif t < 0.75:
                k = 1
            else:
                k = 2
            lo = _ANCHOR_T[k]
            hi = _ANCHOR_T[k + 1]
            u = (t - lo) / (hi - lo)
            r = _ANCHOR_R[k] + (_ANCHOR_R[k + 1] - _ANCHOR_R[k]) * u
            g = _ANCHOR_G[k] + (_ANCHOR_G[k + 1] - _ANCHOR_G[k]) * u
            b = _ANCHOR_B[k] + (_ANCHOR_B[k + 1] - _ANCHOR_B[k]) * u
            a = t * _ALPHA_MAX
            out[j, i, 0] = np.uint8(np.floor(r + 0.5))
            out[j, i, 1] = np.uint8(np.floor(g + 0.5))
            out[j, i, 2] = np.uint8(np.floor(b + 0.5))
            out[j, i, 3] = np.uint8(np.floor(a + 0.5))
    return out


# ---------------------------------------------------------------------------
# Source-over blend with global alpha scaling
# ---------------------------------------------------------------------------


def _blend_numpy(base_rgb, layer_rgba, alpha):
    weight = (layer_rgba[:, :, 3].astype(np.float64) * (1.0 / 255.0)) * alpha
    out = np.empty((base_rgb.shape[0], base_rgb.shape[1], 4), dtype=np.uint8)
    for c in range(3):
        mixed = base_rgb[:, :, c].astype(np.float64) * (1.0 - weight) + layer_rgba[
            :, :, c
        ].astype(np.float64) * weight
        out[:, :, c] = np.floor(mixed + 0.5).astype(np.uint8)
    out[:, :, 3] = 255
    return out


def _blend_loop(base_rgb, layer_rgba, alpha):
    h, w = base_rgb.shape[0], base_rgb.shape[1]
    out = np.empty((h, w, 4), dtype=np.uint8)
    for j in range(h):
        for i in range(w):
            weight = (float(layer_rgba[j, i, 3]) * (1.0 / 255.0)) * alpha
            for c in range(3):
                mixed = float(base_rgb[j, i, c]) * (1.0 - weight) + float(layer_rgba[j, i, c]) * weight
                out[j, i, c] = np.uint8(np.floor(mixed + 0.5))
            out[j, i, 3] = 255
    return out


if USE_NUMBA:
    gaussian_exponent = njit(cache=True)(_gaussian_exponent_loop)
    colorize_rgba = njit(cache=True)(_colorize_loop)
    blend_rgba = njit(cache=True)(_blend_loop)
    BACKEND = "numba"
else:
    gaussian_exponent = _gaussian_exponent_numpy
    colorize_rgba = _colorize_numpy
    blend_rgba = _blend_numpy
    BACKEND = "numpy"


def warmup():
    """Trigger jit compilation on tiny inputs so first real use is fast."""
    gaussian_exponent(0, 0, 2, 2, 0.5, 0.5, 1.0, 1.0, 0.0)
    colorize_rgba(np.array([[0.0, 1.0]]), 0.05)
    blend_rgba(
        np.zeros((1, 1, 3), dtype=np.uint8),
        np.zeros((1, 1, 4), dtype=np.uint8),
        0.5,
    )
