"""Bivariate Gaussian density fields for finding localization.

The density is parameterized by per-axis spreads and a rotation angle; the
rotation enters through a correlation coefficient which is clamped into
(-1, 1) so the density stays well-defined for every parameter combination.
Per-finding fields are rasterized on the pixel grid and combined with a
pointwise maximum so overlapping findings keep their individual peaks.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, InvalidParameter
from .model import GaussianParams, ImageMeta

RHO_EPS = 1e-6
WINDOW_SIGMAS = 5.0  # evaluation cut; tail contribution is < 1e-6 of peak


@dataclass(frozen=True)
class ScalarField:
    """W x H grid of non-negative densities/intensities, row-major."""

    width: int
    height: int
    values: np.ndarray  # shape (height, width), float64

    def __post_init__(self):
        if self.values.shape != (self.height, self.width):
            raise DimensionMismatch(
                f"values shape {self.values.shape} != (height={self.height}, width={self.width})"
            )

    @classmethod
    def zeros(cls, width: int, height: int) -> "ScalarField":
        return cls(width, height, np.zeros((height, width), dtype=np.float64))

    def to_bytes(self) -> bytes:
        """Flat binary form: <u32 width, u32 height> header then row-major f32le."""
        header = struct.pack("<II", self.width, self.height)
        return header + self.values.astype("<f4").tobytes(order="C")

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ScalarField":
        if len(blob) < 8:
            raise InvalidParameter("field blob shorter than 8-byte header")
        width, height = struct.unpack("<II", blob[:8])
        expected = 8 + width * height * 4
        if len(blob) != expected:
            raise InvalidParameter(f"field blob length {len(blob)} != expected {expected}")
        values = np.frombuffer(blob[8:], dtype="<f4").reshape(height, width).astype(np.float64)
        return cls(width, height, values)


def rho_from_theta(theta: float, sigma_x: float, sigma_y: float) -> float:
    """Correlation coefficient derived from the rotation angle.

    rho = sin(2*theta) * (sigma_x^2 - sigma_y^2) / (2*sigma_x*sigma_y),
    clamped into (-1+1e-6, 1-1e-6): the raw expression can leave [-1, 1]
    when the spreads are very anisotropic, which would make the density
    undefined.
    """
    if not (sigma_x > 0.0 and sigma_y > 0.0):
        raise InvalidParameter(f"sigma must be positive, got ({sigma_x}, {sigma_y})")
    rho = math.sin(2.0 * theta) * (sigma_x * sigma_x - sigma_y * sigma_y) / (2.0 * sigma_x * sigma_y)
    return max(-1.0 + RHO_EPS, min(1.0 - RHO_EPS, rho))


def pdf(x: float, y: float, g: GaussianParams) -> float:
    """Density at (x, y) in pixels^-2."""
    rho = rho_from_theta(g.theta, g.sigma_x, g.sigma_y)
    one_minus = 1.0 - rho * rho
    coef = 1.0 / (2.0 * math.pi * g.sigma_x * g.sigma_y * math.sqrt(one_minus))
    dx = x - g.mu_x
    dy = y - g.mu_y
    q = (
        (dx * dx) / (g.sigma_x * g.sigma_x)
        - (2.0 * rho * dx * dy) / (g.sigma_x * g.sigma_y)
        + (dy * dy) / (g.sigma_y * g.sigma_y)
    )
    return coef * math.exp(-q / (2.0 * one_minus))


def rasterize(g: GaussianParams, meta: ImageMeta, window_sigmas: float = WINDOW_SIGMAS) -> ScalarField:
    """Evaluate the density at every integer pixel center of the image grid.

    Pixels outside the `window_sigmas`-sigma bounding rectangle of the
    distribution are short-circuited to zero; pass ``math.inf`` to disable
    the cut.
    """
    rho = rho_from_theta(g.theta, g.sigma_x, g.sigma_y)
    field = np.zeros((meta.height, meta.width), dtype=np.float64)

    if math.isinf(window_sigmas):
        x0, x1 = 0, meta.width - 1
        y0, y1 = 0, meta.height - 1
    else:
        x0 = max(0, int(math.floor(g.mu_x - window_sigmas * g.sigma_x)))
        x1 = min(meta.width - 1, int(math.ceil(g.mu_x + window_sigmas * g.sigma_x)))
        y0 = max(0, int(math.floor(g.mu_y - window_sigmas * g.sigma_y)))
        y1 = min(meta.height - 1, int(math.ceil(g.mu_y + window_sigmas * g.sigma_y)))
    if x1 < x0 or y1 < y0:
        return ScalarField(meta.width, meta.height, field)

    expo = _kernels.gaussian_exponent(
        x0, y0, x1 - x0 + 1, y1 - y0 + 1, g.mu_x, g.mu_y, g.sigma_x, g.sigma_y, rho
    )
    one_minus = 1.0 - rho * rho
    coef = 1.0 / (2.0 * math.pi * g.sigma_x * g.sigma_y * math.sqrt(one_minus))
    field[y0 : y1 + 1, x0 : x1 + 1] = coef * np.exp(expo)
    return ScalarField(meta.width, meta.height, field)


def compose_max(fields: list[ScalarField]) -> ScalarField:
    """Pointwise maximum of per-finding fields (commutative, associative, idempotent)."""
    if not fields:
        raise InvalidParameter("compose_max requires at least one field")
    first = fields[0]
    for f in fields[1:]:
        if (f.width, f.height) != (first.width, first.height):
            raise DimensionMismatch(
                f"field {f.width}x{f.height} does not match {first.width}x{first.height}"
            )
    values = fields[0].values
    for f in fields[1:]:
        values = np.maximum(values, f.values)
    return ScalarField(first.width, first.height, values.copy() if len(fields) == 1 else values)


def normalize_unit(field: ScalarField) -> ScalarField:
    """Scale so the peak equals 1.0; an all-zero field passes through unchanged."""
    peak = float(field.values.max()) if field.values.size else 0.0
    if peak <= 0.0:
        return field
    return ScalarField(field.width, field.height, field.values / peak)


def field_for_findings(gaussians: list[GaussianParams], meta: ImageMeta) -> ScalarField:
    """Max-composed, unit-normalized field for a set of findings (zero field if empty)."""
    if not gaussians:
        return ScalarField.zeros(meta.width, meta.height)
    return normalize_unit(compose_max([rasterize(g, meta) for g in gaussians]))
