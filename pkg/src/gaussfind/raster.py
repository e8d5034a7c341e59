"""Raster image container and deterministic PNG encode/decode."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DimensionMismatch


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB or RGBA pixel grid, row-major."""

    width: int
    height: int
    channels: str  # "RGB" or "RGBA"
    data: np.ndarray  # shape (height, width, 3 or 4), uint8

    def __post_init__(self):
        expected = (self.height, self.width, 4 if self.channels == "RGBA" else 3)
        if self.data.shape != expected:
            raise DimensionMismatch(f"pixel data shape {self.data.shape} != expected {expected}")

    @classmethod
    def from_array(cls, data: np.ndarray) -> "RasterImage":
        data = np.ascontiguousarray(data, dtype=np.uint8)
        channels = "RGBA" if data.shape[2] == 4 else "RGB"
        return cls(data.shape[1], data.shape[0], channels, data)

    @classmethod
    def blank_rgba(cls, width: int, height: int) -> "RasterImage":
        return cls(width, height, "RGBA", np.zeros((height, width, 4), dtype=np.uint8))

    def to_rgba(self) -> "RasterImage":
        if self.channels == "RGBA":
            return self
        rgba = np.empty((self.height, self.width, 4), dtype=np.uint8)
        rgba[:, :, :3] = self.data
        rgba[:, :, 3] = 255
        return RasterImage(self.width, self.height, "RGBA", rgba)

    def to_rgb(self) -> "RasterImage":
        if self.channels == "RGB":
            return self
        return RasterImage(self.width, self.height, "RGB", np.ascontiguousarray(self.data[:, :, :3]))


def encode_png(img: RasterImage) -> bytes:
    """PNG bytes with pinned encoder settings so identical pixels give identical files."""
    buf = io.BytesIO()
    Image.fromarray(img.data, mode=img.channels).save(
        buf, format="PNG", compress_level=6, optimize=False
    )
    return buf.getvalue()


def decode_png(blob: bytes) -> RasterImage:
    with Image.open(io.BytesIO(blob)) as im:
        im.load()
        mode = "RGBA" if im.mode in ("RGBA", "LA", "PA") else "RGB"
        converted = im.convert(mode)
    return RasterImage.from_array(np.asarray(converted))


def write_png(img: RasterImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def read_png(path) -> RasterImage:
    with open(path, "rb") as fh:
        return decode_png(fh.read())
