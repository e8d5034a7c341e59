"""Input image decoding and optional preprocessing.

Format detection sniffs magic bytes (they win over any file extension in
the name hint); modality is guessed from name-hint tokens. Preprocessing
is off by default so the model sees the image exactly as uploaded.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.ndimage import median_filter

from .errors import CorruptImage, EmptyInput, UnsupportedFormat
from .model import ImageMeta, Modality
from .raster import RasterImage

_MAGIC = (
    (b"\x89PNG\r\n\x1a\n", "PNG"),
    (b"\xff\xd8\xff", "JPEG"),
    (b"II*\x00", "TIFF"),
    (b"MM\x00*", "TIFF"),
)

_MODALITY_TOKENS = {
    "ct": Modality.CT,
    "mri": Modality.MRI,
    "mr": Modality.MRI,
    "xray": Modality.XRAY,
    "cr": Modality.XRAY,
    "us": Modality.ULTRASOUND,
    "ultrasound": Modality.ULTRASOUND,
}


def sniff_format(data: bytes) -> str | None:
    for magic, name in _MAGIC:
        if data.startswith(magic):
            return name
    return None


def guess_modality(name_hint: str) -> Modality:
    tokens = re.split(r"[^a-z0-9]+", name_hint.lower())
    for token in tokens:
        if token in _MODALITY_TOKENS:
            return _MODALITY_TOKENS[token]
    return Modality.UNKNOWN


def load_image(data: bytes, name_hint: str = "") -> tuple[RasterImage, ImageMeta]:
    """Decode PNG/JPEG/TIFF bytes (first frame) into an RGB raster plus metadata."""
    if not data:
        raise EmptyInput("no image bytes provided")
    fmt = sniff_format(data)
    if fmt is None:
        raise UnsupportedFormat(
            f"unrecognized image format (leading bytes {data[:8]!r}); supported: PNG, JPEG, TIFF"
        )
    try:
        with Image.open(io.BytesIO(data)) as im:
            if getattr(im, "n_frames", 1) > 1:
                im.seek(0)
            rgb = im.convert("RGB")
            rgb.load()
    except UnidentifiedImageError as exc:
        raise CorruptImage(f"{fmt} header found but image is undecodable: {exc}") from exc
    except OSError as exc:
        raise CorruptImage(f"{fmt} data is corrupt or truncated: {exc}") from exc

    img = RasterImage.from_array(np.asarray(rgb))
    meta = ImageMeta(
        width=img.width,
        height=img.height,
        modality=guess_modality(name_hint),
        source_name=name_hint,
    )
    return img, meta


@dataclass(frozen=True)
class PreprocessOptions:
    contrast_stretch: bool = False  # clip at p1/p99, rescale to full range
    median_denoise: bool = False    # 3x3 median filter


def preprocess(img: RasterImage, opts: PreprocessOptions = PreprocessOptions()) -> RasterImage:
    """Optional contrast stretch then median denoise; identity when both are off."""
    if not (opts.contrast_stretch or opts.median_denoise):
        return img
    data = img.data
    if opts.contrast_stretch:
        p1, p99 = np.percentile(data, (1.0, 99.0))
        if p99 > p1:
            stretched = (data.astype(np.float64) - p1) * (255.0 / (p99 - p1))
            data = np.floor(np.clip(stretched, 0.0, 255.0) + 0.5).astype(np.uint8)
    if opts.median_denoise:
        data = np.stack(
            [median_filter(data[:, :, c], size=3, mode="reflect") for c in range(data.shape[2])],
            axis=2,
        )
    return RasterImage(img.width, img.height, img.channels, np.ascontiguousarray(data))
