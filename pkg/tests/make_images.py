"""Regenerate the committed synthetic test images in tests/fixtures/images/.

Run as: python3 tests/make_images.py
The outputs are committed; regenerate only when intentionally changing the
fixture corpus (golden renders depend on these pixels).
"""

import os

import numpy as np

from gaussfind.raster import RasterImage, write_png

SIZE = 512
OUT_DIR = os.path.join(os.path.dirname(__file__), "fixtures", "images")


def _blob(grid_x, grid_y, cx, cy, rx, ry, amplitude):
    return amplitude * np.exp(-(((grid_x - cx) / rx) ** 2 + ((grid_y - cy) / ry) ** 2))


def _base(seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
    vignette = 1.0 - 0.9 * np.sqrt((xs / SIZE - 0.5) ** 2 + (ys / SIZE - 0.5) ** 2)
    noise = rng.random((SIZE, SIZE)) * 18.0
    return xs, ys, vignette * 40.0 + noise


def brain_ct() -> np.ndarray:
    xs, ys, img = _base(11)
    skull = ((xs - 256) / 210) ** 2 + ((ys - 256) / 235) ** 2
    img += np.where((skull < 1.0) & (skull > 0.86), 200.0, 0.0)
    img += np.where(skull <= 0.86, 70.0, 0.0)
    img += _blob(xs, ys, 208, 176, 46, 42, 90.0)   # right frontal mass
    img += _blob(xs, ys, 256, 300, 30, 60, -25.0)  # ventricle-like dark region
    return img


def chest_xray() -> np.ndarray:
    xs, ys, img = _base(23)
    lung_l = ((xs - 165) / 105) ** 2 + ((ys - 280) / 170) ** 2
    lung_r = ((xs - 350) / 105) ** 2 + ((ys - 280) / 170) ** 2
    img += 110.0
    img -= np.where(lung_l < 1.0, 70.0, 0.0)
    img -= np.where(lung_r < 1.0, 70.0, 0.0)
    for rib in range(6):
        ribs = np.abs(ys - (130 + rib * 62) - 0.08 * (xs - 256)) < 7
        img += np.where(ribs, 28.0, 0.0)
    img += _blob(xs, ys, 370, 334, 40, 34, 70.0)   # right lower zone nodule
    return img


def liver_mri() -> np.ndarray:
    xs, ys, img = _base(37)
    body = ((xs - 256) / 230) ** 2 + ((ys - 270) / 180) ** 2
    img += np.where(body < 1.0, 60.0, 0.0)
    liver = ((xs - 330) / 140) ** 2 + ((ys - 220) / 110) ** 2
    img += np.where(liver < 1.0, 45.0, 0.0)
    img += _blob(xs, ys, 356, 190, 38, 30, 85.0)   # segment VII lesion
    img += _blob(xs, ys, 148, 319, 16, 15, 75.0)   # small cyst
    return img


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    for name, fn in (("brain_ct", brain_ct), ("chest_xray", chest_xray), ("liver_mri", liver_mri)):
        gray = np.clip(fn(), 0, 255).astype(np.uint8)
        rgb = np.stack([gray, gray, gray], axis=2)
        write_png(RasterImage.from_array(rgb), os.path.join(OUT_DIR, f"{name}.png"))
        print(f"wrote {name}.png")


if __name__ == "__main__":
    main()
