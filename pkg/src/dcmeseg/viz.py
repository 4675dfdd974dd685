"""Magnitude and class map renders.

PNG output needs Pillow; without it (or with ``fmt="text"``) images are
written as plain-text netpbm (PGM for magnitudes, PPM for class maps).
"""

from __future__ import annotations

import numpy as np

from .codec import magnitude_map
from .core import ClassGrid, Dims, VectorField
from .grid import upsample_grid

# Cityscapes colors for the eight instance classes; index 0 is background
PALETTE = np.array([
    (0, 0, 0),
    (220, 20, 60),
    (255, 0, 0),
    (0, 0, 142),
    (0, 0, 70),
    (0, 60, 100),
    (0, 80, 100),
    (0, 0, 230),
    (119, 11, 32),
], dtype=np.uint8)


def have_png() -> bool:
    try:
        import PIL  # noqa: F401
    except ImportError:
        return False
    return True


def magnitude_image(vf: VectorField) -> np.ndarray:
    """Vector magnitudes scaled linearly so the image maximum is 255."""
    m = magnitude_map(vf)
    top = m.max()
    if top <= 0:
        return np.zeros(m.shape, dtype=np.uint8)
    return np.round(m * (255.0 / top)).astype(np.uint8)


def class_index_image(grid: ClassGrid, dims: Dims) -> np.ndarray:
    """Block labels replicated to image resolution (palette indices)."""
    idx = upsample_grid(grid, dims)
    # ids beyond the palette wrap onto the foreground colors
    fg = idx > 0
    idx = idx.copy()
    idx[fg] = (idx[fg] - 1) % (len(PALETTE) - 1) + 1
    return idx.astype(np.uint8)


def _netpbm_text(img: np.ndarray, palette: np.ndarray | None) -> str:
    rows, cols = img.shape
    if palette is None:
        head = f"P2\n{cols} {rows}\n255\n"
        body = "".join(" ".join(map(str, r)) + "\n" for r in img.tolist())
        return head + body
    rgb = palette[img]
    head = f"P3\n{cols} {rows}\n255\n"
    body = "".join(" ".join(map(str, r.ravel().tolist())) + "\n" for r in rgb)
    return head + body


def save_image(path, img: np.ndarray, palette: np.ndarray | None = None, fmt: str = "png"):
    """Write a grayscale (``palette=None``) or indexed image."""
    if fmt == "png" and have_png():
        from PIL import Image
        im = Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8))
        if palette is not None:
            # turns the L image into a P image
            im.putpalette(palette.ravel().tolist())
        im.save(path, format="PNG")
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_netpbm_text(img, palette))


def save_magnitude(path, vf: VectorField, fmt: str = "png"):
    save_image(path, magnitude_image(vf), None, fmt)


def save_class_map(path, grid: ClassGrid, dims: Dims, fmt: str = "png"):
    save_image(path, class_index_image(grid, dims), PALETTE, fmt)
