"""Seeded synthetic scenes of non-overlapping shapes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import center_of_mass
from .core import Dims, InstanceLabelMap, ValidationError

SHAPES = ("rectangle", "ellipse", "L-shape")
MAX_ATTEMPTS = 10_000


class GenerationError(ValidationError):
    pass


@dataclass(frozen=True)
class SceneSpec:
    dims: Dims = Dims(128, 128)
    n_instances: int = 5
    shapes: tuple[str, ...] = SHAPES
    classes: tuple[int, ...] = tuple(range(1, 9))
    min_separation: float = 0.0
    seed: int = 0
    min_size: int = 4
    max_size: int = 32
    min_area: int = 1
    align: int = 1

    def __post_init__(self):
        object.__setattr__(self, "dims", Dims(*self.dims))
        if self.dims.rows < 1 or self.dims.cols < 1:
            raise ValidationError(f"dims must be positive, got {self.dims}")
        if self.n_instances < 0:
            raise ValidationError("n_instances must be >= 0")
        bad = set(self.shapes) - set(SHAPES)
        if bad or not self.shapes:
            raise ValidationError(f"unknown shape kinds {sorted(bad)}; choose from {SHAPES}")
        if self.n_instances and (not self.classes or min(self.classes) < 1):
            raise ValidationError("class vocabulary must be non-empty foreground ids")
        if not 1 <= self.min_size <= self.max_size:
            raise ValidationError(f"need 1 <= min_size <= max_size, got {self.min_size}, {self.max_size}")
        if self.align < 1:
            raise ValidationError("align must be >= 1")


def _shape_mask(kind: str, h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "rectangle":
        return np.ones((h, w), dtype=bool)
    if kind == "ellipse":
        yy, xx = np.mgrid[0:h, 0:w]
        cy, cx = (h - 1) / 2, (w - 1) / 2
        ry, rx = max(h / 2, 0.5), max(w / 2, 0.5)
        m = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        return m if m.any() else np.ones((h, w), dtype=bool)
    # L-shape: vertical bar plus a bottom bar, corner picked at random
    m = np.zeros((h, w), dtype=bool)
    t_v = max(1, w // 3)
    t_h = max(1, h // 3)
    m[:, :t_v] = True
    m[h - t_h:, :] = True
    if rng.integers(2):
        m = m[:, ::-1]
    if rng.integers(2):
        m = m[::-1, :]
    return m


def _upscale(m: np.ndarray, k: int) -> np.ndarray:
    return np.repeat(np.repeat(m, k, axis=0), k, axis=1) if k > 1 else m


def generate_scene(spec: SceneSpec) -> InstanceLabelMap:
    """Place ``spec.n_instances`` disjoint shapes; a pure function of ``spec``.

    With ``align > 1`` every shape is built on an ``align``-pixel lattice, so
    all instance boundaries fall on multiples of ``align``.
    """
    rng = np.random.default_rng(spec.seed)
    rows, cols = spec.dims
    k = spec.align
    labels = np.zeros((rows, cols), dtype=np.int64)
    classes = {}
    centers: list[tuple[float, float]] = []
    attempts = 0
    lo = max(1, -(-spec.min_size // k))
    hi = max(lo, spec.max_size // k)
    while len(classes) < spec.n_instances:
        attempts += 1
        if attempts > MAX_ATTEMPTS:
            raise GenerationError(
                f"could not place instance {len(classes) + 1} of {spec.n_instances} within {MAX_ATTEMPTS} "
                f"attempts (min separation {spec.min_separation}, min area {spec.min_area}, dims {rows}x{cols})")
        kind = spec.shapes[int(rng.integers(len(spec.shapes)))]
        h = int(rng.integers(lo, hi + 1))
        w = int(rng.integers(lo, hi + 1))
        m = _upscale(_shape_mask(kind, h, w, rng), k)
        mh, mw = m.shape
        if mh > rows or mw > cols:
            continue
        y0 = int(rng.integers(0, (rows - mh) // k + 1)) * k
        x0 = int(rng.integers(0, (cols - mw) // k + 1)) * k
        if int(m.sum()) < spec.min_area:
            continue
        window = labels[y0:y0 + mh, x0:x0 + mw]
        if np.any(window[m]):
            continue
        ys, xs = np.nonzero(m)
        cm = center_of_mass(zip((xs + x0).tolist(), (ys + y0).tolist()))
        if any(np.hypot(cm.x - cx, cm.y - cy) < spec.min_separation for cx, cy in centers):
            continue
        iid = len(classes) + 1
        window[m] = iid
        classes[iid] = int(spec.classes[int(rng.integers(len(spec.classes)))])
        centers.append((cm.x, cm.y))
    return InstanceLabelMap(labels, classes)
