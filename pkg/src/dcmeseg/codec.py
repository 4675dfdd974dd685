"""Center-of-mass displacement encoding and its vote-clustering decoder.

Every foreground pixel ``p`` stores ``CM - p``, the offset to the center of
mass of its instance; background stores ``(0, 0)``. Decoding casts a vote at
``p + v(p)`` for each pixel, finds vote peaks and assigns pixels to the peak
their vote lands on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .core import (BACKGROUND, Dims, InstanceLabelMap, PixelCoord,
                   ValidationError, VectorField)

# a self-voting pixel only joins a detection when its vote lands this close
# to the center; keeps background pixels next to a center out of the mask
_SNAP = 1e-3


class CenterOfMass(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class DecodeParams:
    min_votes: int = 10
    merge_radius: float = 2.0
    assign_tolerance: float = 2.0
    fg_threshold: float = 0.5

    def __post_init__(self):
        if self.min_votes < 1:
            raise ValidationError(f"min_votes must be >= 1, got {self.min_votes}")
        if self.merge_radius < 0:
            raise ValidationError(f"merge_radius must be >= 0, got {self.merge_radius}")
        if not self.assign_tolerance > 0:
            raise ValidationError(f"assign_tolerance must be > 0, got {self.assign_tolerance}")
        if self.fg_threshold < 0:
            raise ValidationError(f"fg_threshold must be >= 0, got {self.fg_threshold}")


@dataclass(eq=False)
class Detection:
    mask: np.ndarray
    center: CenterOfMass
    score: float = 1.0
    class_id: int = BACKGROUND

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2 or not self.mask.any():
            raise ValidationError("detection mask must be a non-empty 2-D boolean array")
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"detection score must lie in [0, 1], got {self.score}")
        self.center = CenterOfMass(float(self.center[0]), float(self.center[1]))

    @property
    def area(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other):
        if not isinstance(other, Detection):
            return NotImplemented
        return (np.array_equal(self.mask, other.mask) and self.center == other.center
                and self.score == other.score and self.class_id == other.class_id)


def round_half_away(a):
    """Round to nearest integer, halves away from zero."""
    a = np.asarray(a, dtype=np.float64)
    return (np.sign(a) * np.floor(np.abs(a) + 0.5)).astype(np.int64)


def center_of_mass(pixels: Iterable[PixelCoord] | np.ndarray) -> CenterOfMass:
    """Arithmetic mean of pixel coordinates.

    Accepts an iterable of ``(x, y)`` pairs or a 2-D boolean mask.
    """
    if isinstance(pixels, np.ndarray) and pixels.dtype == bool and pixels.ndim == 2:
        ys, xs = np.nonzero(pixels)
    else:
        pts = np.asarray(list(pixels), dtype=np.int64).reshape(-1, 2)
        xs, ys = pts[:, 0], pts[:, 1]
    n = len(xs)
    if n == 0:
        raise ValidationError("center of mass of an empty pixel set")
    # integer sums keep the mean exact up to one final division
    return CenterOfMass(int(xs.sum()) / n, int(ys.sum()) / n)


def cm_pixel(cm: CenterOfMass, dims: Dims) -> PixelCoord:
    """Round a center of mass to a pixel inside the image."""
    x = min(max(int(round_half_away(cm[0])), 0), dims.cols - 1)
    y = min(max(int(round_half_away(cm[1])), 0), dims.rows - 1)
    return PixelCoord(x, y)


def instance_stats(ilm: InstanceLabelMap) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pixel count and coordinate sums per instance id, indexed by id."""
    labels = ilm.labels
    n = int(labels.max()) + 1
    ys, xs = np.indices(labels.shape)
    flat = labels.ravel()
    area = np.bincount(flat, minlength=n)
    sx = np.bincount(flat, weights=xs.ravel(), minlength=n).astype(np.int64)
    sy = np.bincount(flat, weights=ys.ravel(), minlength=n).astype(np.int64)
    return area, sx, sy


def instance_centers(ilm: InstanceLabelMap) -> dict[int, CenterOfMass]:
    area, sx, sy = instance_stats(ilm)
    return {i: CenterOfMass(sx[i] / area[i], sy[i] / area[i]) for i in ilm.instance_ids}


def encode(ilm: InstanceLabelMap) -> VectorField:
    labels = ilm.labels
    area, sx, sy = instance_stats(ilm)
    ys, xs = np.indices(labels.shape)
    a = np.maximum(area[labels], 1)
    # (sum - area*p) / area is exact in the integers before the division,
    # which makes the field invariant under integer translation
    dx = (sx[labels] - a * xs) / a
    dy = (sy[labels] - a * ys) / a
    bg = labels == BACKGROUND
    dx[bg] = 0.0
    dy[bg] = 0.0
    return VectorField(dx, dy)


def magnitude_map(vf: VectorField) -> np.ndarray:
    return np.hypot(vf.dx.astype(np.float64), vf.dy.astype(np.float64))


def _local_peaks(votes: np.ndarray, min_votes: int) -> np.ndarray:
    """Flat indices of 8-neighborhood maxima with at least ``min_votes``.

    Equal neighbors are resolved in favour of the smaller ``(y, x)``.
    """
    rows, cols = votes.shape
    padded = np.full((rows + 2, cols + 2), -1, dtype=np.int64)
    padded[1:-1, 1:-1] = votes
    is_peak = votes >= min_votes
    for oy in (-1, 0, 1):
        for ox in (-1, 0, 1):
            if oy == 0 and ox == 0:
                continue
            nb = padded[1 + oy:1 + oy + rows, 1 + ox:1 + ox + cols]
            if (oy, ox) < (0, 0):
                # neighbor precedes this bin: must be strictly exceeded
                is_peak &= votes > nb
            else:
                is_peak &= votes >= nb
    return np.flatnonzero(is_peak)


def _merge_peaks(centers: list[np.ndarray], weights: list[float], radius: float):
    centers = [c.astype(np.float64) for c in centers]
    weights = list(weights)
    while len(centers) > 1:
        pts = np.array(centers)
        d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
        d[np.tril_indices(len(pts))] = np.inf
        i, j = np.unravel_index(np.argmin(d), d.shape)
        if not d[i, j] < radius:
            break
        w = weights[i] + weights[j]
        centers[i] = (centers[i] * weights[i] + centers[j] * weights[j]) / w
        weights[i] = w
        del centers[j], weights[j]
    return centers, weights


def decode(vf: VectorField, params: DecodeParams = DecodeParams()) -> list[Detection]:
    """Cluster displacement votes into class-agnostic instance masks.

    Detections come back ordered by descending vote count, then by center
    position (row first).
    """
    rows, cols = vf.dims
    ys, xs = np.indices((rows, cols))
    dx = vf.dx.astype(np.float64)
    dy = vf.dy.astype(np.float64)
    tx = xs + dx
    ty = ys + dy
    mag = np.hypot(dx, dy)
    bx = round_half_away(tx)
    by = round_half_away(ty)

    self_vote = (mag < params.fg_threshold) & (bx == xs) & (by == ys)
    self_vote |= mag == 0
    inside = (bx >= 0) & (bx < cols) & (by >= 0) & (by < rows)
    voters = ~self_vote & inside
    if not voters.any():
        return []

    flat_bin = (by * cols + bx)[voters]
    votes = np.bincount(flat_bin, minlength=rows * cols).reshape(rows, cols)
    peaks = _local_peaks(votes, params.min_votes)
    if len(peaks) == 0:
        return []

    # refine each peak to the mean target of the votes in its 3x3 neighborhood
    vtx, vty = tx[voters], ty[voters]
    vbx, vby = bx[voters], by[voters]
    centers, weights = [], []
    for p in peaks:
        py, px = divmod(int(p), cols)
        near = (np.abs(vbx - px) <= 1) & (np.abs(vby - py) <= 1)
        centers.append(np.array([vtx[near].mean(), vty[near].mean()]))
        weights.append(float(near.sum()))
    centers, weights = _merge_peaks(centers, weights, params.merge_radius)
    order = sorted(range(len(centers)), key=lambda k: (-weights[k], centers[k][1], centers[k][0]))
    centers = np.array([centers[k] for k in order])

    tol = params.assign_tolerance
    radius = np.where(self_vote, min(_SNAP, tol), tol)
    best = np.full((rows, cols), np.inf)
    nearest = np.full((rows, cols), -1, dtype=np.int64)
    support = []
    for k, (cx, cy) in enumerate(centers):
        dist = np.hypot(tx - cx, ty - cy)
        ok = dist <= radius
        support.append(int(ok.sum()))
        # strict comparison keeps the lowest index on ties
        closer = ok & (dist < best)
        best[closer] = dist[closer]
        nearest[closer] = k

    detections = []
    for k, (cx, cy) in enumerate(centers):
        mask = nearest == k
        area = int(mask.sum())
        if area == 0:
            continue
        detections.append(Detection(mask, CenterOfMass(cx, cy), min(1.0, support[k] / area)))
    return detections
