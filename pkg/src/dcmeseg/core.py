"""Shared pixel-grid data model.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row, origin at
the top-left pixel. Arrays are stored row-major as ``array[y, x]``.
Instance id 0 and class id 0 both mean background.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

BACKGROUND = 0

# Cityscapes instance classes, in table order.
CLASS_NAMES = {
    1: "person",
    2: "rider",
    3: "car",
    4: "truck",
    5: "bus",
    6: "train",
    7: "motorcycle",
    8: "bicycle",
}
CLASS_IDS = {name: cid for cid, name in CLASS_NAMES.items()}


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def class_name(cid: int) -> str:
    if cid == BACKGROUND:
        return "background"
    return CLASS_NAMES.get(cid, f"class{cid}")


class Dims(NamedTuple):
    rows: int
    cols: int


class PixelCoord(NamedTuple):
    x: int
    y: int


class BlockCoord(NamedTuple):
    x: int
    y: int


def _check_dims(rows: int, cols: int) -> Dims:
    if int(rows) < 1 or int(cols) < 1:
        raise ValidationError(f"dims must be positive, got {rows}x{cols}")
    return Dims(int(rows), int(cols))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Encoder grid: ``n`` stride-2 operations give blocks of ``2**n`` pixels."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not 0 <= self.n <= 16:
            raise ValidationError(f"grid n must be an integer in [0, 16], got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def grid_size(self) -> int:
        return 1 << self.n

    @classmethod
    def from_grid_size(cls, grid_size: int) -> "GridSpec":
        gs = int(grid_size)
        if gs < 1 or gs & (gs - 1):
            raise ValidationError(f"grid size must be a power of two, got {grid_size}")
        return cls(gs.bit_length() - 1)

    def block_dims(self, dims: Dims) -> Dims:
        gs = self.grid_size
        return Dims(-(-dims.rows // gs), -(-dims.cols // gs))


@dataclass(frozen=True, eq=False)
class InstanceLabelMap:
    """Per-pixel instance ids plus the class of every instance present."""

    labels: np.ndarray
    classes: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValidationError(f"labels must be 2-D, got shape {labels.shape}")
        _check_dims(*labels.shape)
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ValidationError("labels must be integers")
        labels = labels.astype(np.int64)
        if labels.min() < 0:
            raise ValidationError("instance ids must be non-negative")
        present = set(np.unique(labels).tolist()) - {BACKGROUND}
        classes = {int(k): int(v) for k, v in dict(self.classes).items()}
        missing = present - classes.keys()
        if missing:
            raise ValidationError(f"instances without a class entry: {sorted(missing)}")
        absent = classes.keys() - present
        if absent:
            raise ValidationError(f"class entries for instances with no pixels: {sorted(absent)}")
        bad = {i: c for i, c in classes.items() if c <= BACKGROUND}
        if bad:
            raise ValidationError(f"instances must have a foreground class, got {bad}")
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "classes", dict(sorted(classes.items())))

    @property
    def dims(self) -> Dims:
        return Dims(*self.labels.shape)

    @property
    def instance_ids(self) -> list[int]:
        return list(self.classes)

    def mask(self, instance_id: int) -> np.ndarray:
        return self.labels == instance_id

    def class_map(self) -> np.ndarray:
        """Per-pixel class ids (0 on background)."""
        lut = np.zeros(int(self.labels.max()) + 1, dtype=np.int64)
        for i, c in self.classes.items():
            lut[i] = c
        return lut[self.labels]

    def __eq__(self, other):
        if not isinstance(other, InstanceLabelMap):
            return NotImplemented
        return (self.labels.shape == other.labels.shape
                and np.array_equal(self.labels, other.labels)
                and self.classes == other.classes)

    @classmethod
    def empty(cls, rows: int, cols: int) -> "InstanceLabelMap":
        _check_dims(rows, cols)
        return cls(np.zeros((rows, cols), dtype=np.int64), {})


@dataclass(frozen=True, eq=False)
class VectorField:
    """Two-channel displacement map; ``dx`` horizontal, ``dy`` vertical, in pixels.

    Values are held as float32, the precision of the on-disk format.
    """

    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        dx = np.asarray(self.dx, dtype=np.float32)
        dy = np.asarray(self.dy, dtype=np.float32)
        if dx.ndim != 2 or dx.shape != dy.shape:
            raise ValidationError(f"dx/dy must be 2-D with equal shapes, got {dx.shape} and {dy.shape}")
        _check_dims(*dx.shape)
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy))):
            raise ValidationError("vector field contains non-finite values")
        object.__setattr__(self, "dx", _frozen(dx))
        object.__setattr__(self, "dy", _frozen(dy))

    @property
    def dims(self) -> Dims:
        return Dims(*self.dx.shape)

    def stack(self) -> np.ndarray:
        """Channels-first ``(2, rows, cols)`` array."""
        return np.stack([self.dx, self.dy])

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return (self.dims == other.dims
                and np.array_equal(self.dx, other.dx)
                and np.array_equal(self.dy, other.dy))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "VectorField":
        z = np.zeros((rows, cols), dtype=np.float32)
        return cls(z, z)


@dataclass(frozen=True, eq=False)
class ClassGrid:
    """Per-block class labels at encoder resolution."""

    labels: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValidationError(f"class grid must be 2-D, got shape {labels.shape}")
        _check_dims(*labels.shape)
        labels = labels.astype(np.int64)
        if labels.min() < 0:
            raise ValidationError("class ids must be non-negative")
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def block_dims(self) -> Dims:
        return Dims(*self.labels.shape)

    def fits(self, dims: Dims) -> bool:
        return self.grid.block_dims(dims) == self.block_dims

    def __eq__(self, other):
        if not isinstance(other, ClassGrid):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.labels, other.labels)
