"""Encoder grid geometry and block class annotation.

An encoder with ``n`` stride-2 operations maps each ``2**n`` x ``2**n`` image
block to one output position. Pixel ``p`` belongs to block ``floor(p / G_s)``
and block ``b`` covers the half-open pixel range ``[G_s*b, G_s*(b+1))``.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from .core import (BACKGROUND, BlockCoord, ClassGrid, Dims, GridSpec,
                   InstanceLabelMap, PixelCoord, ValidationError)


def grid_size(n: int) -> int:
    return GridSpec(n).grid_size


def image_to_block(p: PixelCoord, gs: GridSpec) -> BlockCoord:
    g = gs.grid_size
    return BlockCoord(p[0] // g, p[1] // g)


def block_to_image_origin(b: BlockCoord, gs: GridSpec) -> PixelCoord:
    g = gs.grid_size
    return PixelCoord(g * b[0], g * b[1])


def block_pixel_range(b: BlockCoord, gs: GridSpec, dims: Dims) -> tuple[range, range]:
    """Column and row ranges covered by block ``b``, clipped to the image."""
    x0, y0 = block_to_image_origin(b, gs)
    g = gs.grid_size
    return range(x0, min(x0 + g, dims.cols)), range(y0, min(y0 + g, dims.rows))


def _check_priority(order: Sequence[int]) -> tuple[int, ...]:
    order = tuple(int(c) for c in order)
    if BACKGROUND in order:
        raise ValidationError("priority list must not contain background")
    if len(set(order)) != len(order):
        raise ValidationError(f"priority list has duplicates: {order}")
    if any(c < 0 for c in order):
        raise ValidationError(f"negative class id in priority list: {order}")
    return order


def build_class_grid(ilm: InstanceLabelMap, gs: GridSpec, priority: Sequence[int]) -> ClassGrid:
    """Label every block with the highest-priority class that has a pixel in it.

    Blocks without any foreground pixel are background. ``priority`` lists
    class ids, most preferred first.
    """
    order = _check_priority(priority)
    rank = {c: r for r, c in enumerate(order)}
    present = set(ilm.classes.values())
    unknown = present - rank.keys()
    if unknown:
        raise ValidationError(f"classes {sorted(unknown)} are missing from the priority list")

    bdims = gs.block_dims(ilm.dims)
    g = gs.grid_size
    cmap = ilm.class_map()
    ys, xs = np.nonzero(cmap)
    block_index = (ys // g) * bdims.cols + xs // g

    # background sorts after every foreground rank
    n_ranks = len(order)
    rank_lut = np.full(max(order, default=0) + 1, n_ranks, dtype=np.int64)
    for c, r in rank.items():
        rank_lut[c] = r
    best = np.full(bdims.rows * bdims.cols, n_ranks, dtype=np.int64)
    np.minimum.at(best, block_index, rank_lut[cmap[ys, xs]])

    class_lut = np.array(list(order) + [BACKGROUND], dtype=np.int64)
    return ClassGrid(class_lut[best].reshape(bdims), gs)


def count_instances(maps: Iterable[InstanceLabelMap]) -> Counter:
    counts: Counter = Counter()
    for m in maps:
        counts.update(m.classes.values())
    return counts


def priority_from_counts(counts: dict[int, int], vocabulary: Iterable[int] = ()) -> tuple[int, ...]:
    """Fewest instances first; ties by class id; unseen vocabulary classes last."""
    seen = sorted((n, c) for c, n in counts.items() if n > 0 and c != BACKGROUND)
    order = [c for _, c in seen]
    order += sorted(set(vocabulary) - set(order) - {BACKGROUND})
    return tuple(order)


def derive_priority(maps: Sequence[InstanceLabelMap], vocabulary: Iterable[int] = range(1, 9)) -> tuple[int, ...]:
    """Priority list from instance counts over a set of label maps.

    ``vocabulary`` lists the foreground classes that must appear in the
    output even when absent from ``maps``; it defaults to the eight
    Cityscapes instance classes.
    """
    maps = list(maps)
    if not maps:
        raise ValidationError("derive_priority needs at least one label map")
    return priority_from_counts(count_instances(maps), vocabulary)


def class_of_instance(cm: PixelCoord, grid: ClassGrid, dims: Dims | None = None) -> int:
    """Grid label of the block holding the (integer) center of mass ``cm``.

    ``dims`` are the image dims; when omitted the bound is the grid extent.
    """
    x, y = int(cm[0]), int(cm[1])
    if dims is None:
        g = grid.grid.grid_size
        dims = Dims(grid.block_dims.rows * g, grid.block_dims.cols * g)
    if not (0 <= x < dims.cols and 0 <= y < dims.rows):
        raise ValidationError(f"center of mass {(x, y)} lies outside the {dims.rows}x{dims.cols} image")
    bx, by = image_to_block(PixelCoord(x, y), grid.grid)
    if not (bx < grid.block_dims.cols and by < grid.block_dims.rows):
        raise ValidationError(f"block {(bx, by)} is outside the class grid {grid.block_dims}")
    return int(grid.labels[by, bx])


def upsample_grid(grid: ClassGrid, dims: Dims) -> np.ndarray:
    """Replicate each block label over its pixel range."""
    g = grid.grid.grid_size
    full = np.repeat(np.repeat(grid.labels, g, axis=0), g, axis=1)
    return full[:dims.rows, :dims.cols]
