import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcmeseg import (CLASS_IDS, ClassGrid, Dims, GridSpec, InstanceLabelMap,
                     PixelCoord, ValidationError)
from dcmeseg.grid import (block_pixel_range, block_to_image_origin,
                          build_class_grid, class_of_instance, derive_priority,
                          grid_size, image_to_block, priority_from_counts,
                          upsample_grid)

from conftest import make_map

PERSON, RIDER, CAR = CLASS_IDS["person"], CLASS_IDS["rider"], CLASS_IDS["car"]


@pytest.mark.parametrize("n, expected", [(4, 16), (0, 1), (5, 32)])
def test_grid_size(n, expected):
    assert grid_size(n) == expected


def test_grid_size_range():
    with pytest.raises(ValidationError):
        grid_size(17)
    with pytest.raises(ValidationError):
        grid_size(-1)


@pytest.mark.parametrize("p, expected", [((0, 0), (0, 0)), ((17, 31), (1, 1)), ((1023, 511), (63, 31))])
def test_image_to_block(p, expected):
    assert image_to_block(PixelCoord(*p), GridSpec(4)) == expected


@pytest.mark.parametrize("b, expected", [((0, 0), (0, 0)), ((1, 1), (16, 16)), ((63, 31), (1008, 496))])
def test_block_to_image_origin(b, expected):
    assert block_to_image_origin(b, GridSpec(4)) == expected


def test_last_block_covers_last_pixels():
    xs, ys = block_pixel_range((63, 31), GridSpec(4), Dims(512, 1024))
    assert (xs.start, xs.stop, ys.start, ys.stop) == (1008, 1024, 496, 512)
    xs, ys = block_pixel_range((1, 1), GridSpec(4), Dims(20, 20))
    assert (xs.stop, ys.stop) == (20, 20)


@given(st.integers(0, 8), st.integers(0, 5000), st.integers(0, 5000))
def test_pixel_lies_in_its_block(n, x, y):
    gs = GridSpec(n)
    x0, y0 = block_to_image_origin(image_to_block(PixelCoord(x, y), gs), gs)
    assert x0 <= x < x0 + gs.grid_size
    assert y0 <= y < y0 + gs.grid_size


def test_all_background_grid():
    g = build_class_grid(InstanceLabelMap.empty(40, 50), GridSpec(4), [1, 2, 3])
    assert g.block_dims == (3, 4)
    assert not g.labels.any()


def test_mixed_block_prefers_priority_class():
    m = make_map(16, 16, [(CAR, 0, 8, 0, 16), (PERSON, 8, 16, 10, 12)])
    g = build_class_grid(m, GridSpec(4), [PERSON, CAR])
    assert g.labels.tolist() == [[PERSON]]
    g = build_class_grid(m, GridSpec(4), [CAR, PERSON])
    assert g.labels.tolist() == [[CAR]]


def test_single_block_instance():
    m = make_map(64, 64, [(CAR, 20, 25, 36, 40)])
    g = build_class_grid(m, GridSpec(4), [CAR])
    assert g.labels.sum() == CAR
    assert g.labels[1, 2] == CAR


def test_instance_spanning_four_blocks():
    m = make_map(64, 64, [(CAR, 10, 20, 10, 20)])
    g = build_class_grid(m, GridSpec(4), [CAR])
    assert np.count_nonzero(g.labels) == 4
    assert (g.labels[:2, :2] == CAR).all()


def test_partial_edge_blocks():
    m = make_map(20, 20, [(RIDER, 18, 20, 19, 20)])
    g = build_class_grid(m, GridSpec(4), [RIDER])
    assert g.labels.tolist() == [[0, 0], [0, RIDER]]


def test_missing_priority_class_rejected():
    m = make_map(8, 8, [(CAR, 0, 2, 0, 2)])
    with pytest.raises(ValidationError):
        build_class_grid(m, GridSpec(1), [PERSON])
    with pytest.raises(ValidationError):
        build_class_grid(m, GridSpec(1), [CAR, 0])


@given(st.integers(0, 2**31), st.integers(0, 3))
def test_block_background_iff_no_foreground_and_order_invariance(seed, n):
    rng = np.random.default_rng(seed)
    classes = rng.integers(0, 4, size=(13, 11))
    labels = np.where(classes > 0, np.arange(1, 13 * 11 + 1).reshape(13, 11), 0)
    m = InstanceLabelMap(labels, {int(i): int(c) for i, c in zip(labels.ravel(), classes.ravel()) if i})
    gs = GridSpec(n)
    prio = [3, 1, 2]
    g = build_class_grid(m, gs, prio)
    # brute force per block
    size = gs.grid_size
    for by in range(g.block_dims.rows):
        for bx in range(g.block_dims.cols):
            block = classes[by * size:(by + 1) * size, bx * size:(bx + 1) * size]
            present = set(block.ravel().tolist()) - {0}
            expected = min(present, key=prio.index) if present else 0
            assert g.labels[by, bx] == expected
    # transposing the scene transposes the grid
    mt = InstanceLabelMap(labels.T, m.classes)
    assert np.array_equal(build_class_grid(mt, gs, prio).labels, g.labels.T)


def test_derive_priority_ascending_count():
    maps = [make_map(10, 10, [(CAR, 0, 1, i, i + 1) for i in range(10)] + [(PERSON, 5, 6, i, i + 1) for i in range(3)])]
    assert derive_priority(maps)[:2] == (PERSON, CAR)


def test_derive_priority_tie_by_id():
    assert priority_from_counts({CAR: 5, PERSON: 5}, ())[:2] == (PERSON, CAR)


def test_derive_priority_table_counts():
    counts = {CLASS_IDS[k]: v for k, v in dict(person=3394, rider=543, car=4653, truck=93, bus=98, train=23,
                                                  motorcycle=149, bicycle=1165).items()}
    order = priority_from_counts(counts, range(1, 9))
    names = ["train", "truck", "bus", "motorcycle", "rider", "bicycle", "person", "car"]
    assert order == tuple(CLASS_IDS[n] for n in names)


def test_derive_priority_is_permutation_and_unseen_last():
    maps = [make_map(4, 4, [(CAR, 0, 1, 0, 1)])]
    order = derive_priority(maps)
    assert sorted(order) == list(range(1, 9))
    assert order[0] == CAR
    assert order[1:] == tuple(c for c in range(1, 9) if c != CAR)
    with pytest.raises(ValidationError):
        derive_priority([])


def test_class_of_instance():
    labels = np.zeros((4, 4), dtype=int)
    labels[1, 1] = CAR
    g = ClassGrid(labels, GridSpec(4))
    assert class_of_instance((20, 20), g) == CAR
    assert class_of_instance((0, 0), g) == 0
    assert class_of_instance((15, 15), g) != class_of_instance((16, 16), g)
    with pytest.raises(ValidationError):
        class_of_instance((64, 0), g)
    with pytest.raises(ValidationError):
        class_of_instance((30, 30), g, Dims(20, 20))


def test_upsample_grid():
    g = ClassGrid(np.array([[1, 2], [3, 0]]), GridSpec(1))
    assert upsample_grid(g, Dims(3, 4)).tolist() == [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 0, 0]]
