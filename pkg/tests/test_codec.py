import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcmeseg import (DecodeParams, Dims, InstanceLabelMap, ValidationError,
                     VectorField, center_of_mass, decode, encode,
                     magnitude_map)
from dcmeseg.codec import cm_pixel, instance_centers, round_half_away
from dcmeseg.evaluation import iou
from dcmeseg.synth import SceneSpec, generate_scene

from conftest import make_map


def test_center_of_mass():
    assert center_of_mass([(5, 7)]) == (5.0, 7.0)
    assert center_of_mass([(0, 0), (1, 0), (0, 1), (1, 1)]) == (0.5, 0.5)
    cm = center_of_mass([(0, 0), (0, 1), (1, 0)])
    assert cm == pytest.approx((1 / 3, 1 / 3), abs=1e-15)
    with pytest.raises(ValidationError):
        center_of_mass([])


def test_center_of_mass_from_mask():
    m = np.zeros((3, 4), dtype=bool)
    m[1, 1:4] = True
    assert center_of_mass(m) == (2.0, 1.0)


def test_round_half_away():
    assert round_half_away([0.5, 1.5, -0.5, 2.4999, -1.5]).tolist() == [1, 2, -1, 2, -2]
    assert cm_pixel(center_of_mass([(0, 0), (1, 1)]), Dims(5, 5)) == (1, 1)
    assert cm_pixel((-0.6, 9.7), Dims(5, 5)) == (0, 4)


def test_encode_background_is_zero():
    vf = encode(InstanceLabelMap.empty(5, 6))
    assert not vf.dx.any() and not vf.dy.any()


def test_encode_single_pixel():
    m = make_map(10, 10, [(1, 7, 8, 5, 6)])
    vf = encode(m)
    assert not vf.dx.any() and not vf.dy.any()


def test_encode_bar():
    m = make_map(3, 8, [(1, 0, 1, 2, 5)])
    vf = encode(m)
    assert vf.dx[0, 2:5].tolist() == [1.0, 0.0, -1.0]
    assert not vf.dy.any()
    assert vf.dx[1:].sum() == 0 and vf.dx[0, [0, 1, 5, 6, 7]].sum() == 0


def test_encoded_vectors_point_at_center():
    m = make_map(30, 30, [(1, 3, 9, 2, 13), (2, 15, 28, 16, 19)])
    vf = encode(m)
    ys, xs = np.indices(m.dims)
    for i, cm in instance_centers(m).items():
        sel = m.labels == i
        np.testing.assert_allclose(xs[sel] + vf.dx[sel], cm.x, atol=1e-5)
        np.testing.assert_allclose(ys[sel] + vf.dy[sel], cm.y, atol=1e-5)
    assert np.abs(vf.dx).max() < max(m.dims)


def test_magnitude_map():
    assert not magnitude_map(VectorField.zeros(3, 3)).any()
    dx = np.zeros((2, 2))
    dy = np.zeros((2, 2))
    dx[1, 0], dy[1, 0] = 3, 4
    assert magnitude_map(VectorField(dx, dy))[1, 0] == 5.0


def test_large_object_has_longer_vectors():
    m = make_map(80, 80, [(3, 2, 42, 2, 62), (1, 60, 66, 60, 63)])
    mag = magnitude_map(encode(m))
    assert mag[m.labels == 1].max() > mag[m.labels == 2].max()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 20), st.integers(0, 20))
def test_encode_translation_equivariant(seed, tx, ty):
    m = generate_scene(SceneSpec(Dims(40, 40), 3, seed=seed, max_size=12))
    big = np.zeros((60, 60), dtype=np.int64)
    big[ty:ty + 40, tx:tx + 40] = m.labels
    shifted = InstanceLabelMap(big, m.classes)
    a, b = encode(m), encode(shifted)
    assert np.array_equal(a.dx, b.dx[ty:ty + 40, tx:tx + 40])
    assert np.array_equal(a.dy, b.dy[ty:ty + 40, tx:tx + 40])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_magnitude_zero_exactly_on_background_and_center_pixels(seed):
    m = generate_scene(SceneSpec(Dims(48, 48), 4, seed=seed, max_size=15))
    mag = magnitude_map(encode(m))
    expected = m.labels == 0
    for i, cm in instance_centers(m).items():
        if cm.x == int(cm.x) and cm.y == int(cm.y):
            expected[int(cm.y), int(cm.x)] = m.labels[int(cm.y), int(cm.x)] == i or expected[int(cm.y), int(cm.x)]
    assert np.array_equal(mag == 0, expected)


def test_decode_zero_field():
    assert decode(VectorField.zeros(20, 20)) == []


def test_decode_two_rectangles():
    m = make_map(40, 40, [(1, 2, 8, 3, 12), (2, 20, 35, 15, 30)])
    dets = decode(encode(m))
    assert len(dets) == 2
    for i in m.instance_ids:
        assert sum(np.array_equal(d.mask, m.mask(i)) for d in dets) == 1
    assert all(d.score == 1.0 for d in dets)


def test_decode_shared_center_merges():
    # a ring around a core: both have their center of mass at (10, 10)
    labels = np.zeros((21, 21), dtype=int)
    labels[4:17, 4:17] = 1
    labels[8:13, 8:13] = 2
    m = InstanceLabelMap(labels, {1: 1, 2: 3})
    assert instance_centers(m)[1] == instance_centers(m)[2]
    dets = decode(encode(m))
    assert len(dets) == 1
    assert np.array_equal(dets[0].mask, labels > 0)


def test_center_pixel_ambiguity():
    # an L whose integer center of mass is a background pixel encodes exactly
    # like the same L with that pixel added
    labels = np.zeros((9, 12), dtype=int)
    labels[1:8, 1:3] = 1
    labels[7, 1:10] = 1
    m = InstanceLabelMap(labels, {1: 1})
    cm = instance_centers(m)[1]
    assert cm.x.is_integer() and cm.y.is_integer()
    assert labels[int(cm.y), int(cm.x)] == 0
    with_center = labels.copy()
    with_center[int(cm.y), int(cm.x)] = 1
    assert encode(m) == encode(InstanceLabelMap(with_center, {1: 1}))


def test_decode_ignores_small_instances():
    m = make_map(20, 20, [(1, 0, 3, 0, 3)])
    assert decode(encode(m), DecodeParams(min_votes=10)) == []
    assert len(decode(encode(m), DecodeParams(min_votes=3))) == 1


def test_decode_params_validation():
    for kw in (dict(min_votes=0), dict(merge_radius=-1), dict(assign_tolerance=0), dict(fg_threshold=-0.1)):
        with pytest.raises(ValidationError):
            DecodeParams(**kw)


def test_concave_center_outside_shape_keeps_background_out():
    labels = np.zeros((30, 30), dtype=int)
    labels[5:25, 5:8] = 1
    labels[22:25, 5:25] = 1
    m = InstanceLabelMap(labels, {1: 2})
    cm = instance_centers(m)[1]
    assert labels[int(round(cm.y)), int(round(cm.x))] == 0
    dets = decode(encode(m))
    assert len(dets) == 1 and np.array_equal(dets[0].mask, labels == 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_exact(seed):
    p = DecodeParams()
    sep = 2 * (p.merge_radius + p.assign_tolerance) + 0.5
    m = generate_scene(SceneSpec(Dims(96, 96), 6, min_separation=sep, seed=seed, min_area=p.min_votes,
                                 min_size=3, max_size=24))
    dets = decode(encode(m), p)
    assert len(dets) == len(m.instance_ids)
    for i, cm in instance_centers(m).items():
        if cm.x.is_integer() and cm.y.is_integer() and m.labels[int(cm.y), int(cm.x)] != i:
            # the field cannot tell this shape from the shape plus its center pixel
            continue
        assert max(iou(d.mask, m.mask(i)) for d in dets) == 1.0
    assert all(d.score == 1.0 for d in dets)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
def test_decode_invariants_on_noisy_fields(seed, noise):
    m = generate_scene(SceneSpec(Dims(48, 48), 4, seed=seed, max_size=20))
    vf = encode(m)
    rng = np.random.default_rng(seed)
    noisy = VectorField(vf.dx + rng.normal(0, noise, vf.dims), vf.dy + rng.normal(0, noise, vf.dims))
    p = DecodeParams()
    dets = decode(noisy, p)
    total = np.zeros(vf.dims, dtype=int)
    ys, xs = np.indices(vf.dims)
    tx, ty = xs + noisy.dx.astype(float), ys + noisy.dy.astype(float)
    for d in dets:
        total += d.mask
        assert 0.0 <= d.score <= 1.0
        dist = np.hypot(tx[d.mask] - d.center.x, ty[d.mask] - d.center.y)
        assert (dist <= p.assign_tolerance).all()
    assert total.max(initial=0) <= 1
