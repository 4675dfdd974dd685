import numpy as np
import pytest

from dcmeseg import (ClassGrid, Dims, GridSpec, InstanceLabelMap,
                     ValidationError, VectorField)


def test_label_map_requires_class_for_every_instance():
    labels = np.array([[0, 1], [2, 2]])
    with pytest.raises(ValidationError):
        InstanceLabelMap(labels, {1: 3})


def test_label_map_rejects_class_for_absent_instance():
    with pytest.raises(ValidationError):
        InstanceLabelMap(np.array([[0, 1]]), {1: 3, 2: 1})


def test_label_map_rejects_background_class():
    with pytest.raises(ValidationError):
        InstanceLabelMap(np.array([[0, 1]]), {1: 0})


def test_label_map_is_immutable():
    m = InstanceLabelMap(np.array([[0, 1]]), {1: 3})
    with pytest.raises(ValueError):
        m.labels[0, 0] = 1
    assert m.dims == Dims(1, 2)
    assert m.class_map().tolist() == [[0, 3]]


@pytest.mark.parametrize("shape", [(0, 3), (3, 0)])
def test_dims_must_be_positive(shape):
    with pytest.raises(ValidationError):
        InstanceLabelMap(np.zeros(shape, dtype=int), {})


def test_vector_field_shapes_must_agree():
    with pytest.raises(ValidationError):
        VectorField(np.zeros((2, 3)), np.zeros((3, 2)))
    with pytest.raises(ValidationError):
        VectorField(np.full((1, 1), np.nan), np.zeros((1, 1)))


def test_grid_spec():
    assert GridSpec(4).grid_size == 16
    assert GridSpec.from_grid_size(32).n == 5
    assert GridSpec(4).block_dims(Dims(512, 1024)) == Dims(32, 64)
    assert GridSpec(4).block_dims(Dims(17, 33)) == Dims(2, 3)
    for bad in (-1, 17, 2.5):
        with pytest.raises(ValidationError):
            GridSpec(bad)
    with pytest.raises(ValidationError):
        GridSpec.from_grid_size(12)


def test_class_grid_fits():
    g = ClassGrid(np.zeros((2, 3), dtype=int), GridSpec(4))
    assert g.fits(Dims(17, 48))
    assert not g.fits(Dims(16, 48))
