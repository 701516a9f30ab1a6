import numpy as np
import pytest

from zacf import data


def test_ecg_like_defaults_and_determinism():
    a = data.ecg_like(3, seed=5)
    b = data.ecg_like(3, seed=5)
    assert a[0].size == (301, 1)
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a, b))
    assert not np.array_equal(a[0].data, data.ecg_like(3, seed=6)[0].data)
    # the QRS complex dominates
    assert 0.35 < np.argmax(a[0].data[0, :, 0]) / 300 < 0.5


def test_shapes_counts_and_placement():
    ds = data.shapes(n_train=3, n_test=2, seed=1)
    assert sorted(ds.train) == [0, 1, 2, 3]
    assert all(len(v) == 3 and v[0].size == (16, 16) for v in ds.train.values())
    assert len(ds.test) == 8
    for scene in ds.test:
        r, c = scene.location
        assert scene.image.size == (32, 32)
        assert 0 <= r <= 16 and 0 <= c <= 16
    with pytest.raises(ValueError):
        data.shapes(n_classes=5)
    with pytest.raises(ValueError):
        data.shape_chip("star")


def test_shape_classes_differ():
    chips = [data.shape_chip(k) for k in data.SHAPE_CLASSES]
    for i in range(len(chips)):
        for j in range(i + 1, len(chips)):
            assert np.abs(chips[i] - chips[j]).max() > 0.25


def test_vehicles_dataset():
    ds = data.vehicles_ir_like(seed=2)
    assert sorted(ds.train_pos) == [0, 1]
    assert len(ds.train_neg) == 4 and len(ds.frames) == 4 and len(ds.test) == 8
    assert ds.frames[0].size == (40, 48) and ds.train_pos[0][0].size == (10, 14)
    again = data.vehicles_ir_like(seed=2)
    assert np.array_equal(ds.test[3].image.data, again.test[3].image.data)
    assert ds.test[3].location == again.test[3].location
