import gzip
import struct

import numpy as np
import pytest

from src.data.exceptions import DatasetParseError
from src.data.loaders import IDX_IMAGES_MAGIC
from src.data.loaders import IDX_LABELS_MAGIC
from src.data.loaders import calibration_subset
from src.data.loaders import default_labels_path
from src.data.loaders import load_dataset
from src.data.loaders import read_csv
from src.data.loaders import read_idx
from src.data.loaders import save_csv
from src.data.loaders import split_dataset
from src.data.loaders import subset_indices
from src.data.synthetic import make_synthetic


def _write_idx(path, magic, shape, values, compress=False):
    header = struct.pack('>I', magic) + struct.pack(f'>{len(shape)}I',
                                                    *shape)
    content = header + bytes(values)
    opener = gzip.open if compress else open
    with opener(path, 'wb') as file:
        file.write(content)


def test_read_csv(tmp_path):
    path = tmp_path / 'points.csv'
    path.write_text('0,0.1,0.2\n1,0.5,1.0\n\n2,0.0,0.3\n')
    dataset = read_csv(str(path))
    assert dataset.inputs.tolist() == [[0.1, 0.2], [0.5, 1.0], [0.0, 0.3]]
    assert dataset.labels.tolist() == [0, 1, 2]
    assert dataset.num_classes == 3
    assert dataset.name == 'points'
    assert len(dataset) == 3


@pytest.mark.parametrize('content', [
    '0,0.1,0.2\n1,0.5\n', '0,0.1,abc\n', '0.5,0.1,0.2\n', '0\n', '',
    '0,1.5,0.2\n', '-1,0.1,0.2\n'
])
def test_malformed_csv(tmp_path, content):
    path = tmp_path / 'bad.csv'
    path.write_text(content)
    with pytest.raises(DatasetParseError):
        read_csv(str(path))


def test_csv_label_out_of_range(tmp_path):
    path = tmp_path / 'points.csv'
    path.write_text('0,0.1\n3,0.2\n')
    with pytest.raises(DatasetParseError):
        read_csv(str(path), num_classes=2)
    assert read_csv(str(path), num_classes=5).num_classes == 5


def test_save_csv_is_read_back_exactly(tmp_path):
    dataset = make_synthetic('moons', 20, 0.1, 0)
    path = str(tmp_path / 'moons.csv')
    save_csv(dataset, path)
    loaded = read_csv(path)
    assert np.array_equal(loaded.inputs, dataset.inputs)
    assert np.array_equal(loaded.labels, dataset.labels)


@pytest.mark.parametrize('compress', [False, True])
def test_read_idx_pair(tmp_path, compress):
    suffix = '.gz' if compress else ''
    images = tmp_path / f'train-images-idx3-ubyte{suffix}'
    labels = tmp_path / f'train-labels-idx1-ubyte{suffix}'
    _write_idx(images, IDX_IMAGES_MAGIC, (2, 2, 2),
               [0, 255, 51, 102, 255, 255, 0, 0], compress)
    _write_idx(labels, IDX_LABELS_MAGIC, (2, ), [7, 3], compress)
    dataset = load_dataset(str(images), 'idx')
    assert dataset.inputs.shape == (2, 4)
    assert np.allclose(dataset.inputs[0], [0.0, 1.0, 0.2, 0.4])
    assert dataset.labels.tolist() == [7, 3]
    assert dataset.num_classes == 8
    assert default_labels_path(str(images)) == str(labels)


def test_idx_magic_is_checked(tmp_path):
    path = tmp_path / 'labels-idx1-ubyte'
    _write_idx(path, IDX_LABELS_MAGIC, (2, ), [1, 2])
    with pytest.raises(DatasetParseError):
        read_idx(str(path), IDX_IMAGES_MAGIC)
    assert read_idx(str(path), IDX_LABELS_MAGIC).tolist() == [1, 2]


def test_truncated_idx(tmp_path):
    path = tmp_path / 'labels-idx1-ubyte'
    _write_idx(path, IDX_LABELS_MAGIC, (3, ), [1, 2])
    with pytest.raises(DatasetParseError):
        read_idx(str(path), IDX_LABELS_MAGIC)


def test_unknown_format(tmp_path):
    with pytest.raises(DatasetParseError):
        load_dataset(str(tmp_path / 'x.npz'), 'npz')


def test_subset_indices_are_seeded():
    first = subset_indices(100, 10, 3, 'calibration')
    assert first.tolist() == subset_indices(100, 10, 3,
                                            'calibration').tolist()
    assert first.tolist() == sorted(set(first.tolist()))
    assert len(subset_indices(5, 10, 3, 'calibration')) == 5
    assert first.tolist() != subset_indices(100, 10, 3, 'other').tolist()


def test_split_is_disjoint_and_complete():
    dataset = make_synthetic('blobs', 50, 0.05, 1, classes=3)
    train, test = split_dataset(dataset, 0.2, 1)
    assert (len(train), len(test)) == (40, 10)
    assert (train.split, test.split) == ('train', 'test')
    rows = {tuple(row) for row in train.inputs} | {
        tuple(row) for row in test.inputs}
    assert len(rows) == 50
    with pytest.raises(ValueError):
        split_dataset(dataset, 1.0, 1)


def test_calibration_comes_from_training_data():
    train, test = split_dataset(make_synthetic('moons', 100, 0.1, 2), 0.2, 2)
    calibration = calibration_subset(train, 30, 2)
    assert len(calibration) == 30
    assert calibration.split == 'calibration'
    with pytest.raises(ValueError):
        calibration_subset(test, 10, 2)


def test_noise_free_moons_lie_on_their_arcs():
    dataset = make_synthetic('moons', 101, 0.0, 5)
    x = dataset.inputs[:, 0]
    y = dataset.inputs[:, 1]
    outer = dataset.labels == 0
    assert np.allclose((3 * x[outer] - 1)**2 + (1.5 * y[outer] - 0.5)**2, 1.0)
    assert np.allclose((3 * x[~outer] - 2)**2 + (1.5 * y[~outer] - 1)**2,
                       1.0)
    assert abs(int(outer.sum()) - int((~outer).sum())) <= 1


def test_synthetic_sets_are_seeded_and_bounded():
    first = make_synthetic('moons', 50, 0.2, 9)
    second = make_synthetic('moons', 50, 0.2, 9)
    assert np.array_equal(first.inputs, second.inputs)
    assert np.all((first.inputs >= 0.0) & (first.inputs <= 1.0))
    blobs = make_synthetic('blobs', 40, 0.05, 9, classes=4)
    assert blobs.num_classes == 4
    assert np.bincount(blobs.labels).tolist() == [10, 10, 10, 10]


@pytest.mark.parametrize('kind, n, noise, classes',
                         [('spirals', 10, 0.1, 2), ('moons', 0, 0.1, 2),
                          ('moons', 10, -0.1, 2), ('blobs', 10, 0.1, 9)])
def test_invalid_synthetic_requests(kind, n, noise, classes):
    with pytest.raises(ValueError):
        make_synthetic(kind, n, noise, 0, classes)
