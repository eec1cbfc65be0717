"""Module for reading datasets from CSV and IDX files and for splitting
them.

"""
import csv
import gzip
import logging
import os
import struct
import typing

import numpy as np

from src.data.exceptions import DatasetParseError
from src.domain import Dataset
from src.seeding import substream

_logger = logging.getLogger(__name__)
"""Logger for this module."""

IDX_IMAGES_MAGIC = 0x00000803
"""Magic number of IDX files holding unsigned byte images."""

IDX_LABELS_MAGIC = 0x00000801
"""Magic number of IDX files holding unsigned byte labels."""

DATASET_FORMATS = ('csv', 'idx')
"""Supported dataset file formats."""


def _validate(inputs: np.ndarray, labels: np.ndarray,
              num_classes: typing.Optional[int], path: str) -> int:
    if not np.all(np.isfinite(inputs)):
        raise DatasetParseError(f'{path}: non-finite feature')
    if np.any(inputs < 0) or np.any(inputs > 1):
        raise DatasetParseError(f'{path}: features must lie in [0, 1]')
    if np.any(labels < 0):
        raise DatasetParseError(f'{path}: negative label')
    classes = int(labels.max()) + 1 if len(labels) else 0
    if num_classes is None:
        return classes
    if classes > num_classes:
        raise DatasetParseError(f'{path}: label {classes - 1} out of range '
                                f'for {num_classes} classes')
    return num_classes


def read_csv(path: str,
             num_classes: typing.Optional[int] = None) -> Dataset:
    """Read a dataset with one "label,feature,..." row per sample.

    Parameters
    ----------
    path : str
        The CSV file path.
    num_classes : int, optional
        The number of classes; one more than the largest label by default.

    Returns
    -------
    Dataset
        The dataset, named after the file.

    Raises
    ------
    DatasetParseError
        If a row is ragged or holds a non-numeric value, a label is not a
        non-negative integer or a feature lies outside [0, 1].

    """
    labels = []
    rows = []
    with open(path, newline='') as file:
        for number, row in enumerate(csv.reader(file), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if rows and len(row) - 1 != len(rows[0]):
                raise DatasetParseError(
                    f'{path}:{number}: expected {len(rows[0]) + 1} values, '
                    f'got {len(row)}')
            try:
                label = float(row[0])
                features = [float(cell) for cell in row[1:]]
            except ValueError:
                raise DatasetParseError(f'{path}:{number}: non-numeric value')
            if not label.is_integer():
                raise DatasetParseError(f'{path}:{number}: label {row[0]} is '
                                        'not an integer')
            if not features:
                raise DatasetParseError(f'{path}:{number}: no features')
            labels.append(int(label))
            rows.append(features)
    if not rows:
        raise DatasetParseError(f'{path}: no samples')
    inputs = np.array(rows, dtype=np.float64)
    label_array = np.array(labels, dtype=np.int64)
    classes = _validate(inputs, label_array, num_classes, path)
    name = os.path.splitext(os.path.basename(path))[0]
    _logger.info(f'read {len(labels)} samples from {path}')
    return Dataset(inputs, label_array, name, 'all', classes)


def _open(path: str) -> typing.BinaryIO:
    if path.endswith('.gz'):
        return typing.cast(typing.BinaryIO, gzip.open(path, 'rb'))
    return open(path, 'rb')


def read_idx(path: str, magic: int) -> np.ndarray:
    """Read an IDX file of unsigned bytes.

    Parameters
    ----------
    path : str
        The file path; gzip-compressed when it ends with ".gz".
    magic : int
        The expected big-endian magic number.

    Returns
    -------
    np.ndarray
        The unsigned byte array with the dimensions of the header.

    Raises
    ------
    DatasetParseError
        If the magic number does not match or the file is truncated.

    """
    with _open(path) as file:
        header = file.read(4)
        if len(header) < 4:
            raise DatasetParseError(f'{path}: truncated header')
        found, = struct.unpack('>I', header)
        if found != magic:
            raise DatasetParseError(f'{path}: magic number {found:#010x}, '
                                    f'expected {magic:#010x}')
        rank = magic & 0xff
        sizes = file.read(4 * rank)
        if len(sizes) < 4 * rank:
            raise DatasetParseError(f'{path}: truncated header')
        shape = struct.unpack(f'>{rank}I', sizes)
        data = np.frombuffer(file.read(), dtype=np.uint8)
    expected = int(np.prod(shape))
    if data.size != expected:
        raise DatasetParseError(f'{path}: {data.size} bytes of data, '
                                f'expected {expected}')
    return data.reshape(shape)


def default_labels_path(images_path: str) -> str:
    """Get the label file that goes with an IDX image file.

    """
    directory, name = os.path.split(images_path)
    for images, labels in (('images-idx3', 'labels-idx1'),
                           ('images.idx3', 'labels.idx1')):
        if images in name:
            return os.path.join(directory, name.replace(images, labels))
    raise DatasetParseError(f'{images_path}: cannot derive the label file '
                            'name')


def read_idx_pair(images_path: str,
                  labels_path: typing.Optional[str] = None,
                  num_classes: typing.Optional[int] = None) -> Dataset:
    """Read an IDX image file and its label file.

    Images are flattened and their pixels scaled to [0, 1].

    Raises
    ------
    DatasetParseError
        If a file is malformed or the sample counts differ.

    """
    labels_path = (labels_path if labels_path is not None else
                   default_labels_path(images_path))
    images = read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx(labels_path, IDX_LABELS_MAGIC).astype(np.int64)
    if len(images) != len(labels):
        raise DatasetParseError(f'{images_path}: {len(images)} images but '
                                f'{len(labels)} labels')
    inputs = images.reshape(len(images), -1).astype(np.float64) / 255.0
    classes = _validate(inputs, labels, num_classes, images_path)
    name = os.path.basename(images_path).split('-')[0]
    _logger.info(f'read {len(labels)} images from {images_path}')
    return Dataset(inputs, labels, name, 'all', classes)


def load_dataset(path: str,
                 fmt: str = 'csv',
                 labels_path: typing.Optional[str] = None,
                 num_classes: typing.Optional[int] = None) -> Dataset:
    """Load a dataset file.

    Parameters
    ----------
    path : str
        The CSV file, or the IDX image file.
    fmt : str
        The format, "csv" or "idx".
    labels_path : str, optional
        The IDX label file; derived from the image file name by default.
    num_classes : int, optional
        The number of classes.

    Returns
    -------
    Dataset
        The loaded dataset.

    Raises
    ------
    DatasetParseError
        If the format is unknown or the file is malformed.

    """
    if fmt == 'csv':
        return read_csv(path, num_classes)
    if fmt == 'idx':
        return read_idx_pair(path, labels_path, num_classes)
    raise DatasetParseError(f'unknown dataset format {fmt}, expected one of '
                            f'{", ".join(DATASET_FORMATS)}')


def save_csv(dataset: Dataset, path: str) -> None:
    """Write a dataset as "label,feature,..." rows.

    """
    with open(path, 'w', newline='') as file:
        writer = csv.writer(file)
        for label, features in zip(dataset.labels, dataset.inputs):
            writer.writerow([int(label)] + [repr(float(value))
                                            for value in features])


def subset_indices(size: int, count: int, seed: int, name: str) -> np.ndarray:
    """Draw distinct sample indices from a named random substream.

    Returns
    -------
    np.ndarray
        min(count, size) sorted indices.

    """
    rng = substream(seed, name)
    return np.sort(rng.permutation(size)[:min(count, size)])


def split_dataset(dataset: Dataset, test_fraction: float,
                  seed: int) -> tuple[Dataset, Dataset]:
    """Split a dataset into disjoint training and test parts.

    Raises
    ------
    ValueError
        If the test fraction is outside [0, 1).

    """
    if not 0 <= test_fraction < 1:
        raise ValueError('the test fraction must lie in [0, 1)')
    order = substream(seed, 'data').permutation(len(dataset))
    test_count = int(round(test_fraction * len(dataset)))
    return (dataset.subset(np.sort(order[test_count:]), 'train'),
            dataset.subset(np.sort(order[:test_count]), 'test'))


def calibration_subset(dataset: Dataset, size: int, seed: int) -> Dataset:
    """Draw the calibration set from a training set.

    Raises
    ------
    ValueError
        If the dataset is not a training split or the size is not
        positive.

    """
    if dataset.split not in ('train', 'all'):
        raise ValueError('the calibration set is drawn from training data')
    if size <= 0:
        raise ValueError('the calibration size must be positive')
    indices = subset_indices(len(dataset), size, seed, 'calibration')
    return dataset.subset(indices, 'calibration')
