"""Module for generating small two-dimensional classification sets.

"""
import numpy as np

from src.domain import Dataset
from src.seeding import substream

SYNTHETIC_KINDS = ('moons', 'blobs')
"""Supported synthetic dataset kinds."""

MOONS_OFFSET = np.array([1.0, 0.5])
"""Shift applied to the two moon arcs before scaling."""

MOONS_SCALE = np.array([3.0, 1.5])
"""Extent of the two moon arcs, mapped onto [0, 1]."""

BLOB_CENTERS = np.array([[0.3, 0.3], [0.7, 0.7], [0.3, 0.7], [0.7, 0.3]])
"""Centers of the blobs, one per class."""


def _class_sizes(n: int, classes: int) -> list[int]:
    return [n // classes + (1 if label < n % classes else 0)
            for label in range(classes)]


def make_moons(n: int, noise: float, rng: np.random.Generator
               ) -> tuple[np.ndarray, np.ndarray]:
    """Sample two interleaving half circles.

    Without noise, class 0 lies on the arc (cos t, sin t) and class 1 on
    (1 - cos t, 1/2 - sin t) for t in [0, pi], both mapped by
    (p + MOONS_OFFSET) / MOONS_SCALE.

    """
    outer, inner = _class_sizes(n, 2)
    outer_angle = rng.uniform(0.0, np.pi, outer)
    inner_angle = rng.uniform(0.0, np.pi, inner)
    points = np.concatenate([
        np.stack([np.cos(outer_angle), np.sin(outer_angle)], axis=1),
        np.stack([1.0 - np.cos(inner_angle), 0.5 - np.sin(inner_angle)],
                 axis=1)
    ])
    if noise > 0:
        points = points + rng.normal(0.0, noise, points.shape)
    labels = np.repeat([0, 1], [outer, inner])
    return (points + MOONS_OFFSET) / MOONS_SCALE, labels


def make_blobs(n: int, noise: float, rng: np.random.Generator,
               classes: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Sample isotropic Gaussian blobs around fixed centers.

    """
    sizes = _class_sizes(n, classes)
    labels = np.repeat(np.arange(classes), sizes)
    points = BLOB_CENTERS[labels] + rng.normal(0.0, noise, (n, 2))
    return points, labels


def make_synthetic(kind: str,
                   n: int,
                   noise: float,
                   seed: int,
                   classes: int = 2) -> Dataset:
    """Generate a seeded two-dimensional dataset in [0, 1]^2.

    Parameters
    ----------
    kind : str
        "moons" or "blobs".
    n : int
        The number of samples; class sizes differ by at most one.
    noise : float
        The standard deviation of the Gaussian noise.
    seed : int
        The run seed.
    classes : int
        The number of blobs (moons always have two classes).

    Returns
    -------
    Dataset
        The samples, shuffled and clipped to [0, 1].

    Raises
    ------
    ValueError
        If the kind is unknown or a size is out of range.

    """
    if n <= 0 or noise < 0:
        raise ValueError('n must be positive and noise non-negative')
    rng = substream(seed, 'data')
    if kind == 'moons':
        points, labels = make_moons(n, noise, rng)
        classes = 2
    elif kind == 'blobs':
        if not 2 <= classes <= len(BLOB_CENTERS):
            raise ValueError(f'blobs support 2 to {len(BLOB_CENTERS)} '
                             'classes')
        points, labels = make_blobs(n, noise, rng, classes)
    else:
        raise ValueError(f'unknown synthetic dataset {kind}, expected one '
                         f'of {", ".join(SYNTHETIC_KINDS)}')
    order = rng.permutation(n)
    return Dataset(np.clip(points[order], 0.0, 1.0),
                   labels[order].astype(np.int64), kind, 'all', classes)
