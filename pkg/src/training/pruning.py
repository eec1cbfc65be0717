"""Module for small-weight pruning.

"""
import logging
import math

import numpy as np

from src.domain import LayerTensors
from src.domain import Network
from src.model.network import parameters
from src.model.network import with_parameters
from src.training.exceptions import TrainingError

_logger = logging.getLogger(__name__)
"""Logger for this module."""


def small_weight_prune(net: Network,
                       ratio: float) -> tuple[Network, list[np.ndarray]]:
    """Zero the smallest weights network-wide.

    Weights are ranked by magnitude over all layers at once (ties by
    position) and the first floor(ratio * count) are zeroed. Biases are
    kept.

    Parameters
    ----------
    net : Network
        The network.
    ratio : float
        The fraction of weights to prune, in [0, 1).

    Returns
    -------
    tuple of Network and list of np.ndarray
        The pruned network and the per-layer masks of kept weights.

    Raises
    ------
    TrainingError
        If the ratio is outside [0, 1).

    """
    if not 0 <= ratio < 1:
        raise TrainingError(f'the pruning ratio must lie in [0, 1), '
                            f'got {ratio}')
    magnitudes = np.concatenate(
        [np.abs(layer.weights).ravel() for layer in net.layers])
    count = math.floor(ratio * magnitudes.size)
    keep = np.ones(magnitudes.size, dtype=bool)
    keep[np.argsort(magnitudes, kind='stable')[:count]] = False
    masks = []
    start = 0
    for layer in net.layers:
        size = layer.weights.size
        masks.append(keep[start:start + size].reshape(layer.weights.shape))
        start += size
    pruned = apply_mask(parameters(net), masks)
    _logger.info(f'Pruned {count} of {magnitudes.size} weights')
    return with_parameters(net, pruned), masks


def apply_mask(params: list[LayerTensors],
               masks: list[np.ndarray]) -> list[LayerTensors]:
    """Zero the pruned weights of the given tensors in place.

    """
    for tensors, mask in zip(params, masks):
        tensors.weights *= mask
    return params
