"""Module for interval bound propagation.

"""
import typing

import numpy as np

from src.domain import ActivationKind
from src.domain import BoundsCache
from src.domain import Layer
from src.domain import Network
from src.domain import NeuronId
from src.model.exceptions import ShapeError

Splits = dict[NeuronId, int]
"""Sign constraints on hidden neurons: +1 for z >= 0, -1 for z <= 0."""


def interval_affine(layer: Layer, lower: np.ndarray,
                    upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Propagate an input box through the affine map of a layer.

    Positive weights take the lower input corner for the lower bound and
    negative weights the upper corner.

    """
    positive = np.maximum(layer.weights, 0.0)
    negative = np.minimum(layer.weights, 0.0)
    return (lower @ positive.T + upper @ negative.T + layer.bias,
            upper @ positive.T + lower @ negative.T + layer.bias)


def interval_activate(layer: Layer,
                      lower: np.ndarray,
                      upper: np.ndarray,
                      loose: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Propagate pre-activation intervals through the activations of a
    layer.

    Parameters
    ----------
    layer : Layer
        The layer providing the activation kinds.
    lower : np.ndarray
        The pre-activation lower bounds.
    upper : np.ndarray
        The pre-activation upper bounds.
    loose : bool
        Whether ReLUs that are not inactive keep their whole
        pre-activation interval.

    Returns
    -------
    tuple of np.ndarray
        The post-activation lower and upper bounds.

    """
    relu = layer.mask(ActivationKind.RELU)
    grafted = layer.mask(ActivationKind.GRAFTED_LINEAR)
    at_lower = layer.slopes * lower + layer.intercepts
    at_upper = layer.slopes * upper + layer.intercepts
    if loose:
        inactive = upper <= 0
        relu_lower = np.where(inactive, 0.0, lower)
        relu_upper = np.where(inactive, 0.0, upper)
    else:
        relu_lower = np.maximum(lower, 0.0)
        relu_upper = np.maximum(upper, 0.0)
    post_lower = np.where(relu, relu_lower,
                          np.where(grafted, np.minimum(at_lower, at_upper),
                                   lower))
    post_upper = np.where(relu, relu_upper,
                          np.where(grafted, np.maximum(at_lower, at_upper),
                                   upper))
    return post_lower, post_upper


def ibp(net: Network,
        x: np.ndarray,
        epsilon: float,
        splits: typing.Optional[Splits] = None,
        loose: bool = False) -> BoundsCache:
    """Compute interval bounds of every layer over the box [x - ε, x + ε].

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        The anchor input, or a batch of anchors along the first axis.
    epsilon : float
        The radius of the box, at least 0.
    splits : Splits, optional
        Sign constraints clamping hidden pre-activation bounds to
        [max(lb, 0), ub] or [lb, min(ub, 0)].
    loose : bool
        Whether ReLUs that are not inactive pass their pre-activation
        interval through unchanged.

    Returns
    -------
    BoundsCache
        The pre-activation and post-activation bounds of every layer; the
        last entries bound the logits. The cache is marked infeasible
        when a split empties an interval.

    Raises
    ------
    ValueError
        If epsilon is negative.
    ShapeError
        If the input dimension does not match the network.

    """
    if epsilon < 0:
        raise ValueError('epsilon must not be negative')
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.input_dim:
        raise ShapeError(f'input has shape {x.shape}, expected last '
                         f'dimension {net.input_dim}')
    by_layer: dict[int, list[tuple[int, int]]] = {}
    for neuron, sign in (splits or {}).items():
        by_layer.setdefault(neuron.layer, []).append((neuron.index, sign))
    cache = BoundsCache(x, epsilon, [], [], [], [])
    lower = x - epsilon
    upper = x + epsilon
    for number, layer in enumerate(net.layers):
        pre_lower, pre_upper = interval_affine(layer, lower, upper)
        for index, sign in by_layer.get(number, []):
            if sign > 0:
                pre_lower[..., index] = np.maximum(pre_lower[..., index], 0.0)
            else:
                pre_upper[..., index] = np.minimum(pre_upper[..., index], 0.0)
            if np.any(pre_lower[..., index] > pre_upper[..., index]):
                cache.infeasible = True
                pre_upper[..., index] = np.maximum(pre_lower[..., index],
                                                   pre_upper[..., index])
        lower, upper = interval_activate(layer, pre_lower, pre_upper, loose)
        cache.lower.append(pre_lower)
        cache.upper.append(pre_upper)
        cache.post_lower.append(lower)
        cache.post_upper.append(upper)
    return cache
