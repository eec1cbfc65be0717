"""Module for replacing selected ReLUs with learnable linear functions.

"""
import logging
import typing

import numpy as np

from src.domain import ActivationKind
from src.domain import GraftSet
from src.domain import Network
from src.grafting.exceptions import GraftError
from src.model.network import with_activations

_logger = logging.getLogger(__name__)
"""Logger for this module."""

DEFAULT_SLOPE = 0.4
"""Initial slope of grafted neurons."""

DEFAULT_INTERCEPT = 0.0
"""Initial intercept of grafted neurons."""


def validate_graft_set(net: Network, graft_set: GraftSet) -> None:
    """Check that a graft set only names hidden neurons of the network.

    Raises
    ------
    GraftError
        If a layer is the output layer or out of range, or an index is
        out of range or repeated.

    """
    for layer, indices in graft_set.selected.items():
        if layer == net.depth - 1:
            raise GraftError('output layer neurons cannot be grafted')
        if not 0 <= layer < net.depth - 1:
            raise GraftError(f'no hidden layer {layer}')
        if len(set(indices)) != len(indices):
            raise GraftError(f'repeated neuron index in layer {layer}')
        width = net.layers[layer].output_dim
        for index in indices:
            if not 0 <= index < width:
                raise GraftError(f'no neuron {index} in layer {layer}')


def apply_graft(net: Network,
                graft_set: GraftSet,
                init_slope: float = DEFAULT_SLOPE,
                init_intercept: float = DEFAULT_INTERCEPT) -> Network:
    """Graft the selected neurons of a network.

    Parameters
    ----------
    net : Network
        The network.
    graft_set : GraftSet
        The neurons to graft; per-neuron slopes and intercepts, when
        present, take precedence over the initial values.
    init_slope : float
        The slope of neurons without their own.
    init_intercept : float
        The intercept of neurons without their own.

    Returns
    -------
    Network
        The grafted network; all other parameters are unchanged.

    Raises
    ------
    GraftError
        If the graft set does not fit the network.

    """
    validate_graft_set(net, graft_set)
    grafted = net
    for layer, indices in sorted(graft_set.selected.items()):
        if not indices:
            continue
        current = grafted.layers[layer]
        kinds = current.kinds.copy()
        slopes = current.slopes.copy()
        intercepts = current.intercepts.copy()
        layer_slopes = graft_set.slopes.get(layer)
        layer_intercepts = graft_set.intercepts.get(layer)
        for position, index in enumerate(indices):
            kinds[index] = ActivationKind.GRAFTED_LINEAR.value
            slopes[index] = (layer_slopes[position]
                             if layer_slopes else init_slope)
            intercepts[index] = (layer_intercepts[position]
                                 if layer_intercepts else init_intercept)
        grafted = with_activations(grafted, layer, kinds, slopes, intercepts)
    _logger.info(f'Grafted {graft_set.size()} neurons')
    return grafted


def graft_set_of(net: Network) -> GraftSet:
    """Get the grafted neurons of a network with their current slopes and
    intercepts.

    """
    selected = {}
    slopes = {}
    intercepts = {}
    for layer in net.hidden_layers:
        current = net.layers[layer]
        indices = np.flatnonzero(current.mask(ActivationKind.GRAFTED_LINEAR))
        selected[layer] = [int(index) for index in indices]
        slopes[layer] = [float(current.slopes[index]) for index in indices]
        intercepts[layer] = [
            float(current.intercepts[index]) for index in indices
        ]
    return GraftSet(selected, slopes, intercepts)


def graft_by_rank(net: Network,
                  layer: int,
                  scores: np.ndarray,
                  count: int,
                  highest: bool = True,
                  candidates: typing.Optional[np.ndarray] = None,
                  slope: float = DEFAULT_SLOPE,
                  intercept: float = DEFAULT_INTERCEPT) -> Network:
    """Graft the highest or lowest scoring neurons of one layer.

    Parameters
    ----------
    net : Network
        The network.
    layer : int
        The hidden layer.
    scores : np.ndarray
        The score of every neuron of the layer.
    count : int
        The number of neurons to graft.
    highest : bool
        Whether the highest (True) or lowest scores are grafted; ties go
        to the lower index either way.
    candidates : np.ndarray, optional
        Boolean mask of the neurons eligible for grafting; all by default.
    slope : float
        The slope of the grafted neurons.
    intercept : float
        The intercept of the grafted neurons.

    Returns
    -------
    Network
        The grafted network.

    """
    eligible = (np.ones(len(scores), dtype=bool)
                if candidates is None else np.asarray(candidates, dtype=bool))
    indices = [int(index) for index in np.flatnonzero(eligible)]
    sign = -1.0 if highest else 1.0
    ranked = sorted(indices, key=lambda index: (sign * scores[index], index))
    return apply_graft(net, GraftSet({layer: sorted(ranked[:count])}), slope,
                       intercept)
