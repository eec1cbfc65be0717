"""Module for constructing, validating and re-parameterizing networks.

"""
import typing

import numpy as np

from src.domain import ActivationKind
from src.domain import Layer
from src.domain import LayerTensors
from src.domain import Network
from src.model.exceptions import ModelValidationError

DEFAULT_MAX_SLOPE = 10.0
"""Sanity cap on the absolute slope of grafted neurons."""


def make_layer(weights: typing.Any,
               bias: typing.Any,
               kind: ActivationKind = ActivationKind.RELU) -> Layer:
    """Make a layer whose neurons all share one activation kind.

    Parameters
    ----------
    weights : array-like
        The weight matrix (outputs x inputs).
    bias : array-like
        The bias vector.
    kind : ActivationKind
        The activation kind of every neuron.

    Returns
    -------
    Layer
        The layer.

    """
    weights = np.asarray(weights, dtype=np.float64)
    rows = weights.shape[0]
    return Layer(weights, bias, np.full(rows, kind.value), np.zeros(rows),
                 np.zeros(rows))


def make_network(weights: typing.Sequence[typing.Any],
                 biases: typing.Sequence[typing.Any]) -> Network:
    """Make a ReLU network with an Identity output layer.

    Parameters
    ----------
    weights : sequence of array-like
        The weight matrices, first layer first.
    biases : sequence of array-like
        The bias vectors.

    Returns
    -------
    Network
        The network.

    """
    layers = [
        make_layer(
            layer_weights, layer_bias, ActivationKind.IDENTITY
            if number == len(weights) - 1 else ActivationKind.RELU)
        for number, (layer_weights,
                     layer_bias) in enumerate(zip(weights, biases))
    ]
    return Network(np.asarray(weights[0]).shape[1], tuple(layers))


def initialize_network(widths: typing.Sequence[int],
                       rng: np.random.Generator) -> Network:
    """Initialize a ReLU network with He-uniform weights and zero biases.

    Parameters
    ----------
    widths : sequence of int
        The layer widths, input dimension first and number of classes
        last (e.g. [2, 32, 32, 2]).
    rng : np.random.Generator
        The random generator.

    Returns
    -------
    Network
        The initialized network.

    """
    if len(widths) < 2:
        raise ModelValidationError('at least an input and an output width '
                                   'are required')
    weights = []
    biases = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return make_network(weights, biases)


def validate_network(net: Network,
                     max_slope: float = DEFAULT_MAX_SLOPE) -> None:
    """Validate the invariants that depend on configuration.

    Parameters
    ----------
    net : Network
        The network to validate.
    max_slope : float
        The cap on the absolute slope of grafted neurons.

    Raises
    ------
    ModelValidationError
        If a grafted slope exceeds the cap.

    """
    for number, layer in enumerate(net.layers):
        grafted = layer.mask(ActivationKind.GRAFTED_LINEAR)
        if np.any(np.abs(layer.slopes[grafted]) > max_slope):
            raise ModelValidationError(
                f'grafted slope in layer {number} exceeds the cap '
                f'{max_slope}')


def parameters(net: Network) -> list[LayerTensors]:
    """Get writable copies of the trainable tensors of a network.

    """
    return [
        LayerTensors(layer.weights.copy(), layer.bias.copy(),
                     layer.slopes.copy(), layer.intercepts.copy())
        for layer in net.layers
    ]


def with_parameters(net: Network, params: list[LayerTensors]) -> Network:
    """Build a network with the structure of the given one and the given
    trainable tensors.

    Parameters
    ----------
    net : Network
        The network providing the activation kinds.
    params : list of LayerTensors
        The new tensors, one entry per layer.

    Returns
    -------
    Network
        The re-parameterized network.

    """
    layers = [
        Layer(tensors.weights, tensors.bias, layer.kinds, tensors.slopes,
              tensors.intercepts)
        for layer, tensors in zip(net.layers, params)
    ]
    return Network(net.input_dim, tuple(layers))


def with_activations(net: Network, layer_number: int, kinds: np.ndarray,
                     slopes: np.ndarray, intercepts: np.ndarray) -> Network:
    """Build a network with the activations of one layer replaced.

    """
    layers = list(net.layers)
    layer = layers[layer_number]
    layers[layer_number] = Layer(layer.weights, layer.bias, kinds, slopes,
                                 intercepts)
    return Network(net.input_dim, tuple(layers))
