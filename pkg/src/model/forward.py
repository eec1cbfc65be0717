"""Module for exact forward evaluation of networks.

"""
import numpy as np

from src.domain import ActivationKind
from src.domain import Layer
from src.domain import Network
from src.model.exceptions import ShapeError


def activate(layer: Layer, z: np.ndarray) -> np.ndarray:
    """Apply the per-neuron activations of a layer.

    Grafted neurons compute slope * z + intercept whatever the sign of z.

    Parameters
    ----------
    layer : Layer
        The layer providing the activation kinds.
    z : np.ndarray
        Pre-activation values, neurons along the last axis.

    Returns
    -------
    np.ndarray
        The post-activation values.

    """
    relu = layer.mask(ActivationKind.RELU)
    grafted = layer.mask(ActivationKind.GRAFTED_LINEAR)
    return np.where(
        relu, np.maximum(z, 0.0),
        np.where(grafted, layer.slopes * z + layer.intercepts, z))


def _check_input(net: Network, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != net.input_dim:
        raise ShapeError(f'input has shape {x.shape}, expected last '
                         f'dimension {net.input_dim}')
    return x


def forward_trace(net: Network,
                  x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Evaluate the network and keep every intermediate vector.

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        One input vector, or a batch with inputs along the last axis.

    Returns
    -------
    tuple of list of np.ndarray
        The pre-activation and post-activation values of every layer.
        The last post-activation entry is the network output.

    Raises
    ------
    ShapeError
        If the input dimension does not match the network.

    """
    h = _check_input(net, x)
    pre_activations = []
    post_activations = []
    for layer in net.layers:
        z = h @ layer.weights.T + layer.bias
        h = activate(layer, z)
        pre_activations.append(z)
        post_activations.append(h)
    return pre_activations, post_activations


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Evaluate the network.

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        One input vector, or a batch with inputs along the last axis.

    Returns
    -------
    np.ndarray
        The logits.

    Raises
    ------
    ShapeError
        If the input dimension does not match the network.

    """
    return forward_trace(net, x)[1][-1]


def predict(net: Network, inputs: np.ndarray) -> np.ndarray:
    """Get the predicted classes of a batch.

    """
    return np.argmax(forward(net, inputs), axis=-1)


def activation_derivative(layer: Layer, z: np.ndarray) -> np.ndarray:
    """Get the derivative of the activations of a layer at the given
    pre-activations (ReLU derivative at zero is zero).

    """
    return np.where(
        layer.mask(ActivationKind.RELU), (z > 0).astype(np.float64),
        np.where(layer.mask(ActivationKind.GRAFTED_LINEAR), layer.slopes,
                 1.0))


def jacobian(net: Network, x: np.ndarray) -> np.ndarray:
    """Get the input Jacobian of the network on the linear piece containing
    the input.

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        One input vector, or a batch with inputs along the last axis.

    Returns
    -------
    np.ndarray
        The Jacobian (outputs x inputs), with the batch shape in front for
        a batch of inputs.

    """
    pre_activations, _ = forward_trace(net, x)
    batch_shape = np.shape(pre_activations[0])[:-1]
    last = net.layers[-1]
    output_derivative = activation_derivative(last, pre_activations[-1])
    result = np.broadcast_to(last.weights * output_derivative[..., None],
                             batch_shape + last.weights.shape)
    for number in range(net.depth - 2, -1, -1):
        layer = net.layers[number]
        derivative = activation_derivative(layer, pre_activations[number])
        result = (result * derivative[..., None, :]) @ layer.weights
    return result
