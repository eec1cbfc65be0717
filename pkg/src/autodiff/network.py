"""Module for differentiable forward and interval passes over networks.

"""
import dataclasses
import typing

import numpy as np

from src.autodiff.tape import Tape
from src.autodiff.tape import Var
from src.domain import ActivationKind
from src.domain import Layer
from src.domain import Network


@dataclasses.dataclass
class LayerNodes:
    """Tape nodes of the trainable tensors of one layer, with the constant
    activation masks.

    """
    weights: Var
    bias: Var
    slopes: Var
    intercepts: Var
    relu_mask: np.ndarray
    graft_mask: np.ndarray
    identity_mask: np.ndarray


@dataclasses.dataclass
class NetworkNodes:
    """Tape nodes of a whole network.

    """
    net: Network
    layers: list[LayerNodes]

    def variables(self) -> list[Var]:
        """Get the parameter nodes in (layer, tensor) order.

        """
        return [
            var for layer in self.layers for var in (layer.weights,
                                                     layer.bias, layer.slopes,
                                                     layer.intercepts)
        ]


def _layer_nodes(tape: Tape, layer: Layer, trainable: bool) -> LayerNodes:
    leaf = tape.variable if trainable else tape.constant
    return LayerNodes(leaf(layer.weights), leaf(layer.bias),
                      leaf(layer.slopes), leaf(layer.intercepts),
                      layer.mask(ActivationKind.RELU).astype(np.float64),
                      layer.mask(ActivationKind.GRAFTED_LINEAR).astype(
                          np.float64),
                      layer.mask(ActivationKind.IDENTITY).astype(np.float64))


def register_network(tape: Tape,
                     net: Network,
                     trainable: bool = True) -> NetworkNodes:
    """Record the parameters of a network as tape leaves.

    Parameters
    ----------
    tape : Tape
        The tape.
    net : Network
        The network.
    trainable : bool
        Whether the parameters are variables (True) or constants.

    Returns
    -------
    NetworkNodes
        The parameter nodes.

    """
    return NetworkNodes(
        net, [_layer_nodes(tape, layer, trainable) for layer in net.layers])


def _activate(tape: Tape, nodes: LayerNodes, z: Var) -> Var:
    grafted = nodes.slopes * z + nodes.intercepts
    return (tape.apply('relu', z) * nodes.relu_mask +
            grafted * nodes.graft_mask + z * nodes.identity_mask)


def network_forward(tape: Tape, nodes: NetworkNodes,
                    inputs: typing.Union[Var, np.ndarray]) -> Var:
    """Record the forward pass of a network.

    Parameters
    ----------
    tape : Tape
        The tape.
    nodes : NetworkNodes
        The registered network.
    inputs : Var or np.ndarray
        A batch of inputs; arrays are recorded as constants.

    Returns
    -------
    Var
        The logits node.

    """
    h = inputs if isinstance(inputs, Var) else tape.constant(inputs)
    for layer in nodes.layers:
        z = tape.apply('affine', h, layer.weights, layer.bias)
        h = _activate(tape, layer, z)
    return h


def network_intervals(
        tape: Tape, nodes: NetworkNodes, lower: np.ndarray,
        upper: np.ndarray) -> tuple[list[Var], list[Var]]:
    """Record interval bound propagation through a network.

    The sign split of every weight matrix is fixed at its current value.

    Parameters
    ----------
    tape : Tape
        The tape.
    nodes : NetworkNodes
        The registered network.
    lower : np.ndarray
        Lower corners of the input boxes (batch x inputs).
    upper : np.ndarray
        Upper corners of the input boxes.

    Returns
    -------
    tuple of list of Var
        The lower and upper pre-activation bounds of every layer.

    """
    post_lower = tape.constant(lower)
    post_upper = tape.constant(upper)
    lowers = []
    uppers = []
    for layer in nodes.layers:
        pre_lower = tape.apply('interval_affine_lower', post_lower,
                               post_upper, layer.weights, layer.bias)
        pre_upper = tape.apply('interval_affine_upper', post_lower,
                               post_upper, layer.weights, layer.bias)
        lowers.append(pre_lower)
        uppers.append(pre_upper)
        at_lower = layer.slopes * pre_lower + layer.intercepts
        at_upper = layer.slopes * pre_upper + layer.intercepts
        post_lower = (tape.apply('relu', pre_lower) * layer.relu_mask +
                      tape.apply('minimum', at_lower, at_upper) *
                      layer.graft_mask + pre_lower * layer.identity_mask)
        post_upper = (tape.apply('relu', pre_upper) * layer.relu_mask +
                      tape.apply('maximum', at_lower, at_upper) *
                      layer.graft_mask + pre_upper * layer.identity_mask)
    return lowers, uppers
