"""Module for computing parameter and input gradients of losses.

"""
import typing

import numpy as np

from src.autodiff.network import NetworkNodes
from src.autodiff.network import network_forward
from src.autodiff.network import register_network
from src.autodiff.tape import Tape
from src.autodiff.tape import Var
from src.domain import Batch
from src.domain import LayerTensors
from src.domain import Network
from src.domain import ParamGrad

LossFunction = typing.Callable[[Tape, NetworkNodes, Batch], Var]
"""Builds a scalar loss node from a registered network and a batch."""


def grad(loss_fn: LossFunction, net: Network,
         batch: Batch) -> tuple[float, ParamGrad]:
    """Get the value of a loss and its gradient with respect to every
    trainable parameter.

    Parameters
    ----------
    loss_fn : LossFunction
        The loss, built from registered primitives.
    net : Network
        The network.
    batch : Batch
        The batch; must not be empty.

    Returns
    -------
    tuple of float and ParamGrad
        The loss value and the gradient, shaped like the network.

    Raises
    ------
    ValueError
        If the batch is empty.
    UnsupportedPrimitiveError
        If the loss uses an unknown primitive.
    NumericError
        If the forward pass produces a non-finite value.

    """
    if len(batch.labels) == 0:
        raise ValueError('the batch is empty')
    tape = Tape()
    nodes = register_network(tape, net)
    loss = loss_fn(tape, nodes, batch)
    gradients = tape.gradients(loss, nodes.variables())
    layers = [
        LayerTensors(*gradients[4 * number:4 * number + 4])
        for number in range(net.depth)
    ]
    return float(loss.value), ParamGrad(layers)


def input_gradient(net: Network, inputs: np.ndarray,
                   labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Get the gradient of the summed cross-entropy with respect to a batch
    of inputs.

    Parameters
    ----------
    net : Network
        The network, held fixed.
    inputs : np.ndarray
        The inputs (batch x input_dim).
    labels : np.ndarray
        The labels.

    Returns
    -------
    tuple of np.ndarray
        The per-sample losses and the input gradient.

    """
    tape = Tape()
    nodes = register_network(tape, net, trainable=False)
    x = tape.variable(inputs)
    logits = network_forward(tape, nodes, x)
    loss = tape.apply('cross_entropy', logits, labels=labels,
                      reduction='sum')
    (gradient, ) = tape.gradients(loss, [x])
    shifted = logits.value - logits.value.max(axis=1, keepdims=True)
    losses = (np.log(np.exp(shifted).sum(axis=1)) -
              shifted[np.arange(len(labels)), labels])
    return losses, gradient
