"""Module for the terms of the training loss.

Each term has a tape form, differentiated by the trainer, and a plain
numpy form for reporting.

"""
import typing

import numpy as np

from src.autodiff.gradients import LossFunction
from src.autodiff.network import NetworkNodes
from src.autodiff.network import network_forward
from src.autodiff.network import network_intervals
from src.autodiff.network import register_network
from src.autodiff.tape import Tape
from src.autodiff.tape import Var
from src.bounds.status import layer_status
from src.domain import ActivationKind
from src.domain import Batch
from src.domain import BoundsCache
from src.domain import Network
from src.domain import NeuronStatus
from src.domain import SlopeLossVariant
from src.domain import TrainConfig


def slope_penalty(s: typing.Any,
                  k: float,
                  variant: SlopeLossVariant = SlopeLossVariant.VERBATIM,
                  tape: typing.Optional[Tape] = None) -> typing.Any:
    """Get the slope penalty of relaxation slopes s.

    The verbatim form is 1 - tanh(k (1 - s)^2); the symmetric form is
    1 - tanh(4 k (s - 1/2)^2).

    Parameters
    ----------
    s : float, np.ndarray or Var
        The slopes.
    k : float
        The sharpness; positive.
    variant : SlopeLossVariant
        The form of the penalty; RS and OFF give zero.
    tape : Tape, optional
        The tape, required when s is a tape node.

    """
    if isinstance(s, Var):
        assert tape is not None
        if variant is SlopeLossVariant.VERBATIM:
            argument = tape.apply('square', 1.0 - s) * k
        elif variant is SlopeLossVariant.SYMMETRIC:
            argument = tape.apply('square', s - 0.5) * (4.0 * k)
        else:
            return s * 0.0
        return 1.0 - tape.apply('tanh', argument)
    if variant is SlopeLossVariant.VERBATIM:
        return 1.0 - np.tanh(k * (1.0 - s)**2)
    if variant is SlopeLossVariant.SYMMETRIC:
        return 1.0 - np.tanh(4.0 * k * (s - 0.5)**2)
    return s * 0.0


def stability_penalty(lower: typing.Any,
                      upper: typing.Any,
                      tape: typing.Optional[Tape] = None) -> typing.Any:
    """Get the ReLU stability penalty -tanh(1 + lower * upper) of
    pre-activation bounds, which tends to -1 as both bounds move away from
    zero on the same side.

    """
    if isinstance(lower, Var):
        assert tape is not None
        return -tape.apply('tanh', lower * upper + 1.0)
    return -np.tanh(1.0 + lower * upper)


def stability_loss(net: Network, bounds: BoundsCache) -> float:
    """Get the mean stability penalty over the (input, ReLU) pairs of a
    network, 0 without ReLUs. Grafted neurons do not contribute.

    """
    total = 0.0
    count = 0
    for number in net.hidden_layers:
        relu = net.layers[number].mask(ActivationKind.RELU)
        lower = np.atleast_2d(bounds.lower[number])[:, relu]
        upper = np.atleast_2d(bounds.upper[number])[:, relu]
        total += float(np.sum(stability_penalty(lower, upper)))
        count += lower.size
    if count == 0:
        return 0.0
    return total / count


def slope_loss(net: Network,
               bounds: BoundsCache,
               k: float,
               variant: SlopeLossVariant = SlopeLossVariant.VERBATIM
               ) -> float:
    """Get the slope loss of a network from its interval bounds.

    Unstable ReLUs contribute the penalty of s = ub / (ub - lb) and
    grafted neurons the penalty of their slope; stable ReLUs contribute
    nothing. The loss is the mean over the contributing (input, neuron)
    pairs, and 0 when there is none. The RS variant gives the stability
    loss instead.

    Parameters
    ----------
    net : Network
        The network.
    bounds : BoundsCache
        Bounds of one input or of a batch of inputs.
    k : float
        The sharpness.
    variant : SlopeLossVariant
        The form of the penalty.

    Returns
    -------
    float
        The loss.

    """
    if variant is SlopeLossVariant.OFF:
        return 0.0
    if variant is SlopeLossVariant.RS:
        return stability_loss(net, bounds)
    total = 0.0
    count = 0
    for number in net.hidden_layers:
        layer = net.layers[number]
        lower = np.atleast_2d(bounds.lower[number])
        upper = np.atleast_2d(bounds.upper[number])
        unstable = layer_status(layer.kinds, lower,
                                upper) == NeuronStatus.UNSTABLE.value
        s = upper[unstable] / (upper[unstable] - lower[unstable])
        total += float(np.sum(slope_penalty(s, k, variant)))
        count += int(np.count_nonzero(unstable))
        grafted = layer.mask(ActivationKind.GRAFTED_LINEAR)
        total += len(lower) * float(
            np.sum(slope_penalty(layer.slopes[grafted], k, variant)))
        count += len(lower) * int(np.count_nonzero(grafted))
    if count == 0:
        return 0.0
    return total / count


def slope_loss_node(tape: Tape,
                    nodes: NetworkNodes,
                    inputs: np.ndarray,
                    epsilon: float,
                    k: float,
                    variant: SlopeLossVariant = SlopeLossVariant.VERBATIM
                    ) -> Var:
    """Record the slope loss over the boxes around a batch of inputs.

    Gradients reach the weights through the interval bounds of unstable
    ReLUs and the slopes of grafted neurons directly. The RS variant
    records the stability loss of every ReLU instead.

    """
    if variant is SlopeLossVariant.OFF:
        return tape.constant(0.0)
    lowers, uppers = network_intervals(tape, nodes, inputs - epsilon,
                                       inputs + epsilon)
    terms = []
    count = 0
    for number in nodes.net.hidden_layers:
        layer = nodes.layers[number]
        lower = lowers[number]
        upper = uppers[number]
        if variant is SlopeLossVariant.RS:
            relu = nodes.net.layers[number].mask(ActivationKind.RELU)
            if np.any(relu):
                penalty = stability_penalty(lower, upper,
                                            tape) * relu.astype(np.float64)
                terms.append(tape.apply('sum', penalty))
                count += len(inputs) * int(relu.sum())
            continue
        unstable = (layer_status(nodes.net.layers[number].kinds, lower.value,
                                 upper.value) == NeuronStatus.UNSTABLE.value
                    ).astype(np.float64)
        if np.any(unstable):
            # masked entries divide by at least 1
            s = upper / (upper - lower + (1.0 - unstable))
            penalty = slope_penalty(s, k, variant, tape) * unstable
            terms.append(tape.apply('sum', penalty))
            count += int(unstable.sum())
        if np.any(layer.graft_mask):
            penalty = slope_penalty(layer.slopes, k, variant,
                                    tape) * layer.graft_mask
            terms.append(tape.apply('sum', penalty) * float(len(inputs)))
            count += len(inputs) * int(layer.graft_mask.sum())
    if count == 0:
        return tape.constant(0.0)
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total / float(count)


def l1_reg(net: Network) -> float:
    """Get the sum of the absolute weights of all layers, biases
    excluded.

    """
    return float(sum(np.abs(layer.weights).sum() for layer in net.layers))


def l1_node(tape: Tape, nodes: NetworkNodes) -> Var:
    """Record the sum of the absolute weights of all layers.

    """
    total = tape.apply('sum', tape.apply('abs', nodes.layers[0].weights))
    for layer in nodes.layers[1:]:
        total = total + tape.apply('sum', tape.apply('abs', layer.weights))
    return total


def cross_entropy_node(tape: Tape, nodes: NetworkNodes, inputs: np.ndarray,
                       labels: np.ndarray) -> Var:
    """Record the mean cross-entropy of a batch.

    """
    logits = network_forward(tape, nodes, inputs)
    return tape.apply('cross_entropy', logits, labels=labels)


def make_total_loss(adversarial: np.ndarray,
                    config: TrainConfig) -> LossFunction:
    """Make the total training loss of a batch.

    The loss is the cross-entropy at the given adversarial inputs, held
    fixed, plus lambda_slope times the slope loss over the boxes around
    the clean inputs, plus lambda_l1 times the l1 norm of the weights.

    Parameters
    ----------
    adversarial : np.ndarray
        The adversarial inputs of the batch.
    config : TrainConfig
        The coefficients, the slope loss form and epsilon.

    Returns
    -------
    LossFunction
        The loss function of a registered network and a clean batch.

    """
    def loss_fn(tape: Tape, nodes: NetworkNodes, batch: Batch) -> Var:
        loss = cross_entropy_node(tape, nodes, adversarial, batch.labels)
        if config.lambda_slope != 0 and config.epsilon > 0:
            loss = loss + slope_loss_node(
                tape, nodes, batch.inputs, config.epsilon, config.slope_k,
                config.slope_loss) * config.lambda_slope
        if config.lambda_l1 != 0:
            loss = loss + l1_node(tape, nodes) * config.lambda_l1
        return loss

    return loss_fn


def total_loss(net: Network, batch: Batch, adversarial: np.ndarray,
               config: TrainConfig) -> float:
    """Evaluate the total training loss of a batch.

    """
    tape = Tape()
    return float(
        make_total_loss(adversarial, config)(tape,
                                             register_network(tape, net),
                                             batch).value)
