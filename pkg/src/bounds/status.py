"""Module for classifying hidden neurons by the stability of their bounds.

"""
import numpy as np

from src.domain import ActivationKind
from src.domain import BoundsCache
from src.domain import Network
from src.domain import NeuronStatus
from src.domain import StatusReport


def layer_status(kinds: np.ndarray, lower: np.ndarray,
                 upper: np.ndarray) -> np.ndarray:
    """Classify the neurons of one layer.

    Only ReLUs can be unstable, and only when lb < 0 < ub strictly.

    Parameters
    ----------
    kinds : np.ndarray
        The activation kinds of the layer.
    lower : np.ndarray
        The pre-activation lower bounds (any leading batch shape).
    upper : np.ndarray
        The pre-activation upper bounds.

    Returns
    -------
    np.ndarray
        The NeuronStatus values, shaped like the bounds.

    """
    relu = kinds == ActivationKind.RELU.value
    status = np.where(
        lower >= 0, NeuronStatus.ACTIVE.value,
        np.where(upper <= 0, NeuronStatus.INACTIVE.value,
                 NeuronStatus.UNSTABLE.value))
    return np.where(relu, status, NeuronStatus.LINEAR.value)


def unstable_masks(net: Network, cache: BoundsCache) -> list[np.ndarray]:
    """Get the boolean masks of the unstable neurons of every hidden
    layer.

    """
    return [
        layer_status(net.layers[number].kinds, cache.lower[number],
                     cache.upper[number]) == NeuronStatus.UNSTABLE.value
        for number in net.hidden_layers
    ]


def neuron_status(net: Network, cache: BoundsCache) -> StatusReport:
    """Classify every hidden neuron and compute the unstable neuron
    ratio.

    Parameters
    ----------
    net : Network
        The network providing the activation kinds.
    cache : BoundsCache
        Bounds for one anchor, or for a batch of anchors; for a batch the
        ratio is averaged over the anchors.

    Returns
    -------
    StatusReport
        The per-layer statuses with the unstable and total counts.

    """
    statuses = [
        layer_status(net.layers[number].kinds, cache.lower[number],
                     cache.upper[number]) for number in net.hidden_layers
    ]
    unstable_count = sum(
        int(np.count_nonzero(status == NeuronStatus.UNSTABLE.value))
        for status in statuses)
    total = sum(int(status.size) for status in statuses)
    return StatusReport(statuses, unstable_count, total)
