"""Module for the instability and weighted interval scores of hidden
neurons over a calibration set.

Both scores come from one pass over the calibration set: for every
neuron the pass counts the inputs that leave it unstable and keeps the
largest width of its pre-activation interval. The weighted interval score
of neuron j against a set P of next-layer neurons is then
max_{k in P} |W[k, j]| * maxwidth_j.

"""
import logging
import typing

import numpy as np

from src.bounds.crown import crown_intermediate
from src.bounds.ibp import ibp
from src.bounds.status import layer_status
from src.domain import BoundsCache
from src.domain import Network
from src.domain import NeuronStatus
from src.domain import ScoreBounds
from src.domain import ScoreTable
from src.grafting.exceptions import ScoreError

_logger = logging.getLogger(__name__)
"""Logger for this module."""

_CHUNK_SIZE = 256
"""Number of calibration inputs bounded at once."""


class ScoreAccumulator:
    """Streaming accumulator of instability counts and maximum
    pre-activation widths.

    Accumulators over disjoint chunks merge with a sum of the counts and
    a maximum of the widths, in any order.

    """
    def __init__(self,
                 net: Network,
                 epsilon: float,
                 bounds: ScoreBounds = ScoreBounds.IBP):
        self.__net = net
        self.__epsilon = epsilon
        self.__bounds = bounds
        self.__counts = {
            layer: np.zeros(net.layers[layer].output_dim, dtype=np.int64)
            for layer in net.hidden_layers
        }
        self.__max_width = {
            layer: np.zeros(net.layers[layer].output_dim)
            for layer in net.hidden_layers
        }
        self.__size = 0

    @property
    def size(self) -> int:
        return self.__size

    def __bound(self, inputs: np.ndarray) -> list[BoundsCache]:
        if self.__bounds is ScoreBounds.CROWN:
            return [
                crown_intermediate(self.__net, x, self.__epsilon)
                for x in inputs
            ]
        return [
            ibp(self.__net, inputs, self.__epsilon,
                loose=self.__bounds is ScoreBounds.LOOSE)
        ]

    def add(self, inputs: np.ndarray) -> None:
        """Accumulate a chunk of calibration inputs.

        Parameters
        ----------
        inputs : np.ndarray
            The inputs (chunk size x input_dim).

        """
        inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        for cache in self.__bound(inputs):
            for layer in self.__net.hidden_layers:
                lower = np.atleast_2d(cache.lower[layer])
                upper = np.atleast_2d(cache.upper[layer])
                status = layer_status(self.__net.layers[layer].kinds, lower,
                                      upper)
                self.__counts[layer] += np.count_nonzero(
                    status == NeuronStatus.UNSTABLE.value, axis=0)
                self.__max_width[layer] = np.maximum(
                    self.__max_width[layer], np.max(upper - lower, axis=0))
        self.__size += len(inputs)

    def merge(self, other: 'ScoreAccumulator') -> 'ScoreAccumulator':
        """Merge another accumulator of the same network into this one.

        """
        for layer in self.__net.hidden_layers:
            self.__counts[layer] += other.__counts[layer]
            self.__max_width[layer] = np.maximum(self.__max_width[layer],
                                                 other.__max_width[layer])
        self.__size += other.__size
        return self

    def table(self) -> ScoreTable:
        """Get the score table of the accumulated inputs.

        Raises
        ------
        ScoreError
            If no input has been accumulated.

        """
        if self.__size == 0:
            raise ScoreError('the calibration set is empty')
        return ScoreTable(
            {layer: counts.copy()
             for layer, counts in self.__counts.items()},
            {layer: widths.copy()
             for layer, widths in self.__max_width.items()}, self.__size)


def score_calibration(net: Network,
                      calibration: np.ndarray,
                      epsilon: float,
                      bounds: ScoreBounds = ScoreBounds.IBP) -> ScoreTable:
    """Score every hidden neuron over a calibration set in one pass.

    Parameters
    ----------
    net : Network
        The network.
    calibration : np.ndarray
        The calibration inputs.
    epsilon : float
        The radius of the boxes.
    bounds : ScoreBounds
        The bounds the scores are computed from.

    Returns
    -------
    ScoreTable
        The instability counts and maximum widths.

    Raises
    ------
    ScoreError
        If the calibration set is empty.

    """
    calibration = np.asarray(calibration, dtype=np.float64)
    total = ScoreAccumulator(net, epsilon, bounds)
    for start in range(0, len(calibration), _CHUNK_SIZE):
        chunk = ScoreAccumulator(net, epsilon, bounds)
        chunk.add(calibration[start:start + _CHUNK_SIZE])
        total.merge(chunk)
    table = total.table()
    _logger.info(f'Scored {net.hidden_neuron_count} neurons over '
                 f'{table.calibration_size} calibration inputs')
    return table


def instability_score(net: Network, calibration: np.ndarray,
                      epsilon: float) -> dict[int, np.ndarray]:
    """Count, for every hidden neuron, the calibration inputs whose interval
    bounds leave it unstable (lb < 0 < ub).

    Raises
    ------
    ScoreError
        If the calibration set is empty.

    """
    return score_calibration(net, calibration, epsilon).instability


def weighted_interval_from_table(net: Network, table: ScoreTable, layer: int,
                                 selected_next: typing.Sequence[int]
                                 ) -> np.ndarray:
    """Get the weighted interval scores of one layer from a score table.

    Parameters
    ----------
    net : Network
        The network.
    table : ScoreTable
        The calibration scores.
    layer : int
        The scored hidden layer.
    selected_next : sequence of int
        The indices P of the selected neurons of the next layer.

    Returns
    -------
    np.ndarray
        The score of every neuron of the layer.

    Raises
    ------
    ScoreError
        If selected_next is empty.

    """
    if len(selected_next) == 0:
        raise ScoreError(f'no selected neuron after layer {layer}')
    outgoing = np.abs(net.layers[layer + 1].weights[list(selected_next), :])
    return np.max(outgoing, axis=0) * table.max_width[layer]


def weighted_interval_score(net: Network, calibration: np.ndarray,
                            epsilon: float, layer: int,
                            selected_next: typing.Sequence[int],
                            bounds: ScoreBounds = ScoreBounds.IBP
                            ) -> np.ndarray:
    """Get the weighted interval scores of one layer over a calibration
    set.

    Raises
    ------
    ScoreError
        If selected_next or the calibration set is empty.

    """
    if len(selected_next) == 0:
        raise ScoreError(f'no selected neuron after layer {layer}')
    table = score_calibration(net, calibration, epsilon, bounds)
    return weighted_interval_from_table(net, table, layer, selected_next)
