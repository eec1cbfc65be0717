"""Module for selecting the neurons to graft, backward from the last
hidden layer.

"""
import logging
import math

import numpy as np

from src.domain import GraftSet
from src.domain import Network
from src.domain import NeuronId
from src.domain import ScoreBounds
from src.domain import ScoreTable
from src.domain import SelectionRatios
from src.grafting.exceptions import SelectionConfigError
from src.grafting.scores import score_calibration
from src.grafting.scores import weighted_interval_from_table

_logger = logging.getLogger(__name__)
"""Logger for this module."""


def validate_ratios(ratios: SelectionRatios) -> None:
    """Check that every selection ratio lies in (0, 1].

    Raises
    ------
    SelectionConfigError
        If a ratio is outside (0, 1].

    """
    for name in ('pool', 'influential', 'last_layer_retain', 'graft'):
        value = getattr(ratios, name)
        if not 0 < value <= 1:
            raise SelectionConfigError(
                f'the {name} ratio must lie in (0, 1], got {value}')


def _top(indices: list[int], scores: np.ndarray, count: int) -> list[int]:
    # highest score first, lower index on ties
    ranked = sorted(indices, key=lambda index: (-scores[index], index))
    return ranked[:count]


def unstable_pool(net: Network, table: ScoreTable,
                  ratio: float) -> set[NeuronId]:
    """Get the most unstable hidden neurons network-wide.

    All hidden neurons are ranked by instability count (ties by layer,
    then index); the first floor(ratio * N) with a positive count form the
    pool.

    """
    ranked = sorted(net.neuron_ids(),
                    key=lambda neuron:
                    (-table.instability[neuron.layer][neuron.index], neuron))
    size = math.floor(ratio * len(ranked))
    return {
        neuron
        for neuron in ranked[:size]
        if table.instability[neuron.layer][neuron.index] > 0
    }


def select_from_scores(
        net: Network,
        table: ScoreTable,
        ratios: SelectionRatios = SelectionRatios()) -> GraftSet:
    """Select the neurons to graft from calibration scores.

    The last hidden layer keeps its part of the global pool; when that
    part is the whole layer, only the top share by instability is
    retained. Every earlier layer, in descending order, takes the top
    share of its pool by weighted interval score against the selection of
    the layer above, then fills its grafting budget with its most
    unstable remaining neurons.

    Parameters
    ----------
    net : Network
        The network.
    table : ScoreTable
        The calibration scores; its weighted interval scores are filled
        in.
    ratios : SelectionRatios
        The selection ratios.

    Returns
    -------
    GraftSet
        The selected neurons of every hidden layer.

    Raises
    ------
    SelectionConfigError
        If a ratio is outside (0, 1].

    """
    validate_ratios(ratios)
    pool = unstable_pool(net, table, ratios.pool)
    last = net.depth - 2
    selected: dict[int, list[int]] = {}
    if last < 0:
        return GraftSet(selected)

    counts = table.instability[last]
    width = net.layers[last].output_dim
    candidates = sorted(neuron.index for neuron in pool
                        if neuron.layer == last)
    if ratios.retain_only_if_full:
        if len(candidates) == width:
            candidates = _top(candidates, counts,
                              math.floor(ratios.last_layer_retain * width))
    else:
        candidates = _top(
            candidates, counts,
            math.floor(ratios.last_layer_retain * len(candidates)))
    selected[last] = sorted(candidates)

    for layer in range(last - 1, -1, -1):
        width = net.layers[layer].output_dim
        counts = table.instability[layer]
        selected_next = selected[layer + 1]
        if not selected_next:
            _logger.warning(f'No neuron selected in layer {layer + 1}, '
                            f'scoring layer {layer} against all of it')
            selected_next = list(range(net.layers[layer + 1].output_dim))
        scores = weighted_interval_from_table(net, table, layer,
                                              selected_next)
        table.weighted_interval[layer] = scores
        layer_pool = sorted(neuron.index for neuron in pool
                            if neuron.layer == layer)
        influential = []
        if layer_pool:
            influential = _top(
                layer_pool, scores,
                max(1, math.floor(ratios.influential * width)))
        budget = math.floor(ratios.graft * width)
        remaining = [
            index for index in range(width)
            if counts[index] > 0 and index not in influential
        ]
        filled = _top(remaining, counts, max(0, budget - len(influential)))
        selected[layer] = sorted(influential + filled)

    graft_set = GraftSet(dict(sorted(selected.items())))
    _logger.info(f'Selected {graft_set.size()} of '
                 f'{net.hidden_neuron_count} hidden neurons for grafting')
    return graft_set


def backward_select(net: Network,
                    calibration: np.ndarray,
                    epsilon: float,
                    ratios: SelectionRatios = SelectionRatios(),
                    bounds: ScoreBounds = ScoreBounds.IBP
                    ) -> tuple[GraftSet, ScoreTable]:
    """Score a calibration set and select the neurons to graft.

    Returns
    -------
    tuple of GraftSet and ScoreTable
        The selection and the scores it was made from.

    Raises
    ------
    SelectionConfigError
        If a ratio is outside (0, 1].
    ScoreError
        If the calibration set is empty.

    """
    validate_ratios(ratios)
    table = score_calibration(net, calibration, epsilon, bounds)
    return select_from_scores(net, table, ratios), table
