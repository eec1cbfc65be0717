import itertools

import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest

from src.bounds.ibp import ibp
from src.bounds.status import layer_status
from src.domain import GraftSet
from src.domain import NeuronStatus
from src.domain import ScoreBounds
from src.domain import WidthMode
from src.grafting.graft import apply_graft
from src.grafting.graft import graft_by_rank
from src.grafting.scores import score_calibration
from src.grafting.scores import weighted_interval_from_table
from src.lipschitz.exceptions import LipschitzError
from src.lipschitz.interval import interval_lipschitz
from src.lipschitz.interval import lipschitz_estimate
from src.lipschitz.interval import mean_interval_lipschitz
from src.lipschitz.sampling import sampled_lipschitz_lower
from src.model.network import make_network
from tests.conftest import random_network
from tests.conftest import seeds

positive_radii = st.floats(min_value=0.01, max_value=0.3)
"""Strategy of positive ball radii."""


def _loose_unstable(net, x, epsilon):
    cache = ibp(net, x, epsilon, loose=True)
    return {
        layer: [
            int(index) for index in np.flatnonzero(
                layer_status(net.layers[layer].kinds, cache.lower[layer],
                             cache.upper[layer]) ==
                NeuronStatus.UNSTABLE.value)
        ]
        for layer in net.hidden_layers
    }


@hypothesis.given(seeds, positive_radii)
def test_sampled_lower_never_exceeds_interval_upper(seed, epsilon):
    net = random_network(seed, (3, 6, 5, 3))
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 3)
    estimate = lipschitz_estimate(net, x, epsilon, 200, seed)
    assert estimate.lower <= estimate.upper * (1 + 1e-9) + 1e-12
    assert estimate.upper == pytest.approx(np.max(estimate.per_output_upper))


@hypothesis.given(seeds, positive_radii)
def test_exact_widths_never_exceed_loose_widths(seed, epsilon):
    net = random_network(seed, (3, 6, 5, 3))
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 3)
    _, pre = interval_lipschitz(net, x, epsilon, WidthMode.PRE)
    _, post = interval_lipschitz(net, x, epsilon, WidthMode.POST)
    assert post <= pre * (1 + 1e-9) + 1e-12


@hypothesis.given(seeds, positive_radii, st.floats(min_value=0.0,
                                                   max_value=1.0))
def test_grafting_unstable_neurons_never_raises_the_bound(
        seed, epsilon, slope):
    net = random_network(seed, (3, 6, 5, 3))
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 3)
    _, before = interval_lipschitz(net, x, epsilon)
    grafted = apply_graft(net, GraftSet(_loose_unstable(net, x, epsilon)),
                          slope, 0.0)
    per_output_after, after = interval_lipschitz(grafted, x, epsilon)
    per_output_before, _ = interval_lipschitz(net, x, epsilon)
    assert after <= before * (1 + 1e-9) + 1e-12
    assert np.all(per_output_after <= per_output_before * (1 + 1e-9) + 1e-12)


@pytest.mark.parametrize('seed', range(4))
def test_last_layer_graft_lowers_every_output_by_its_weighted_width(seed):
    net = random_network(seed, (3, 6, 8, 3))
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 3)
    epsilon = 0.2
    last = net.depth - 2
    chosen = _loose_unstable(net, x, epsilon)[last][:3]
    cache = ibp(net, x, epsilon, loose=True)
    width = cache.upper[last] - cache.lower[last]
    slope = 0.25
    before, _ = interval_lipschitz(net, x, epsilon)
    after, _ = interval_lipschitz(
        apply_graft(net, GraftSet({last: chosen}), slope, 0.0), x, epsilon)
    outgoing = np.abs(net.layers[last + 1].weights[:, chosen])
    drop = (1 - slope) * outgoing @ width[chosen] / (2 * epsilon)
    assert np.allclose(before - after, drop)


def _highest_beats_lowest(net, x, epsilon):
    """Compare grafting the top half of the last-layer candidates by
    weighted interval score against grafting the bottom half; None when
    there is no half to compare.

    """
    last = net.depth - 2
    candidates = _loose_unstable(net, x, epsilon)[last]
    if len(candidates) < 2:
        return None
    table = score_calibration(net, x[None, :], epsilon, ScoreBounds.LOOSE)
    scores = weighted_interval_from_table(net, table, last, [0])
    mask = np.zeros(net.layers[last].output_dim, dtype=bool)
    mask[candidates] = True
    count = len(candidates) // 2
    highest = graft_by_rank(net, last, scores, count, True, mask, 0.0)
    lowest = graft_by_rank(net, last, scores, count, False, mask, 0.0)
    _, bound_highest = interval_lipschitz(highest, x, epsilon)
    _, bound_lowest = interval_lipschitz(lowest, x, epsilon)
    return bound_highest <= bound_lowest * (1 + 1e-9) + 1e-12


def test_highest_weighted_scores_give_the_lowest_bound():
    outcomes = []
    for seed in range(20):
        net = random_network(seed, (3, 6, 8, 1))
        x = np.random.default_rng(seed).uniform(0.0, 1.0, 3)
        outcomes.append(_highest_beats_lowest(net, x, 0.2))
    decided = [outcome for outcome in outcomes if outcome is not None]
    assert decided
    assert all(decided)


def _top_scores_beat_every_subset(seed, width):
    net = random_network(seed, (3, width, 2))
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 3)
    epsilon = 0.3
    unstable = _loose_unstable(net, x, epsilon)[0]
    table = score_calibration(net, x[None, :], epsilon, ScoreBounds.LOOSE)
    mask = np.zeros(width, dtype=bool)
    mask[unstable] = True
    for output in range(2):
        scores = weighted_interval_from_table(net, table, 0, [output])
        for count in range(1, min(3, len(unstable)) + 1):
            best = graft_by_rank(net, 0, scores, count, True, mask, 0.4)
            bound = interval_lipschitz(best, x, epsilon)[0][output]
            for subset in itertools.combinations(unstable, count):
                other = apply_graft(net, GraftSet({0: list(subset)}), 0.4,
                                    0.0)
                other_bound = interval_lipschitz(other, x, epsilon)[0][output]
                assert bound <= other_bound * (1 + 1e-9) + 1e-12


@pytest.mark.parametrize('seed', range(20))
def test_top_scores_beat_every_subset_of_one_hidden_layer(seed):
    _top_scores_beat_every_subset(seed, 8)


@pytest.mark.slow
def test_top_scores_beat_every_subset_on_fifty_networks():
    for seed in range(50):
        _top_scores_beat_every_subset(seed, 10)


@pytest.mark.slow
def test_random_grafts_never_raise_the_bound_on_deep_networks():
    violations = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        hidden = rng.integers(4, 17, size=int(rng.integers(2, 5)))
        widths = (3, *hidden.tolist(), 3)
        net = random_network(seed, widths)
        for _ in range(10):
            x = rng.uniform(0.0, 1.0, 3)
            epsilon = float(rng.uniform(0.01, 0.3))
            chosen = {
                layer: [
                    index for index in unstable
                    if rng.uniform() < 0.5
                ]
                for layer, unstable in _loose_unstable(net, x,
                                                       epsilon).items()
            }
            _, before = interval_lipschitz(net, x, epsilon)
            for slope in (0.0, 0.4, 1.0):
                grafted = apply_graft(net, GraftSet(chosen), slope, 0.0)
                _, after = interval_lipschitz(grafted, x, epsilon)
                if after > before * (1 + 1e-9) + 1e-12:
                    violations += 1
    assert violations == 0


@pytest.mark.slow
def test_highest_weighted_scores_win_on_deep_networks():
    outcomes = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        hidden = rng.integers(6, 13, size=int(rng.integers(2, 4)))
        net = random_network(seed, (3, *hidden.tolist(), 1))
        outcomes.append(
            _highest_beats_lowest(net, rng.uniform(0.0, 1.0, 3), 0.2))
    decided = [outcome for outcome in outcomes if outcome is not None]
    assert decided
    assert sum(decided) >= 0.9 * len(decided)


def test_linear_network_bounds_are_tight():
    net = make_network([[[1.0, -2.0], [0.5, 0.5]]], [[0.0, 0.0]])
    x = np.array([0.5, 0.5])
    per_output, upper = interval_lipschitz(net, x, 0.1)
    assert np.allclose(per_output, [3.0, 1.0])
    assert upper == pytest.approx(3.0)
    assert sampled_lipschitz_lower(net, x, 0.1, 50, 0) == pytest.approx(3.0)


def test_mean_over_anchors():
    net = random_network(2, (3, 6, 3))
    anchors = np.random.default_rng(2).uniform(0.0, 1.0, (4, 3))
    expected = np.mean(
        [interval_lipschitz(net, anchor, 0.1)[1] for anchor in anchors])
    assert mean_interval_lipschitz(net, anchors, 0.1) == pytest.approx(
        expected)


def test_sampling_is_seeded():
    net = random_network(3, (3, 6, 3))
    x = np.full(3, 0.5)
    assert (sampled_lipschitz_lower(net, x, 0.1, 100, 7) ==
            sampled_lipschitz_lower(net, x, 0.1, 100, 7))


def test_radius_must_be_positive():
    with pytest.raises(LipschitzError):
        interval_lipschitz(random_network(0), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        sampled_lipschitz_lower(random_network(0), np.zeros(2), 0.1, 0, 0)
