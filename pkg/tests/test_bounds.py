import hypothesis
import numpy as np
import pytest

from src.bounds.crown import concretization_corner
from src.bounds.crown import crown_bounds
from src.bounds.crown import crown_intermediate
from src.bounds.crown import relax
from src.bounds.ibp import ibp
from src.bounds.status import neuron_status
from src.domain import LowerSlope
from src.domain import NeuronId
from src.domain import NeuronStatus
from src.model.forward import forward
from src.model.forward import forward_trace
from src.model.forward import predict
from src.model.network import make_layer
from src.model.network import make_network
from src.verification.oracle import exhaustive_oracle
from tests.conftest import TOLERANCE
from tests.conftest import ball_samples
from tests.conftest import radii
from tests.conftest import random_network
from tests.conftest import seeds


@hypothesis.given(seeds, radii)
def test_ibp_contains_every_trace(seed, epsilon):
    net = random_network(seed)
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 2)
    cache = ibp(net, x, epsilon)
    pre, post = forward_trace(net, ball_samples(x, epsilon, 50, seed))
    for number in range(net.depth):
        assert np.all(pre[number] >= cache.lower[number] - TOLERANCE)
        assert np.all(pre[number] <= cache.upper[number] + TOLERANCE)
        assert np.all(post[number] >= cache.post_lower[number] - TOLERANCE)
        assert np.all(post[number] <= cache.post_upper[number] + TOLERANCE)


@hypothesis.given(seeds, radii)
def test_loose_ibp_contains_exact_ibp(seed, epsilon):
    net = random_network(seed)
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 2)
    exact = ibp(net, x, epsilon)
    loose = ibp(net, x, epsilon, loose=True)
    for number in range(net.depth):
        assert np.all(loose.lower[number] <= exact.lower[number] + TOLERANCE)
        assert np.all(loose.upper[number] >= exact.upper[number] - TOLERANCE)


@pytest.mark.parametrize('lower_slope', list(LowerSlope))
@hypothesis.given(seed=seeds, epsilon=radii)
def test_crown_contains_every_output(lower_slope, seed, epsilon):
    net = random_network(seed)
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 2)
    lower, upper, _ = crown_bounds(net, x, epsilon, lower_slope=lower_slope)
    outputs = forward(net, ball_samples(x, epsilon, 50, seed))
    assert np.all(outputs >= lower - TOLERANCE)
    assert np.all(outputs <= upper + TOLERANCE)


@hypothesis.given(seeds, radii)
def test_refined_intermediates_are_sound_and_tighter(seed, epsilon):
    net = random_network(seed)
    x = np.random.default_rng(seed).uniform(0.0, 1.0, 2)
    refined = crown_intermediate(net, x, epsilon)
    interval = ibp(net, x, epsilon)
    pre, _ = forward_trace(net, ball_samples(x, epsilon, 50, seed))
    for number in range(net.depth):
        assert np.all(refined.lower[number] >= interval.lower[number])
        assert np.all(
            refined.upper[number] <= interval.upper[number] + TOLERANCE)
        assert np.all(pre[number] >= refined.lower[number] - TOLERANCE)
        assert np.all(pre[number] <= refined.upper[number] + TOLERANCE)
    spec = np.array([[1.0, -1.0]])
    lower, _, _ = crown_bounds(net, x, epsilon, spec, refine_intermediate=True)
    outputs = forward(net, ball_samples(x, epsilon, 50, seed))
    assert np.all(outputs @ spec.T >= lower - TOLERANCE)


def test_crown_is_exact_on_affine_networks():
    net = make_network([[[1.0, -2.0], [0.5, 0.5]]], [[0.1, -0.2]])
    x = np.array([0.3, 0.6])
    lower, upper, _ = crown_bounds(net, x, 0.1)
    centre = forward(net, x)
    radius = 0.1 * np.array([3.0, 1.0])
    assert np.allclose(lower, centre - radius)
    assert np.allclose(upper, centre + radius)


def test_zero_radius_collapses_bounds():
    net = random_network(5)
    x = np.array([0.2, 0.7])
    cache = ibp(net, x, 0.0)
    assert np.allclose(cache.lower[-1], forward(net, x))
    assert np.allclose(cache.upper[-1], forward(net, x))
    lower, upper, _ = crown_bounds(net, x, 0.0)
    assert np.allclose(lower, forward(net, x))
    assert np.allclose(upper, forward(net, x))


def test_negative_radius():
    with pytest.raises(ValueError):
        ibp(random_network(0), np.zeros(2), -0.1)


def test_splits_clamp_and_detect_infeasibility():
    net = make_network([[[1.0, 0.0], [0.0, 1.0]], [[1.0, 1.0]]],
                       [[-0.5, 2.0], [0.0]])
    x = np.array([0.5, 0.5])
    cache = ibp(net, x, 0.1, {NeuronId(0, 0): 1})
    assert cache.lower[0][0] == 0.0
    assert not cache.infeasible
    assert ibp(net, x, 0.1, {NeuronId(0, 1): -1}).infeasible


def test_relaxation_lines():
    layer = make_layer(np.eye(4), np.zeros(4))
    lower = np.array([-2.0, -1.0, 1.0, -3.0])
    upper = np.array([1.0, 3.0, 2.0, -1.0])
    relaxation = relax(layer, lower, upper)
    assert relaxation.status.tolist() == [
        NeuronStatus.UNSTABLE.value, NeuronStatus.UNSTABLE.value,
        NeuronStatus.ACTIVE.value, NeuronStatus.INACTIVE.value
    ]
    assert np.allclose(relaxation.upper_slope, [1 / 3, 3 / 4, 1.0, 0.0])
    assert np.allclose(relaxation.upper_intercept, [2 / 3, 3 / 4, 0.0, 0.0])
    assert np.allclose(relaxation.lower_slope, [0.0, 1.0, 1.0, 0.0])
    zero = relax(layer, lower, upper, LowerSlope.ZERO)
    assert np.allclose(zero.lower_slope, [0.0, 0.0, 1.0, 0.0])


def test_unstable_ratio():
    net = make_network([[[1.0, 0.0], [0.0, 1.0]], [[1.0, 1.0]]],
                       [[-0.5, 2.0], [0.0]])
    report = neuron_status(net, ibp(net, np.array([0.8, 0.5]), 0.1))
    assert report.unstable_count == 0
    report = neuron_status(net, ibp(net, np.array([0.8, 0.5]), 1.0))
    assert report.unstable_count == 1
    assert report.unr == 50.0


def test_concretization_corner():
    corner = concretization_corner(np.array([2.0, -1.0, 0.0]),
                                   np.array([0.5, 0.5, 0.5]), 0.1)
    assert np.allclose(corner, [0.4, 0.6, 0.5])


@pytest.mark.slow
@pytest.mark.parametrize('epsilon', [0.01, 0.1])
def test_bounds_contain_ten_thousand_samples_and_the_exact_range(epsilon):
    for seed in range(20):
        net = random_network(seed)
        rng = np.random.default_rng(seed)
        for anchor in range(5):
            x = rng.uniform(0.0, 1.0, 2)
            cache = ibp(net, x, epsilon)
            lower, upper, _ = crown_bounds(net, x, epsilon)
            pre, _ = forward_trace(
                net, ball_samples(x, epsilon, 5000, 100 * seed + anchor))
            for number in range(net.depth):
                assert np.all(pre[number] >= cache.lower[number] - TOLERANCE)
                assert np.all(pre[number] <= cache.upper[number] + TOLERANCE)
            assert np.all(pre[-1] >= lower - TOLERANCE)
            assert np.all(pre[-1] <= upper + TOLERANCE)
            label = int(predict(net, x[None, :])[0])
            exact = exhaustive_oracle(net, x, label, epsilon)
            for outer_lower, outer_upper in ((cache.lower[-1],
                                              cache.upper[-1]),
                                             (lower, upper)):
                assert np.all(exact.output_lower >= outer_lower - 1e-6)
                assert np.all(exact.output_upper <= outer_upper + 1e-6)


@pytest.mark.slow
def test_splitting_never_loosens_interval_bounds():
    for seed in range(50):
        net = random_network(seed, (2, 8, 8, 2))
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, 1.0, 2)
        splits = {}
        parent = ibp(net, x, 0.2, splits)
        while True:
            unstable = [
                NeuronId(number, int(index))
                for number in net.hidden_layers
                for index in np.flatnonzero((parent.lower[number] < 0)
                                            & (parent.upper[number] > 0))
            ]
            if not unstable:
                break
            neuron = unstable[int(rng.integers(len(unstable)))]
            splits = {**splits, neuron: int(rng.choice([-1, 1]))}
            child = ibp(net, x, 0.2, splits)
            if child.infeasible:
                break
            for number in range(net.depth):
                assert np.all(
                    child.lower[number] >= parent.lower[number] - TOLERANCE)
                assert np.all(
                    child.upper[number] <= parent.upper[number] + TOLERANCE)
            parent = child
