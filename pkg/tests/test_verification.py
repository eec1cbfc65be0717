import fractions

import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest

from src.bounds.crown import crown_bounds
from src.bounds.ibp import ibp
from src.domain import BabBudget
from src.domain import Certificate
from src.domain import Dataset
from src.domain import LowerSlope
from src.domain import SuiteConfig
from src.domain import Verdict
from src.model.forward import forward
from src.model.forward import predict
from src.model.network import make_network
from src.training.attack import pgd_attack
from src.verification.bab import certify_bab
from src.verification.exceptions import BudgetError
from src.verification.exceptions import OracleSizeError
from src.verification.incomplete import certify_incomplete
from src.verification.lp import margin_matrix
from src.verification.lp import minimize_linear
from src.verification.lp import pattern_maps
from src.verification.lp import rational_lower_bound
from src.verification.lp import uses_exact_arithmetic
from src.verification.oracle import exhaustive_oracle
from src.verification.suite import average_lower_bound
from src.verification.suite import evaluate_suite
from tests.conftest import TOLERANCE
from tests.conftest import ball_samples
from tests.conftest import random_network
from tests.conftest import seeds

GENEROUS = BabBudget(100000, 120.0)
"""Budget large enough to finish the searches on the small networks."""


@pytest.fixture
def linear_net():
    return make_network([[[1.0, -2.0], [0.5, 0.5]]], [[0.0, 0.0]])


def _anchor(seed):
    return np.random.default_rng(seed + 1000).uniform(0.2, 0.8, 2)


def test_margin_matrix():
    assert margin_matrix(1, 3).tolist() == [[-1.0, 1.0, 0.0],
                                            [0.0, 1.0, -1.0]]


def test_linear_program_over_the_ball():
    outcome = minimize_linear(np.array([1.0, -1.0]), 2.0,
                              (np.zeros((0, 2)), np.zeros(0)),
                              np.array([0.5, 0.5]), 0.1)
    assert outcome.optimal
    assert outcome.value == pytest.approx(1.8)
    assert np.allclose(outcome.point, [0.4, 0.6])
    infeasible = minimize_linear(np.array([1.0, 0.0]), 0.0,
                                 (np.array([[1.0, 0.0]]), np.array([0.0])),
                                 np.array([0.5, 0.5]), 0.1)
    assert infeasible.infeasible


def test_rational_bound_holds_without_slack():
    objective = np.array([1.0, 0.0])
    constraints = (np.array([[-1.0, -1.0]]), np.array([-1.1]))
    x = np.array([0.5, 0.5])
    outcome = minimize_linear(objective, 0.0, constraints, x, 0.1, exact=True)
    assert outcome.optimal and outcome.exact
    assert outcome.value == pytest.approx(0.5, abs=1e-9)
    minimum = (fractions.Fraction(1.1) - fractions.Fraction(0.5) -
               fractions.Fraction(0.1))
    assert rational_lower_bound(objective, 0.0, constraints, x, 0.1,
                                np.array([1.0])) == minimum
    assert outcome.value <= float(minimum)


@hypothesis.given(seeds,
                  st.lists(st.floats(min_value=-1.0, max_value=5.0),
                           min_size=3,
                           max_size=3))
def test_any_multipliers_bound_the_region_from_below(seed, multipliers):
    rng = np.random.default_rng(seed)
    matrix = rng.normal(size=(3, 2))
    x = rng.uniform(0.3, 0.7, 2)
    constraints = (matrix, matrix @ x + 0.05)
    objective = rng.normal(size=2)
    bound = rational_lower_bound(objective, 0.5, constraints, x, 0.1,
                                 np.array(multipliers))
    points = ball_samples(x, 0.1, 200, seed)
    inside = points[np.all(points @ matrix.T <= constraints[1], axis=1)]
    assert float(bound) <= np.min(inside @ objective + 0.5) + TOLERANCE
    assert float(bound) <= objective @ x + 0.5 + TOLERANCE


def test_exact_arithmetic_covers_narrow_networks():
    assert uses_exact_arithmetic(random_network(0, (2, 8, 8, 2)))
    assert not uses_exact_arithmetic(random_network(0, (2, 9, 2)))
    assert not uses_exact_arithmetic(random_network(0, (12, 4, 2)))


def test_pattern_maps_reproduce_the_forward_pass():
    net = random_network(30)
    x = np.array([0.3, 0.7])
    cache = ibp(net, x, 0.0)
    active = [cache.lower[layer] > 0 for layer in net.hidden_layers]
    matrix, offset = pattern_maps(net, active)[-1]
    assert np.allclose(matrix @ x + offset, forward(net, x))


def test_oracle_is_exact_on_affine_networks(linear_net):
    result = exhaustive_oracle(linear_net, np.array([0.5, 0.5]), 1, 0.1)
    assert result.verdict is Verdict.VERIFIED
    assert result.min_margin == pytest.approx(0.7)
    assert np.allclose(result.output_lower, [-0.8, 0.4])
    assert np.allclose(result.output_upper, [-0.2, 0.6])
    assert result.feasible_patterns == 1
    assert result.counterexample is None


@pytest.mark.parametrize('seed', range(6))
def test_oracle_range_is_attained_and_sound(seed):
    net = random_network(seed)
    x = _anchor(seed)
    result = exhaustive_oracle(net, x, int(predict(net, x[None, :])[0]), 0.15)
    outputs = forward(net, ball_samples(x, 0.15, 200, seed))
    assert np.all(outputs >= result.output_lower - 1e-6)
    assert np.all(outputs <= result.output_upper + 1e-6)
    cache = ibp(net, x, 0.15)
    assert np.all(result.output_lower >= cache.lower[-1] - 1e-6)
    assert np.all(result.output_upper <= cache.upper[-1] + 1e-6)


def test_oracle_size_limit():
    net = random_network(31, (2, 16, 2), bias_scale=0.0)
    with pytest.raises(OracleSizeError):
        exhaustive_oracle(net, np.zeros(2), 0, 0.5, max_unstable=2)


def test_oracle_counterexample_is_misclassified(linear_net):
    x = np.array([0.5, 0.5])
    result = exhaustive_oracle(linear_net, x, 1, 0.5)
    assert result.verdict is Verdict.FALSIFIED
    assert result.min_margin == pytest.approx(-0.5, abs=1e-9)
    assert np.all(np.abs(result.counterexample - x) <= 0.5 + 1e-6)
    assert predict(linear_net, result.counterexample[None, :])[0] != 1


def test_oracle_tie_without_misclassification_is_unknown():
    net = make_network([[[1.0, 0.0], [0.0, 1.0]]], [[0.0, 0.0]])
    result = exhaustive_oracle(net, np.array([0.75, 0.5]), 0, 0.125)
    assert result.min_margin == 0.0
    assert result.verdict is Verdict.UNKNOWN
    assert result.counterexample is None


@pytest.mark.parametrize('seed', range(10))
def test_oracle_falsification_comes_with_a_misclassified_point(seed):
    net = random_network(seed)
    x = _anchor(seed)
    label = int(predict(net, x[None, :])[0])
    result = exhaustive_oracle(net, x, label, 0.3)
    if result.verdict is Verdict.FALSIFIED:
        point = result.counterexample
        assert np.all(np.abs(point - x) <= 0.3 + 1e-6)
        assert predict(net, point[None, :])[0] != label
    else:
        assert result.counterexample is None


def test_incomplete_check_matches_closed_form(linear_net):
    x = np.array([0.5, 0.5])
    certificate = certify_incomplete(linear_net, x, 1, 0.1)
    assert certificate.verdict is Verdict.VERIFIED
    assert certificate.margin_lower == pytest.approx([0.7])
    certificate = certify_incomplete(linear_net, x, 1, 0.5)
    assert certificate.verdict is Verdict.UNKNOWN
    assert certificate.margin_lower == pytest.approx([1.0 - 0.5 * 3.0])


def test_misclassified_anchor_is_its_own_counterexample(linear_net):
    x = np.array([0.5, 0.5])
    for certificate in (certify_incomplete(linear_net, x, 0, 0.1),
                        certify_bab(linear_net, x, 0, 0.1)):
        assert certificate.verdict is Verdict.FALSIFIED
        assert certificate.counterexample == x.tolist()


@pytest.mark.parametrize('seed', range(10))
def test_branch_and_bound_agrees_with_the_oracle(seed):
    net = random_network(seed)
    x = _anchor(seed)
    label = int(predict(net, x[None, :])[0])
    epsilon = 0.15
    oracle = exhaustive_oracle(net, x, label, epsilon)
    certificate = certify_bab(net, x, label, epsilon, GENEROUS)
    incomplete = certify_incomplete(net, x, label, epsilon)
    if incomplete.verdict is Verdict.VERIFIED:
        assert oracle.verdict is Verdict.VERIFIED
    if abs(oracle.min_margin) < 1e-4:
        return
    assert certificate.verdict is oracle.verdict
    if certificate.verdict is Verdict.VERIFIED:
        assert min(certificate.margin_lower) <= oracle.min_margin + 1e-6
    else:
        point = np.array(certificate.counterexample)
        assert np.all(np.abs(point - x) <= epsilon + 1e-6)
        assert predict(net, point[None, :])[0] != label


@pytest.mark.parametrize('lower_slope', list(LowerSlope))
def test_branch_and_bound_options_keep_the_verdict(lower_slope):
    net = random_network(3)
    x = _anchor(3)
    label = int(predict(net, x[None, :])[0])
    oracle = exhaustive_oracle(net, x, label, 0.1)
    refined = certify_bab(net, x, label, 0.1, GENEROUS, lower_slope,
                          refine_intermediate=True)
    plain = certify_bab(net, x, label, 0.1, GENEROUS, lower_slope)
    if abs(oracle.min_margin) > 1e-4:
        assert refined.verdict is oracle.verdict
        assert plain.verdict is oracle.verdict


def test_budget_must_be_positive(linear_net):
    with pytest.raises(BudgetError):
        certify_bab(linear_net, np.array([0.5, 0.5]), 1, 0.1,
                    BabBudget(0, 1.0))


def test_exhausted_budget_is_unknown():
    net = random_network(4)
    x = _anchor(4)
    label = int(predict(net, x[None, :])[0])
    certificate = certify_bab(net, x, label, 0.1, BabBudget(100, 1e-9))
    assert certificate.verdict is Verdict.UNKNOWN
    assert certificate.branches == 0


def _dataset(seed, count=20):
    net = random_network(seed)
    inputs = np.random.default_rng(seed).uniform(0.0, 1.0, (count, 2))
    labels = predict(net, inputs)
    labels[:3] = 1 - labels[:3]
    return net, Dataset(inputs, labels, 'random', 'test', 2)


def test_zero_radius_verifies_every_correct_sample():
    net, dataset = _dataset(40)
    metrics, records = evaluate_suite(net, dataset, 0.0,
                                      SuiteConfig(threads=2))
    assert metrics.n == 20
    assert metrics.sa == pytest.approx(85.0)
    assert metrics.va == metrics.ra == metrics.sa
    assert metrics.unr == 0.0
    assert all(record.certificate is None for record in records[:3])


def test_suite_accuracies_are_ordered():
    net, dataset = _dataset(41)
    metrics, records = evaluate_suite(net, dataset, 0.1,
                                      SuiteConfig(budget=GENEROUS, threads=3))
    assert metrics.va <= metrics.ra <= metrics.sa
    assert [record.index for record in records] == list(range(20))
    for record in records:
        assert record.robust <= record.correct
        assert (record.certificate is not None) == record.robust


def test_suite_reuses_known_certificates():
    net, dataset = _dataset(42)
    known = Certificate(Verdict.VERIFIED, [1.0], 1, 0.0)
    robust = 5
    _, records = evaluate_suite(net, dataset, 0.0, SuiteConfig(threads=1),
                                {robust: known})
    assert records[robust].certificate is known


def test_empty_suite():
    net = random_network(0)
    metrics, records = evaluate_suite(
        net, Dataset(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), 'empty',
                     'test', 2), 0.1)
    assert metrics.n == 0
    assert records == []


def test_suite_budget_must_be_positive():
    net, dataset = _dataset(43)
    with pytest.raises(BudgetError):
        evaluate_suite(net, dataset, 0.1,
                       SuiteConfig(budget=BabBudget(10, 0.0)))


def test_incomplete_margins_are_sound():
    net = random_network(5)
    x = _anchor(5)
    label = int(predict(net, x[None, :])[0])
    certificate = certify_incomplete(net, x, label, 0.05)
    outputs = forward(net, ball_samples(x, 0.05, 100, 5))
    margins = outputs[:, [label]] - np.delete(outputs, label, axis=1)
    assert np.all(margins >= np.array(certificate.margin_lower) - TOLERANCE)


def test_average_lower_bound_skips_certificates_without_a_bound():
    certificates = [
        Certificate(Verdict.VERIFIED, [0.5, 0.25]),
        Certificate(Verdict.UNKNOWN, [-1.0]),
        Certificate(Verdict.VERIFIED, [float('inf')]),
        Certificate(Verdict.UNKNOWN, [])
    ]
    assert average_lower_bound(certificates) == pytest.approx(-0.375)
    assert average_lower_bound([]) == 0.0


def test_suite_reports_the_average_lower_bound():
    net, dataset = _dataset(44)
    metrics, records = evaluate_suite(net, dataset, 0.05,
                                      SuiteConfig(budget=GENEROUS, threads=2))
    certificates = [
        record.certificate for record in records
        if record.certificate is not None
    ]
    assert metrics.avg_lb == pytest.approx(
        average_lower_bound(certificates))


@pytest.mark.slow
def test_branch_and_bound_matches_the_oracle_on_two_hundred_instances():
    decided = 0
    for seed in range(200):
        net = random_network(seed)
        x = _anchor(seed)
        label = int(predict(net, x[None, :])[0])
        epsilon = (0.05, 0.15, 0.3)[seed % 3]
        oracle = exhaustive_oracle(net, x, label, epsilon)
        certificate = certify_bab(net, x, label, epsilon, GENEROUS)
        if (Verdict.UNKNOWN in (oracle.verdict, certificate.verdict)
                or abs(oracle.min_margin) < 1e-4):
            continue
        decided += 1
        assert certificate.verdict is oracle.verdict
        if certificate.verdict is not Verdict.VERIFIED:
            continue
        attacked = pgd_attack(net,
                              x,
                              label,
                              epsilon,
                              20,
                              epsilon / 4,
                              10,
                              seed,
                              domain=None)
        assert predict(net, attacked[None, :])[0] == label
        samples = ball_samples(x, epsilon, 50000, seed)
        assert np.all(predict(net, samples) == label)
    assert decided > 0


@pytest.mark.slow
def test_larger_budget_keeps_every_decided_verdict():
    for seed in range(30):
        net = random_network(seed, (2, 6, 6, 2))
        x = _anchor(seed)
        label = int(predict(net, x[None, :])[0])
        verdicts = [
            certify_bab(net, x, label, 0.15, BabBudget(branches,
                                                       1e6)).verdict
            for branches in (1, 2, 4, 8, 16, 32, 64, 128)
        ]
        for smaller, larger in zip(verdicts[:-1], verdicts[1:]):
            if smaller is not Verdict.UNKNOWN:
                assert larger is smaller


@pytest.mark.slow
def test_verified_margins_never_fall_below_the_root_bounds():
    for seed in range(50):
        net = random_network(seed)
        x = _anchor(seed)
        label = int(predict(net, x[None, :])[0])
        certificate = certify_bab(net, x, label, 0.15, GENEROUS)
        if certificate.verdict is not Verdict.VERIFIED:
            continue
        root, _, _ = crown_bounds(net, x, 0.15, margin_matrix(label, 2))
        assert np.all(
            np.array(certificate.margin_lower) >= root - TOLERANCE)
