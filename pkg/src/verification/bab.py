"""Module for complete certification with branch and bound.

The ball is split depth-first on the signs of unstable ReLUs. Each
sub-domain is bounded with backward relaxation bounds, searched for a
counterexample and, once no unstable neuron is left, decided exactly with
linear programs.

"""
import dataclasses
import logging
import time
import typing

import numpy as np

from src.bounds.crown import concretization_corner
from src.bounds.crown import concretize
from src.bounds.crown import crown_backward
from src.bounds.crown import crown_intermediate
from src.bounds.ibp import Splits
from src.bounds.ibp import ibp
from src.domain import ActivationKind
from src.domain import BabBudget
from src.domain import BoundsCache
from src.domain import Certificate
from src.domain import LowerSlope
from src.domain import Network
from src.domain import NeuronId
from src.domain import PgdConfig
from src.domain import Verdict
from src.seeding import substream
from src.training.attack import pgd_attack_batch
from src.verification.exceptions import BudgetError
from src.verification.incomplete import misclassifies
from src.verification.lp import margin_matrix
from src.verification.lp import minimize_linear
from src.verification.lp import pattern_maps
from src.verification.lp import region_constraints
from src.verification.lp import uses_exact_arithmetic

_logger = logging.getLogger(__name__)
"""Logger for this module."""

_LEAF_ATTACK_STEPS = 5
"""Number of attack steps spent on every undecided sub-domain."""


@dataclasses.dataclass
class _Domain:
    splits: Splits
    parent_lower: np.ndarray


@dataclasses.dataclass
class _Bounding:
    cache: BoundsCache
    lower: np.ndarray
    lower_a: np.ndarray
    coefficients: dict[int, np.ndarray]


class _SearchOutcome(typing.NamedTuple):
    verdict: Verdict
    counterexample: typing.Optional[np.ndarray] = None


def _bound_domain(net: Network, x: np.ndarray, epsilon: float,
                  spec: np.ndarray, domain: _Domain,
                  lower_slope: LowerSlope,
                  refine: bool) -> typing.Optional[_Bounding]:
    if refine:
        cache = crown_intermediate(net, x, epsilon, domain.splits,
                                   lower_slope)
    else:
        cache = ibp(net, x, epsilon, domain.splits)
    if cache.infeasible:
        return None
    coefficients: dict[int, np.ndarray] = {}
    bounds = crown_backward(net,
                            x,
                            epsilon,
                            cache,
                            spec,
                            lower_slope=lower_slope,
                            coefficients=coefficients)
    lower, _ = concretize(bounds, x, epsilon)
    # never looser than the parent domain
    lower = np.maximum(lower, domain.parent_lower)
    return _Bounding(cache, lower, bounds.lower_a, coefficients)


def _unstable(net: Network, cache: BoundsCache) -> list[NeuronId]:
    neurons = []
    for number in net.hidden_layers:
        relu = net.layers[number].mask(ActivationKind.RELU)
        crossing = relu & (cache.lower[number] < 0) & (cache.upper[number] > 0)
        neurons.extend(
            NeuronId(number, int(index)) for index in np.flatnonzero(crossing))
    return neurons


def _branching_neuron(bounding: _Bounding,
                      candidates: list[NeuronId]) -> NeuronId:
    """Pick the unstable neuron with the widest interval weighted by its
    coefficients into the unverified margins; ties go to the lowest
    (layer, index).

    """
    open_rows = bounding.lower <= 0
    best = candidates[0]
    best_score = -np.inf
    for neuron in candidates:
        weights = np.abs(
            bounding.coefficients[neuron.layer][open_rows, neuron.index])
        width = (bounding.cache.upper[neuron.layer][neuron.index] -
                 bounding.cache.lower[neuron.layer][neuron.index])
        score = float(np.max(weights, initial=0.0)) * width
        if score > best_score:
            best = neuron
            best_score = score
    return best


def _decide_leaf(net: Network, x: np.ndarray, label: int, epsilon: float,
                 spec: np.ndarray,
                 bounding: _Bounding) -> tuple[_SearchOutcome, np.ndarray]:
    """Decide a sub-domain without unstable ReLUs with linear programs.

    Every ReLU sign is constrained, so the region is exactly the part of
    the ball where the network follows one affine map.

    """
    active = []
    signs = {}
    for number in net.hidden_layers:
        relu = net.layers[number].mask(ActivationKind.RELU)
        layer_active = bounding.cache.lower[number] >= 0
        active.append(layer_active)
        for index in np.flatnonzero(relu):
            signs[NeuronId(number, int(index))] = (1 if layer_active[index]
                                                   else -1)
    maps = pattern_maps(net, active)
    constraints = region_constraints(maps, signs)
    matrix, offset = maps[-1]
    lower = bounding.lower.copy()
    undecided = False
    for row in np.flatnonzero(lower <= 0):
        outcome = minimize_linear(spec[row] @ matrix,
                                  float(spec[row] @ offset), constraints, x,
                                  epsilon, uses_exact_arithmetic(net))
        if outcome.infeasible:
            empty = np.full_like(lower, np.inf)
            return _SearchOutcome(Verdict.VERIFIED), empty
        if not outcome.optimal:
            undecided = True
            continue
        lower[row] = max(lower[row], outcome.value)
        if outcome.value <= 0:
            if misclassifies(net, outcome.point, label):
                return (_SearchOutcome(Verdict.FALSIFIED, outcome.point),
                        lower)
            undecided = True
    if undecided:
        return _SearchOutcome(Verdict.UNKNOWN), lower
    return _SearchOutcome(Verdict.VERIFIED), lower


def _find_counterexample(net: Network, x: np.ndarray, label: int,
                         epsilon: float, bounding: _Bounding,
                         rng: np.random.Generator
                         ) -> typing.Optional[np.ndarray]:
    worst = int(np.argmin(bounding.lower))
    corner = concretization_corner(bounding.lower_a[worst], x, epsilon)
    if misclassifies(net, corner, label):
        return corner
    config = PgdConfig(_LEAF_ATTACK_STEPS, epsilon / 4, 1)
    candidate = pgd_attack_batch(net,
                                 x[None, :],
                                 np.array([label]),
                                 epsilon,
                                 config,
                                 rng,
                                 domain=None,
                                 start=corner[None, :])[0]
    if misclassifies(net, candidate, label):
        return candidate
    return None


def certify_bab(net: Network,
                x: np.ndarray,
                label: int,
                epsilon: float,
                budget: typing.Optional[BabBudget] = None,
                lower_slope: LowerSlope = LowerSlope.ADAPTIVE,
                rng: typing.Optional[np.random.Generator] = None,
                refine_intermediate: bool = False) -> Certificate:
    """Certify a sample with depth-first branch and bound.

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        The anchor input.
    label : int
        The true label.
    epsilon : float
        The radius of the ball.
    budget : BabBudget, optional
        The maximum number of bounded sub-domains and of seconds.
    lower_slope : LowerSlope
        The choice of the lower line of unstable ReLUs.
    rng : np.random.Generator, optional
        The generator of the counterexample search.
    refine_intermediate : bool
        Whether intermediate bounds come from backward bounds instead of
        interval bounds.

    Returns
    -------
    Certificate
        Verified when every sub-domain is verified; falsified with the
        first counterexample found; unknown when the budget runs out.
        The margin bounds are the worst bounds over all leaves of a
        finished search and the root bounds otherwise.

    Raises
    ------
    BudgetError
        If a budget entry is not positive.

    """
    budget = budget if budget is not None else BabBudget()
    if budget.max_branches <= 0 or budget.max_seconds <= 0:
        raise BudgetError('the branch and bound budget must be positive')
    start = time.perf_counter()
    x = np.asarray(x, dtype=np.float64)
    if misclassifies(net, x, label):
        return Certificate(Verdict.FALSIFIED, [],
                           time_sec=time.perf_counter() - start,
                           counterexample=x.tolist())
    rng = rng if rng is not None else substream(0, 'bab')
    spec = margin_matrix(label, net.output_dim)
    stack = [_Domain({}, np.full(len(spec), -np.inf))]
    root_lower: typing.Optional[np.ndarray] = None
    leaf_lower = np.full(len(spec), np.inf)
    branches = 0
    undecided = False
    outcome = _SearchOutcome(Verdict.VERIFIED)
    while stack:
        if (branches >= budget.max_branches
                or time.perf_counter() - start > budget.max_seconds):
            _logger.debug(f'Branch and bound budget exhausted after '
                          f'{branches} branches')
            undecided = True
            break
        domain = stack.pop()
        branches += 1
        bounding = _bound_domain(net, x, epsilon, spec, domain, lower_slope,
                                 refine_intermediate)
        if bounding is None:
            continue
        if root_lower is None:
            root_lower = bounding.lower
        if np.all(bounding.lower > 0):
            leaf_lower = np.minimum(leaf_lower, bounding.lower)
            continue
        counterexample = _find_counterexample(net, x, label, epsilon,
                                              bounding, rng)
        if counterexample is not None:
            outcome = _SearchOutcome(Verdict.FALSIFIED, counterexample)
            break
        candidates = _unstable(net, bounding.cache)
        if not candidates:
            leaf, lower = _decide_leaf(net, x, label, epsilon, spec,
                                       bounding)
            leaf_lower = np.minimum(leaf_lower, lower)
            if leaf.verdict is Verdict.FALSIFIED:
                outcome = leaf
                break
            undecided = undecided or leaf.verdict is Verdict.UNKNOWN
            continue
        neuron = _branching_neuron(bounding, candidates)
        for sign in (-1, 1):
            splits = dict(domain.splits)
            splits[neuron] = sign
            stack.append(_Domain(splits, bounding.lower))
    elapsed = time.perf_counter() - start
    if root_lower is None:
        root_lower = leaf_lower
    if outcome.verdict is Verdict.FALSIFIED:
        point = np.asarray(outcome.counterexample).tolist()
        return Certificate(Verdict.FALSIFIED, root_lower.tolist(), branches,
                           elapsed, point)
    if undecided:
        return Certificate(Verdict.UNKNOWN, root_lower.tolist(), branches,
                           elapsed)
    return Certificate(Verdict.VERIFIED, leaf_lower.tolist(), branches,
                       elapsed)
