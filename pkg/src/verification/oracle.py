"""Module for the exhaustive activation-pattern oracle.

Every sign pattern of the neurons left unstable by interval bounds is
enumerated; on each feasible pattern the network is affine and its exact
output range and margins follow from linear programs.

"""
import itertools
import logging

import numpy as np

from src.bounds.ibp import ibp
from src.bounds.status import layer_status
from src.domain import Network
from src.domain import NeuronId
from src.domain import NeuronStatus
from src.domain import OracleResult
from src.domain import Verdict
from src.verification.exceptions import OracleSizeError
from src.verification.exceptions import VerificationError
from src.verification.incomplete import misclassifies
from src.verification.lp import margin_matrix
from src.verification.lp import minimize_linear
from src.verification.lp import pattern_maps
from src.verification.lp import region_constraints
from src.verification.lp import uses_exact_arithmetic

_logger = logging.getLogger(__name__)
"""Logger for this module."""

DEFAULT_MAX_UNSTABLE = 14
"""Largest number of unstable neurons the oracle enumerates."""


def exhaustive_oracle(net: Network,
                      x: np.ndarray,
                      label: int,
                      epsilon: float,
                      max_unstable: int = DEFAULT_MAX_UNSTABLE
                      ) -> OracleResult:
    """Get the exact verdict and output range over the ball around x.

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
    max_unstable : int
        The largest number of unstable neurons to enumerate.

    Returns
    -------
    OracleResult
        The verdict, the minimum margin, the exact range of every logit
        and the number of feasible patterns. The verdict is verified when
        every margin stays positive and falsified when a point of the ball
        is misclassified by the network; a nonpositive minimum attained
        only at correctly classified points (a tie) is unknown. Networks
        no wider than EXACT_MAX_WIDTH get rational bounds.

    Raises
    ------
    OracleSizeError
        If more than max_unstable neurons are unstable.
    VerificationError
        If a linear program fails.

    """
    x = np.asarray(x, dtype=np.float64)
    cache = ibp(net, x, epsilon)
    base_active = []
    unstable = []
    for number in net.hidden_layers:
        status = layer_status(net.layers[number].kinds, cache.lower[number],
                              cache.upper[number])
        base_active.append(status == NeuronStatus.ACTIVE.value)
        unstable.extend(
            NeuronId(number, int(index))
            for index in np.flatnonzero(status == NeuronStatus.UNSTABLE.value))
    if len(unstable) > max_unstable:
        raise OracleSizeError(f'{len(unstable)} unstable neurons exceed the '
                              f'oracle limit of {max_unstable}')
    exact = uses_exact_arithmetic(net)
    margins = margin_matrix(label, net.output_dim)
    output_lower = np.full(net.output_dim, np.inf)
    output_upper = np.full(net.output_dim, -np.inf)
    min_margin = np.inf
    counterexample = None
    feasible = 0
    for pattern in itertools.product((-1, 1), repeat=len(unstable)):
        signs = dict(zip(unstable, pattern))
        active = [mask.copy() for mask in base_active]
        for neuron, sign in signs.items():
            active[neuron.layer][neuron.index] = sign > 0
        maps = pattern_maps(net, active)
        constraints = region_constraints(maps, signs)
        matrix, offset = maps[-1]
        outcomes = []
        for output in range(net.output_dim):
            low = minimize_linear(matrix[output], offset[output], constraints,
                                  x, epsilon, exact)
            if low.infeasible:
                break
            high = minimize_linear(-matrix[output], -offset[output],
                                   constraints, x, epsilon, exact)
            outcomes.extend([low, high])
            if not (low.optimal and high.optimal):
                raise VerificationError('a linear program of the oracle '
                                        'failed')
            output_lower[output] = min(output_lower[output], low.value)
            output_upper[output] = max(output_upper[output], -high.value)
        if not outcomes:
            continue
        feasible += 1
        for row in margins:
            outcome = minimize_linear(row @ matrix, float(row @ offset),
                                      constraints, x, epsilon, exact)
            if not outcome.optimal:
                raise VerificationError('a linear program of the oracle '
                                        'failed')
            min_margin = min(min_margin, outcome.value)
            if (counterexample is None and outcome.value <= 0
                    and misclassifies(net, outcome.point, label)):
                counterexample = outcome.point
    if min_margin > 0:
        verdict = Verdict.VERIFIED
    elif counterexample is not None:
        verdict = Verdict.FALSIFIED
    else:
        verdict = Verdict.UNKNOWN
        _logger.info(f'Oracle margin {min_margin} is not positive but no '
                     f'misclassified point was found')
    _logger.debug(f'Oracle enumerated {2**len(unstable)} patterns, '
                  f'{feasible} feasible')
    return OracleResult(verdict, float(min_margin), output_lower,
                        output_upper, feasible, counterexample)
