"""Module for exact analysis of a network on one activation region.

Once the sign of every ReLU is fixed, the network is affine. The region
of the ball where the signs hold is a polytope, over which any margin is
minimized with a linear program.

On narrow networks the minimum found in floating point is replaced by a
bound computed in rational arithmetic from the constraint multipliers of
the solver, which holds on the region without any feasibility slack.

"""
import fractions
import logging
import typing

import numpy as np
import scipy.optimize

from src.domain import ActivationKind
from src.domain import Network
from src.domain import NeuronId

_logger = logging.getLogger(__name__)
"""Logger for this module."""

LP_SLACK = 1e-7
"""Feasibility slack added to every region constraint."""

EXACT_MAX_WIDTH = 8
"""Widest layer of a network whose linear programs are decided in
rationals."""

AffineMap = tuple[np.ndarray, np.ndarray]
"""Matrix and offset of an affine function of the input."""


class LpOutcome(typing.NamedTuple):
    """Result of one linear program.

    """
    status: str
    value: float = float('nan')
    point: typing.Optional[np.ndarray] = None
    exact: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == 'optimal'

    @property
    def infeasible(self) -> bool:
        return self.status == 'infeasible'


def uses_exact_arithmetic(net: Network) -> bool:
    """Check whether no layer of a network, input included, is wider than
    EXACT_MAX_WIDTH.

    """
    widths = [net.input_dim] + [layer.output_dim for layer in net.layers]
    return max(widths) <= EXACT_MAX_WIDTH


def pattern_maps(net: Network, active: list[np.ndarray]) -> list[AffineMap]:
    """Get the pre-activation maps of every layer under fixed ReLU signs.

    Parameters
    ----------
    net : Network
        The network.
    active : list of np.ndarray
        For every hidden layer, the boolean mask of active ReLUs; entries
        of other neurons are ignored.

    Returns
    -------
    list of AffineMap
        The map x -> z of every layer; the last one gives the logits.

    """
    matrix = np.eye(net.input_dim)
    offset = np.zeros(net.input_dim)
    maps = []
    for number, layer in enumerate(net.layers):
        pre_matrix = layer.weights @ matrix
        pre_offset = layer.weights @ offset + layer.bias
        maps.append((pre_matrix, pre_offset))
        if number == net.depth - 1:
            break
        grafted = layer.mask(ActivationKind.GRAFTED_LINEAR)
        slope = np.where(
            layer.mask(ActivationKind.RELU), active[number].astype(np.float64),
            np.where(grafted, layer.slopes, 1.0))
        matrix = slope[:, None] * pre_matrix
        offset = slope * pre_offset + np.where(grafted, layer.intercepts,
                                               0.0)
    return maps


def region_constraints(
        maps: list[AffineMap],
        signs: dict[NeuronId, int]) -> tuple[np.ndarray, np.ndarray]:
    """Get the half-spaces A x <= b fixing the signs of some neurons.

    A positive sign asks for z >= 0 and a negative sign for z <= 0.

    """
    rows = []
    limits = []
    for neuron, sign in sorted(signs.items()):
        matrix, offset = maps[neuron.layer]
        if sign > 0:
            rows.append(-matrix[neuron.index])
            limits.append(offset[neuron.index])
        else:
            rows.append(matrix[neuron.index])
            limits.append(-offset[neuron.index])
    if not rows:
        return np.zeros((0, maps[0][0].shape[1])), np.zeros(0)
    return np.array(rows), np.array(limits)


def rational_lower_bound(objective: np.ndarray, constant: float,
                         constraints: tuple[np.ndarray, np.ndarray],
                         x: np.ndarray, epsilon: float,
                         multipliers: np.ndarray) -> fractions.Fraction:
    """Bound c x + d from below over the ball intersected with the
    half-spaces A x <= b, in rational arithmetic.

    For multipliers y >= 0 the minimum of (c + A^T y) x - y b + d over the
    ball is a lower bound; the multipliers of an optimal solution make it
    the minimum itself. Negative multipliers are replaced by zero.

    Parameters
    ----------
    objective : np.ndarray
        The coefficients c.
    constant : float
        The constant d.
    constraints : tuple of np.ndarray
        The half-spaces A x <= b, without slack.
    x : np.ndarray
        The center of the ball.
    epsilon : float
        The radius of the ball.
    multipliers : np.ndarray
        The multiplier y of every half-space.

    Returns
    -------
    fractions.Fraction
        The bound; every float input is taken at its exact binary value.

    """
    matrix, limits = constraints
    coefficients = [fractions.Fraction(float(value)) for value in objective]
    bound = fractions.Fraction(float(constant))
    for row, limit, multiplier in zip(matrix, limits, multipliers):
        weight = max(fractions.Fraction(float(multiplier)), 0)
        if weight == 0:
            continue
        bound -= weight * fractions.Fraction(float(limit))
        coefficients = [
            coefficient + weight * fractions.Fraction(float(value))
            for coefficient, value in zip(coefficients, row)
        ]
    radius = fractions.Fraction(float(epsilon))
    for coefficient, center in zip(coefficients, x):
        bound += (coefficient * fractions.Fraction(float(center)) -
                  abs(coefficient) * radius)
    return bound


def minimize_linear(objective: np.ndarray,
                    constant: float,
                    constraints: tuple[np.ndarray, np.ndarray],
                    x: np.ndarray,
                    epsilon: float,
                    exact: bool = False) -> LpOutcome:
    """Minimize c x + d over the ball intersected with half-spaces.

    Parameters
    ----------
    objective : np.ndarray
        The coefficients c.
    constant : float
        The constant d.
    constraints : tuple of np.ndarray
        The half-spaces A x <= b. The solver loosens them by LP_SLACK, so
        an infeasible outcome holds for the region itself.
    x : np.ndarray
        The center of the ball.
    epsilon : float
        The radius of the ball.
    exact : bool
        Whether the minimum is replaced by its rational lower bound from
        the multipliers of the solver, which needs no slack.

    Returns
    -------
    LpOutcome
        The status ("optimal", "infeasible" or "failed"), the minimum and
        its point.

    """
    matrix, limits = constraints
    bounds = list(zip(x - epsilon, x + epsilon))
    result = scipy.optimize.linprog(
        objective,
        A_ub=matrix if len(limits) else None,
        b_ub=limits + LP_SLACK if len(limits) else None,
        bounds=bounds,
        method='highs')
    if result.status == 2:
        return LpOutcome('infeasible')
    if result.status != 0:
        _logger.warning(f'Linear program failed: {result.message}')
        return LpOutcome('failed')
    value = float(result.fun) + constant
    if not exact:
        return LpOutcome('optimal', value, np.asarray(result.x))
    multipliers = (-np.asarray(result.ineqlin.marginals)
                   if len(limits) else np.zeros(0))
    bound = rational_lower_bound(objective, constant, constraints, x,
                                 epsilon, multipliers)
    if value - float(bound) > LP_SLACK:
        _logger.debug(f'Rational bound {float(bound)} is loose against '
                      f'the solver minimum {value}')
    return LpOutcome('optimal', float(bound), np.asarray(result.x), True)


def margin_matrix(label: int, classes: int) -> np.ndarray:
    """Get the rows e_label - e_r of every rival class r.

    """
    rows = []
    for rival in range(classes):
        if rival != label:
            row = np.zeros(classes)
            row[label] = 1.0
            row[rival] = -1.0
            rows.append(row)
    return np.array(rows).reshape(len(rows), classes)
