"""Module for backward linear relaxation bounds.

Starting from a linear expression of one layer's output, the expression
is substituted backward through every activation (replaced by one of its
two relaxation lines) and every affine map, until it is linear in the
input.

"""
import typing

import numpy as np

from src.bounds.ibp import Splits
from src.bounds.ibp import ibp
from src.bounds.ibp import interval_activate
from src.domain import ActivationKind
from src.domain import BoundsCache
from src.domain import Layer
from src.domain import LinearBounds
from src.domain import LowerSlope
from src.domain import Network
from src.domain import NeuronStatus
from src.domain import ReluRelaxation

_INTERSECTION_TOLERANCE = 1e-9
"""Crossing of intersected bounds tolerated as rounding noise."""


def relax(layer: Layer,
          lower: np.ndarray,
          upper: np.ndarray,
          lower_slope: LowerSlope = LowerSlope.ADAPTIVE) -> ReluRelaxation:
    """Get the linear relaxation lines of the activations of a layer.

    Parameters
    ----------
    layer : Layer
        The layer.
    lower : np.ndarray
        The pre-activation lower bounds.
    upper : np.ndarray
        The pre-activation upper bounds.
    lower_slope : LowerSlope
        The choice of the lower line of unstable ReLUs.

    Returns
    -------
    ReluRelaxation
        The per-neuron lines. Active, Identity and grafted neurons get
        their exact line; inactive ReLUs the zero line. The upper line of
        an unstable ReLU passes through (lb, 0) and (ub, ub).

    """
    relu = layer.mask(ActivationKind.RELU)
    grafted = layer.mask(ActivationKind.GRAFTED_LINEAR)
    active = relu & (lower >= 0)
    inactive = relu & (upper <= 0)
    unstable = relu & ~active & ~inactive
    status = np.full(layer.output_dim, NeuronStatus.LINEAR.value)
    status[active] = NeuronStatus.ACTIVE.value
    status[inactive] = NeuronStatus.INACTIVE.value
    status[unstable] = NeuronStatus.UNSTABLE.value

    slope = np.where(grafted, layer.slopes, 1.0)
    intercept = np.where(grafted, layer.intercepts, 0.0)
    slope = np.where(inactive, 0.0, slope)
    width = np.where(unstable, upper - lower, 1.0)
    upper_slope = np.where(unstable, upper / width, slope)
    upper_intercept = np.where(unstable, -upper_slope * lower, intercept)
    if lower_slope is LowerSlope.ADAPTIVE:
        unstable_lower = np.where(np.abs(lower) > upper, 0.0, 1.0)
    elif lower_slope is LowerSlope.ZERO:
        unstable_lower = np.zeros(layer.output_dim)
    else:
        unstable_lower = np.ones(layer.output_dim)
    return ReluRelaxation(upper_slope, upper_intercept,
                          np.where(unstable, unstable_lower, slope),
                          np.where(unstable, 0.0, intercept), status)


def _substitute(coefficients: np.ndarray, under: np.ndarray,
                over: np.ndarray) -> np.ndarray:
    # positive coefficients take the first line, negative the second
    return (np.maximum(coefficients, 0.0) * under +
            np.minimum(coefficients, 0.0) * over)


def crown_backward(
    net: Network,
    x: np.ndarray,
    epsilon: float,
    intermediate: BoundsCache,
    spec_matrix: typing.Optional[np.ndarray] = None,
    layer: typing.Optional[int] = None,
    lower_slope: LowerSlope = LowerSlope.ADAPTIVE,
    coefficients: typing.Optional[dict[int, np.ndarray]] = None
) -> LinearBounds:
    """Compute linear bounds of C z, where z is the pre-activation output
    of one layer.

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        The anchor input.
    epsilon : float
        The radius of the box.
    intermediate : BoundsCache
        Pre-activation bounds of every layer below the target layer.
    spec_matrix : np.ndarray, optional
        The matrix C; the identity by default.
    layer : int, optional
        The target layer; the output layer by default.
    lower_slope : LowerSlope
        The choice of the lower line of unstable ReLUs.
    coefficients : dict, optional
        Filled with the coefficients of the lower bound with respect to
        the post-activation output of every layer below the target.

    Returns
    -------
    LinearBounds
        Matrices and offsets A_L, b_L, A_U, b_U over the input.

    """
    target = net.depth - 1 if layer is None else layer
    top = net.layers[target]
    if spec_matrix is None:
        spec_matrix = np.eye(top.output_dim)
    lower_a = spec_matrix @ top.weights
    upper_a = lower_a.copy()
    lower_b = spec_matrix @ top.bias
    upper_b = lower_b.copy()
    for number in range(target - 1, -1, -1):
        current = net.layers[number]
        if coefficients is not None:
            coefficients[number] = lower_a.copy()
        lines = relax(current, intermediate.lower[number],
                      intermediate.upper[number], lower_slope)
        lower_b = lower_b + _substitute(lower_a, lines.lower_intercept,
                                        lines.upper_intercept).sum(axis=1)
        upper_b = upper_b + _substitute(upper_a, lines.upper_intercept,
                                        lines.lower_intercept).sum(axis=1)
        lower_a = _substitute(lower_a, lines.lower_slope, lines.upper_slope)
        upper_a = _substitute(upper_a, lines.upper_slope, lines.lower_slope)
        lower_b = lower_b + lower_a @ current.bias
        upper_b = upper_b + upper_a @ current.bias
        lower_a = lower_a @ current.weights
        upper_a = upper_a @ current.weights
    return LinearBounds(lower_a, upper_a, lower_b, upper_b)


def concretize(bounds: LinearBounds, x: np.ndarray,
               epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Get the interval of linear bounds over the box [x - ε, x + ε].

    The infinity-norm dual is the l1 norm, so every row moves by
    ε times the l1 norm of its coefficients.

    """
    lower = (bounds.lower_a @ x + bounds.lower_b -
             epsilon * np.abs(bounds.lower_a).sum(axis=1))
    upper = (bounds.upper_a @ x + bounds.upper_b +
             epsilon * np.abs(bounds.upper_a).sum(axis=1))
    return lower, upper


def concretization_corner(a_row: np.ndarray, x: np.ndarray,
                          epsilon: float) -> np.ndarray:
    """Get the corner of the box minimizing a linear function.

    """
    return x - epsilon * np.sign(a_row)


def crown_intermediate(net: Network,
                       x: np.ndarray,
                       epsilon: float,
                       splits: typing.Optional[Splits] = None,
                       lower_slope: LowerSlope = LowerSlope.ADAPTIVE
                       ) -> BoundsCache:
    """Compute backward bounds for every layer, each intersected with the
    interval bounds.

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        The anchor input.
    epsilon : float
        The radius of the box.
    splits : Splits, optional
        Sign constraints on hidden neurons.
    lower_slope : LowerSlope
        The choice of the lower line of unstable ReLUs.

    Returns
    -------
    BoundsCache
        The refined bounds.

    """
    cache = ibp(net, x, epsilon, splits)
    for number in range(1, net.depth):
        bounds = crown_backward(net, x, epsilon, cache, layer=number,
                                lower_slope=lower_slope)
        lower, upper = concretize(bounds, x, epsilon)
        lower = np.maximum(lower, cache.lower[number])
        upper = np.minimum(upper, cache.upper[number])
        if np.any(lower > upper + _INTERSECTION_TOLERANCE):
            cache.infeasible = True
        upper = np.maximum(lower, upper)
        cache.lower[number] = lower
        cache.upper[number] = upper
        post_lower, post_upper = interval_activate(net.layers[number], lower,
                                                   upper)
        cache.post_lower[number] = post_lower
        cache.post_upper[number] = post_upper
    return cache


def crown_bounds(
    net: Network,
    x: np.ndarray,
    epsilon: float,
    spec_matrix: typing.Optional[np.ndarray] = None,
    splits: typing.Optional[Splits] = None,
    lower_slope: LowerSlope = LowerSlope.ADAPTIVE,
    refine_intermediate: bool = False
) -> tuple[np.ndarray, np.ndarray, BoundsCache]:
    """Compute concretized backward bounds of C f(x) in one call.

    Returns
    -------
    tuple
        The lower bounds, the upper bounds and the intermediate bounds
        used.

    """
    if refine_intermediate:
        cache = crown_intermediate(net, x, epsilon, splits, lower_slope)
    else:
        cache = ibp(net, x, epsilon, splits)
    bounds = crown_backward(net, x, epsilon, cache, spec_matrix,
                            lower_slope=lower_slope)
    lower, upper = concretize(bounds, x, epsilon)
    return lower, upper, cache
