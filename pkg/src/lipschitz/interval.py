"""Module for the interval upper bound of the local Lipschitz constant.

Interval widths are propagated layer by layer: an affine layer maps
widths w to |W| w, and an activation scales every width by its neuron's
factor. Starting from the width 2ε of the input box, the output widths
divided by 2ε bound the local Lipschitz constant of every output.

"""
import numpy as np

from src.bounds.ibp import ibp
from src.domain import LipschitzEstimate
from src.domain import Network
from src.domain import WidthMode
from src.lipschitz.exceptions import LipschitzError
from src.lipschitz.sampling import sampled_lipschitz_lower


def output_widths(net: Network,
                  x: np.ndarray,
                  epsilon: float,
                  width_mode: WidthMode = WidthMode.PRE) -> np.ndarray:
    """Get the interval widths of the logits over the box around x.

    In the PRE mode ReLUs that are not inactive keep the whole width of
    their pre-activation interval; in the POST mode they keep the width
    of the exact post-activation interval.

    """
    cache = ibp(net, x, epsilon, loose=width_mode is WidthMode.PRE)
    return cache.upper[-1] - cache.lower[-1]


def interval_lipschitz(
        net: Network,
        x: np.ndarray,
        epsilon: float,
        width_mode: WidthMode = WidthMode.PRE) -> tuple[np.ndarray, float]:
    """Get the interval bound of the local Lipschitz constant.

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        The anchor input.
    epsilon : float
        The radius of the ball; must be positive.
    width_mode : WidthMode
        The width model of unstable ReLUs.

    Returns
    -------
    tuple of np.ndarray and float
        The bound of every output and their maximum.

    Raises
    ------
    LipschitzError
        If epsilon is not positive.

    """
    if epsilon <= 0:
        raise LipschitzError('the Lipschitz bound needs a positive epsilon')
    per_output = output_widths(net, x, epsilon, width_mode) / (2.0 * epsilon)
    return per_output, float(np.max(per_output))


def mean_interval_lipschitz(
        net: Network,
        inputs: np.ndarray,
        epsilon: float,
        width_mode: WidthMode = WidthMode.PRE) -> float:
    """Get the interval Lipschitz bound averaged over a batch of anchors.

    Raises
    ------
    LipschitzError
        If epsilon is not positive.

    """
    if epsilon <= 0:
        raise LipschitzError('the Lipschitz bound needs a positive epsilon')
    widths = output_widths(net, inputs, epsilon, width_mode)
    return float(np.mean(np.max(widths, axis=-1)) / (2.0 * epsilon))


def lipschitz_estimate(net: Network,
                       x: np.ndarray,
                       epsilon: float,
                       n_pairs: int,
                       seed: int,
                       width_mode: WidthMode = WidthMode.PRE
                       ) -> LipschitzEstimate:
    """Get both the interval upper bound and the sampled lower bound of the
    local Lipschitz constant at one anchor.

    """
    per_output, upper = interval_lipschitz(net, x, epsilon, width_mode)
    lower = sampled_lipschitz_lower(net, x, epsilon, n_pairs, seed)
    return LipschitzEstimate(upper, lower, np.asarray(x), epsilon,
                             per_output)
