"""Module for the sampled lower bound of the local Lipschitz constant.

"""
import numpy as np

from src.domain import Network
from src.model.forward import forward
from src.model.forward import jacobian
from src.seeding import substream

_JACOBIAN_SAMPLES = 64
"""Number of sampled points (after the anchor) at which the Jacobian is
evaluated."""


def sampled_lipschitz_lower(net: Network, x: np.ndarray, epsilon: float,
                            n_pairs: int, seed: int) -> float:
    """Get a lower bound of the local Lipschitz constant by sampling.

    The bound is the largest of the difference quotients
    |f(a) - f(b)|_inf / |a - b|_inf over random pairs of the ball and of
    the largest row l1 norm of the Jacobian at the anchor and at sampled
    points of the ball.

    Parameters
    ----------
    net : Network
        The network.
    x : np.ndarray
        The anchor input.
    epsilon : float
        The radius of the ball.
    n_pairs : int
        The number of random pairs; at least 1.
    seed : int
        The seed of the sampling.

    Returns
    -------
    float
        The lower bound.

    Raises
    ------
    ValueError
        If n_pairs is less than 1.

    """
    if n_pairs < 1:
        raise ValueError('at least one pair is required')
    x = np.asarray(x, dtype=np.float64)
    rng = substream(seed, 'lip')
    first = x + rng.uniform(-epsilon, epsilon, size=(n_pairs, x.size))
    second = x + rng.uniform(-epsilon, epsilon, size=(n_pairs, x.size))
    distances = np.max(np.abs(first - second), axis=1)
    differences = np.max(np.abs(forward(net, first) - forward(net, second)),
                         axis=1)
    valid = distances > 0
    quotient = 0.0
    if np.any(valid):
        quotient = float(np.max(differences[valid] / distances[valid]))
    points = np.vstack([x[None, :], first[:_JACOBIAN_SAMPLES]])
    gradient_norm = float(np.max(np.abs(jacobian(net, points)).sum(axis=-1)))
    return max(quotient, gradient_norm)
