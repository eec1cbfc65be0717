"""Module for the projected gradient attack in the infinity norm.

"""
import typing

import numpy as np

from src.autodiff.gradients import input_gradient
from src.domain import Network
from src.domain import PgdConfig
from src.seeding import substream

INPUT_DOMAIN = (0.0, 1.0)
"""Valid range of every input feature."""


def pgd_attack_batch(
        net: Network,
        inputs: np.ndarray,
        labels: np.ndarray,
        epsilon: float,
        config: PgdConfig,
        rng: np.random.Generator,
        domain: typing.Optional[tuple[float, float]] = INPUT_DOMAIN,
        start: typing.Optional[np.ndarray] = None) -> np.ndarray:
    """Attack a batch with projected sign-gradient ascent on the
    cross-entropy.

    Every restart starts from a uniform point of the ball; after every
    step the point is projected back onto the ball and clipped to the
    input domain. The point of highest loss met, the clean input
    included, is returned for every sample.

    Parameters
    ----------
    net : Network
        The attacked network.
    inputs : np.ndarray
        The clean inputs (batch x input_dim).
    labels : np.ndarray
        The true labels.
    epsilon : float
        The radius of the ball.
    config : PgdConfig
        The number of steps and restarts, and the step size.
    rng : np.random.Generator
        The generator of the random starts.
    domain : tuple of float, optional
        The input domain; None to attack the whole ball.
    start : np.ndarray, optional
        The starting points of every restart instead of random ones.

    Returns
    -------
    np.ndarray
        The adversarial inputs.

    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if epsilon <= 0:
        return inputs.copy()
    lower = inputs - epsilon
    upper = inputs + epsilon
    if domain is not None:
        lower = np.maximum(lower, domain[0])
        upper = np.minimum(upper, domain[1])
    best = inputs.copy()
    best_loss, _ = input_gradient(net, best, labels)
    for _ in range(config.restarts):
        current = (rng.uniform(lower, upper) if start is None else np.clip(
            start, lower, upper))
        for _ in range(config.steps):
            losses, gradient = input_gradient(net, current, labels)
            improved = losses > best_loss
            best[improved] = current[improved]
            best_loss = np.where(improved, losses, best_loss)
            current = np.clip(current + config.step_size * np.sign(gradient),
                              lower, upper)
        losses, _ = input_gradient(net, current, labels)
        improved = losses > best_loss
        best[improved] = current[improved]
        best_loss = np.where(improved, losses, best_loss)
    return best


def pgd_attack(net: Network,
               x: np.ndarray,
               label: int,
               epsilon: float,
               steps: int,
               step_size: float,
               restarts: int,
               seed: int,
               domain: typing.Optional[tuple[float, float]] = INPUT_DOMAIN
               ) -> np.ndarray:
    """Attack one input with projected sign-gradient ascent.

    Returns
    -------
    np.ndarray
        The input of highest loss found; x itself when epsilon is 0.

    """
    adversarial = pgd_attack_batch(net,
                                   np.asarray(x, dtype=np.float64)[None, :],
                                   np.array([label]), epsilon,
                                   PgdConfig(steps, step_size, restarts),
                                   substream(seed, 'pgd'), domain)
    return adversarial[0]
