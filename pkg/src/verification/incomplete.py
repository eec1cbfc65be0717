"""Module for incomplete certification with backward relaxation bounds.

"""
import logging
import time

import numpy as np

from src.bounds.crown import crown_bounds
from src.domain import Certificate
from src.domain import LowerSlope
from src.domain import Network
from src.domain import Verdict
from src.model.forward import predict
from src.verification.lp import margin_matrix

_logger = logging.getLogger(__name__)
"""Logger for this module."""


def misclassifies(net: Network, point: np.ndarray, label: int) -> bool:
    """Check whether the network assigns another class to a point.

    """
    return bool(predict(net, np.asarray(point)[None, :])[0] != label)


def certify_incomplete(net: Network,
                       x: np.ndarray,
                       label: int,
                       epsilon: float,
                       lower_slope: LowerSlope = LowerSlope.ADAPTIVE,
                       refine_intermediate: bool = False) -> Certificate:
    """Certify a sample by bounding every margin f_label - f_rival.

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
    lower_slope : LowerSlope
        The choice of the lower line of unstable ReLUs.
    refine_intermediate : bool
        Whether intermediate bounds come from backward bounds instead of
        interval bounds.

    Returns
    -------
    Certificate
        Verified when every lower margin is positive, unknown otherwise.
        A misclassified anchor is falsified by the anchor itself.

    """
    start = time.perf_counter()
    x = np.asarray(x, dtype=np.float64)
    if misclassifies(net, x, label):
        return Certificate(Verdict.FALSIFIED, [],
                           time_sec=time.perf_counter() - start,
                           counterexample=x.tolist())
    margins, _, _ = crown_bounds(net, x, epsilon,
                                 margin_matrix(label, net.output_dim),
                                 lower_slope=lower_slope,
                                 refine_intermediate=refine_intermediate)
    verdict = Verdict.VERIFIED if np.all(margins > 0) else Verdict.UNKNOWN
    _logger.debug(f'Incomplete check: {verdict.name.lower()}, worst margin '
                  f'{np.min(margins, initial=np.inf):.6f}')
    return Certificate(verdict, margins.tolist(),
                       time_sec=time.perf_counter() - start)
