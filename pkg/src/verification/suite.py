"""Module for evaluating a network on a whole dataset.

"""
import logging
import math
import os
import queue
import threading
import typing

import numpy as np

from src.bounds.ibp import ibp
from src.bounds.status import neuron_status
from src.domain import Certificate
from src.domain import Dataset
from src.domain import Network
from src.domain import PgdConfig
from src.domain import SampleRecord
from src.domain import SuiteConfig
from src.domain import SuiteMetrics
from src.domain import Verdict
from src.model.forward import predict
from src.seeding import substream
from src.training.attack import pgd_attack_batch
from src.verification.bab import certify_bab
from src.verification.exceptions import BudgetError

_logger = logging.getLogger(__name__)
"""Logger for this module."""


def _attack_config(config: SuiteConfig, epsilon: float) -> PgdConfig:
    step_size = config.attack.step_size
    if step_size <= 0:
        step_size = config.step_size_ratio * epsilon
    return PgdConfig(config.attack.steps, step_size, config.attack.restarts)


def _percent(flags: typing.Iterable[bool], total: int) -> float:
    if total == 0:
        return 0.0
    return 100.0 * sum(1 for flag in flags if flag) / total


def average_lower_bound(certificates: typing.Iterable[Certificate]) -> float:
    """Get the mean over certificates of their smallest margin lower bound;
    certificates without a finite bound are skipped, and the mean of none
    is 0.

    """
    bounds = [
        min(certificate.margin_lower) for certificate in certificates
        if certificate.margin_lower
        and math.isfinite(min(certificate.margin_lower))
    ]
    return float(np.mean(bounds)) if bounds else 0.0


def evaluate_suite(
    net: Network,
    dataset: Dataset,
    epsilon: float,
    config: typing.Optional[SuiteConfig] = None,
    known: typing.Optional[dict[int, Certificate]] = None
) -> tuple[SuiteMetrics, list[SampleRecord]]:
    """Measure the standard, robust and verified accuracies of a network.

    Every correctly classified sample is attacked; every sample that
    resists the attack is certified with branch and bound. Misclassified
    and attacked samples count as unverified.

    Parameters
    ----------
    net : Network
        The network.
    dataset : Dataset
        The evaluation samples.
    epsilon : float
        The radius of the ball.
    config : SuiteConfig, optional
        The attack, the certification budget and the number of threads.
    known : dict, optional
        Certificates already computed, by sample index; these samples are
        not certified again.

    Returns
    -------
    tuple
        The suite metrics (percentages, mean certification time in
        seconds over certified samples) and the record of every sample.

    Raises
    ------
    BudgetError
        If the certification budget is not positive.

    """
    config = config if config is not None else SuiteConfig()
    if config.budget.max_branches <= 0 or config.budget.max_seconds <= 0:
        raise BudgetError('the branch and bound budget must be positive')
    known = known if known is not None else {}
    inputs = dataset.inputs
    labels = dataset.labels
    total = len(dataset)
    if total == 0:
        return SuiteMetrics(0.0, 0.0, 0.0, 0.0, 0.0, 0), []
    correct = predict(net, inputs) == labels
    adversarial = inputs.copy()
    if np.any(correct):
        adversarial[correct] = pgd_attack_batch(
            net, inputs[correct], labels[correct], epsilon,
            _attack_config(config, epsilon), substream(config.seed, 'attack'))
    robust = correct & (predict(net, adversarial) == labels)
    unr = neuron_status(net, ibp(net, inputs, epsilon)).unr

    certificates: dict[int, Certificate] = {
        index: known[index]
        for index in np.flatnonzero(robust).tolist() if index in known
    }
    lock = threading.Lock()
    q: queue.Queue = queue.Queue()

    def worker():
        not_done = True
        while not_done:
            try:
                index = q.get(block=False)
            except queue.Empty:
                not_done = False
                continue
            try:
                certificate = certify_bab(
                    net, inputs[index], int(labels[index]), epsilon,
                    config.budget, config.lower_slope,
                    substream(config.seed, f'verify-{index}'),
                    config.refine_intermediate)
            except Exception:
                _logger.warning(f'error when certifying sample {index}',
                                exc_info=True)
                certificate = Certificate(Verdict.UNKNOWN, [])
            _logger.debug(f'sample {index}: '
                          f'{certificate.verdict.name.lower()}')
            with lock:
                certificates[index] = certificate
                q.task_done()

    pending = [
        index for index in np.flatnonzero(robust).tolist()
        if index not in certificates
    ]
    _logger.info(f'certifying {len(pending)} samples '
                 f'({len(certificates)} already certified)')
    for index in pending:
        q.put(index)
    consumers = [
        threading.Thread(target=worker, daemon=True)
        for _ in range(max(1, min(config.threads,
                                  os.cpu_count() or 1, len(pending))))
    ]
    for consumer_ in consumers:
        consumer_.start()
    for consumer_ in consumers:
        consumer_.join()
    q.join()

    records = [
        SampleRecord(index, bool(correct[index]), bool(robust[index]),
                     certificates.get(index)) for index in range(total)
    ]
    times = [certificate.time_sec for certificate in certificates.values()]
    metrics = SuiteMetrics(
        _percent(correct, total), _percent(robust, total),
        _percent((record.verified for record in records), total), unr,
        float(np.mean(times)) if times else 0.0, total,
        average_lower_bound(certificates.values()))
    _logger.info(f'SA {metrics.sa:.2f}, RA {metrics.ra:.2f}, '
                 f'VA {metrics.va:.2f}, UNR {metrics.unr:.2f}, '
                 f'average lower bound {metrics.avg_lb:.4f}')
    return metrics, records
