"""Module for adversarial training and fine-tuning with SGD.

"""
import dataclasses
import logging
import math
import typing

import numpy as np

from src.autodiff.exceptions import NumericError
from src.autodiff.gradients import grad
from src.bounds.ibp import ibp
from src.bounds.status import neuron_status
from src.domain import ActivationKind
from src.domain import Batch
from src.domain import Dataset
from src.domain import GraftSet
from src.domain import LayerTensors
from src.domain import Network
from src.domain import ParamGrad
from src.domain import TrainConfig
from src.domain import TrainingLogRow
from src.grafting.graft import validate_graft_set
from src.lipschitz.interval import mean_interval_lipschitz
from src.model.exceptions import ModelValidationError
from src.model.forward import predict
from src.model.network import parameters
from src.model.network import with_parameters
from src.seeding import substream
from src.training.attack import pgd_attack_batch
from src.training.exceptions import TrainingError
from src.training.losses import make_total_loss
from src.training.pruning import apply_mask

_logger = logging.getLogger(__name__)
"""Logger for this module."""

_LOG_SAMPLES = 256
"""Number of evaluation samples behind every training log row."""


@dataclasses.dataclass
class FinetuneResult:
    """Outcome of a training run.

    """
    network: Network
    log: list[TrainingLogRow]
    diverged: bool = False


def validate_train_config(config: TrainConfig) -> None:
    """Check the rates and ratios of a training configuration.

    Raises
    ------
    TrainingError
        If a rate is not positive, a coefficient is negative or the
        pruning ratio is outside [0, 1).

    """
    if config.epochs < 0 or config.batch_size <= 0:
        raise TrainingError('epochs must be non-negative and the batch '
                            'size positive')
    for name in ('lr', 'lr_graft', 'slope_k'):
        if getattr(config, name) <= 0:
            raise TrainingError(f'{name} must be positive')
    for name in ('lambda_slope', 'lambda_l1', 'weight_decay', 'momentum',
                 'epsilon'):
        if getattr(config, name) < 0:
            raise TrainingError(f'{name} must not be negative')
    if not 0 <= config.prune_ratio < 1:
        raise TrainingError('the pruning ratio must lie in [0, 1)')


class Trainer:
    """SGD with momentum over the total training loss.

    Weights and biases use the scheduled learning rate with weight decay;
    the slopes and intercepts of grafted neurons use their own learning
    rate, and only those of the neurons named by the graft masks change.
    Pruned weights stay zero after every step.

    """
    def __init__(self,
                 config: TrainConfig,
                 data: Dataset,
                 evaluation: typing.Optional[Dataset] = None,
                 prune_mask: typing.Optional[list[np.ndarray]] = None,
                 graft_masks: typing.Optional[list[np.ndarray]] = None):
        validate_train_config(config)
        self.__config = config
        self.__data = data
        self.__evaluation = evaluation if evaluation is not None else data
        self.__prune_mask = prune_mask
        self.__graft_masks = graft_masks

    def __learning_rate(self, epoch: int) -> float:
        decays = sum(1 for boundary in self.__config.decay_epochs
                     if epoch >= boundary)
        return self.__config.lr * self.__config.decay_factor**decays

    def __step(self, params: list[LayerTensors], velocity: list[LayerTensors],
               gradient: ParamGrad, lr: float) -> None:
        config = self.__config
        for number, (tensors, moment, grads) in enumerate(
                zip(params, velocity, gradient.layers)):
            for name in ('weights', 'bias'):
                value = getattr(tensors, name)
                update = getattr(grads, name) + config.weight_decay * value
                speed = config.momentum * getattr(moment, name) + update
                setattr(moment, name, speed)
                setattr(tensors, name, value - lr * speed)
            for name in ('slopes', 'intercepts'):
                speed = (config.momentum * getattr(moment, name) +
                         getattr(grads, name))
                if self.__graft_masks is not None:
                    speed = speed * self.__graft_masks[number]
                setattr(moment, name, speed)
                setattr(tensors, name,
                        getattr(tensors, name) - config.lr_graft * speed)
        if self.__prune_mask is not None:
            apply_mask(params, self.__prune_mask)

    def __log_row(self, net: Network, epoch: int,
                  loss: float) -> TrainingLogRow:
        inputs = self.__evaluation.inputs[:_LOG_SAMPLES]
        labels = self.__evaluation.labels[:_LOG_SAMPLES]
        epsilon = self.__config.epsilon
        accuracy = 100.0 * float(np.mean(predict(net, inputs) == labels))
        unr = neuron_status(net, ibp(net, inputs, epsilon)).unr
        lip = (mean_interval_lipschitz(net, inputs, epsilon)
               if epsilon > 0 else 0.0)
        return TrainingLogRow(epoch, loss, accuracy, unr, lip)

    def run(self, net: Network) -> FinetuneResult:
        """Train a network.

        Parameters
        ----------
        net : Network
            The initial network.

        Returns
        -------
        FinetuneResult
            The trained network and the per-epoch log. When the loss
            stops being finite, the network of the last finite step is
            returned and the result is marked diverged.

        """
        config = self.__config
        order_rng = substream(config.seed, 'train')
        attack_rng = substream(config.seed, 'pgd')
        params = parameters(net)
        velocity = [
            LayerTensors(np.zeros_like(tensors.weights),
                         np.zeros_like(tensors.bias),
                         np.zeros_like(tensors.slopes),
                         np.zeros_like(tensors.intercepts))
            for tensors in params
        ]
        log: list[TrainingLogRow] = []
        size = len(self.__data)
        batches = math.ceil(size / config.batch_size)
        for epoch in range(config.epochs):
            lr = self.__learning_rate(epoch)
            order = order_rng.permutation(size)
            losses = []
            for number in range(batches):
                indices = order[number * config.batch_size:(number + 1) *
                                config.batch_size]
                batch = Batch(self.__data.inputs[indices],
                              self.__data.labels[indices])
                try:
                    adversarial = pgd_attack_batch(net, batch.inputs,
                                                   batch.labels,
                                                   config.epsilon, config.pgd,
                                                   attack_rng)
                    loss, gradient = grad(
                        make_total_loss(adversarial, config), net, batch)
                    self.__step(params, velocity, gradient, lr)
                    updated = with_parameters(net, params)
                except (NumericError, ModelValidationError) as error:
                    _logger.warning(f'Training diverged in epoch {epoch}: '
                                    f'{error}')
                    return FinetuneResult(net, log, True)
                if not math.isfinite(loss):
                    _logger.warning(f'Training diverged in epoch {epoch}')
                    return FinetuneResult(net, log, True)
                net = updated
                losses.append(loss)
            row = self.__log_row(net, epoch + 1, float(np.mean(losses)))
            log.append(row)
            _logger.info(f'Epoch {row.epoch}: loss {row.loss:.4f}, '
                         f'SA {row.sa:.2f}, UNR {row.unr:.2f}, '
                         f'Lip {row.lip:.4f}')
        return FinetuneResult(net, log)


def pretrain(net: Network,
             data: Dataset,
             config: TrainConfig,
             evaluation: typing.Optional[Dataset] = None) -> FinetuneResult:
    """Adversarially train a baseline network, without the slope loss.

    """
    baseline = dataclasses.replace(config, lambda_slope=0.0)
    _logger.info(f'Training a baseline for {config.epochs} epochs')
    return Trainer(baseline, data, evaluation).run(net)


def graft_masks(net: Network, graft_set: GraftSet) -> list[np.ndarray]:
    """Get the per-layer masks of the neurons of a graft set, checked
    against the grafted neurons of the network.

    Raises
    ------
    GraftError
        If the graft set does not fit the network.
    TrainingError
        If the network grafts other neurons than the graft set.

    """
    validate_graft_set(net, graft_set)
    masks = [np.zeros(layer.output_dim, dtype=bool) for layer in net.layers]
    for layer, indices in graft_set.selected.items():
        masks[layer][indices] = True
    for number in net.hidden_layers:
        grafted = net.layers[number].mask(ActivationKind.GRAFTED_LINEAR)
        if not np.array_equal(grafted, masks[number]):
            raise TrainingError(f'layer {number} grafts other neurons than '
                                f'the graft set')
    return masks


def finetune(net: Network,
             graft_set: GraftSet,
             data: Dataset,
             config: TrainConfig,
             prune_mask: typing.Optional[list[np.ndarray]] = None,
             evaluation: typing.Optional[Dataset] = None) -> FinetuneResult:
    """Fine-tune a grafted network with the total loss.

    Parameters
    ----------
    net : Network
        The grafted (and possibly pruned) network.
    graft_set : GraftSet
        The grafted neurons; only their slopes and intercepts are trained.
    data : Dataset
        The training data.
    config : TrainConfig
        The training configuration.
    prune_mask : list of np.ndarray, optional
        The masks of the weights kept by pruning.
    evaluation : Dataset, optional
        The data behind the log rows; the training data by default.

    Returns
    -------
    FinetuneResult
        The fine-tuned network and the per-epoch log.

    Raises
    ------
    GraftError
        If the graft set does not fit the network.
    TrainingError
        If the network grafts other neurons than the graft set, or the
        configuration is invalid.

    """
    masks = graft_masks(net, graft_set)
    _logger.info(f'Fine-tuning {graft_set.size()} grafted neurons for '
                 f'{config.epochs} epochs')
    return Trainer(config, data, evaluation, prune_mask, masks).run(net)
