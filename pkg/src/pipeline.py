"""Module for the pipeline stages and their artifacts.

Every stage reads the artifacts of earlier stages from the run directory
and writes its own under fixed file names, so any stage can be rerun on
its own.

"""
import csv
import hashlib
import json
import logging
import os
import typing

import numpy as np

from src.bounds.ibp import ibp
from src.bounds.status import neuron_status
from src.data.loaders import calibration_subset
from src.data.loaders import load_dataset
from src.data.loaders import split_dataset
from src.data.synthetic import make_synthetic
from src.database.access import add_certificates
from src.database.access import get_certificates
from src.domain import Dataset
from src.domain import GraftSet
from src.domain import Network
from src.domain import PgdConfig
from src.domain import RunConfig
from src.domain import SampleRecord
from src.domain import ScoreTable
from src.domain import SuiteMetrics
from src.domain import TrainingLogRow
from src.exceptions import ArtifactError
from src.grafting.graft import apply_graft
from src.grafting.scores import score_calibration
from src.grafting.selection import backward_select
from src.lipschitz.interval import lipschitz_estimate
from src.model.forward import predict
from src.model.network import initialize_network
from src.model.network import validate_network
from src.model.serialization import load_graft_set
from src.model.serialization import load_model_document
from src.model.serialization import save_graft_set
from src.model.serialization import save_model
from src.run_config import config_hash
from src.run_config import run_config_to_dict
from src.seeding import substream
from src.training.attack import pgd_attack_batch
from src.training.pruning import small_weight_prune
from src.training.trainer import finetune
from src.training.trainer import pretrain
from src.verification.suite import evaluate_suite

_logger = logging.getLogger(__name__)
"""Logger for this module."""

ARTIFACTS = {
    'baseline': ('baseline.json', 'train'),
    'train_log': ('train_log.csv', 'train'),
    'scores': ('scores.json', 'score'),
    'graftset': ('graftset.json', 'select'),
    'grafted': ('grafted.json', 'graft'),
    'finetuned': ('finetuned.json', 'finetune'),
    'finetune_log': ('finetune_log.csv', 'finetune'),
    'attack': ('attack_{target}.json', 'attack'),
    'metrics': ('metrics_{target}.json', 'certify'),
    'certificates': ('certificates_{target}.json', 'certify'),
    'lipschitz': ('lipschitz_{target}.json', 'lipschitz')
}
"""File name and producing stage of every artifact."""

RUN_CONFIG_FILE = 'run_config.json'
"""File holding the configuration of the last stage run."""

_LOG_COLUMNS = ('epoch', 'loss', 'sa', 'unr', 'lip')
"""Columns of the training logs."""


def file_hash(path: str) -> str:
    """Get the SHA-256 hash of a file.

    """
    with open(path, 'rb') as file:
        return hashlib.sha256(file.read()).hexdigest()


def write_json(values: typing.Any, path: str) -> None:
    """Write a JSON document with sorted keys.

    """
    with open(path, 'w') as file:
        json.dump(values, file, indent=2, sort_keys=True)
        file.write('\n')


def score_table_to_dict(table: ScoreTable,
                        epsilon: float) -> dict[str, typing.Any]:
    """Get the JSON form of a score table.

    """
    def by_layer(values: dict[int, np.ndarray]) -> dict[str, list]:
        return {
            str(layer): values[layer].tolist()
            for layer in sorted(values)
        }

    return {
        'format': 1,
        'epsilon': epsilon,
        'calibration_size': table.calibration_size,
        'instability': by_layer(table.instability),
        'max_width': by_layer(table.max_width),
        'weighted_interval': by_layer(table.weighted_interval)
    }


def write_training_log(rows: list[TrainingLogRow], path: str) -> None:
    """Write a training log as CSV.

    """
    with open(path, 'w', newline='') as file:
        writer = csv.writer(file)
        writer.writerow(_LOG_COLUMNS)
        for row in rows:
            writer.writerow([row.epoch] +
                            [repr(value)
                             for value in (row.loss, row.sa, row.unr,
                                           row.lip)])


class Pipeline:
    """Stages of one run, sharing a run directory.

    """
    def __init__(self, config: RunConfig, ledger: bool = True):
        self.__config = config
        self.__ledger = ledger
        self.__splits: typing.Optional[tuple[Dataset, Dataset]] = None
        os.makedirs(config.output_dir, exist_ok=True)
        write_json(
            dict(run_config_to_dict(config), config_hash=config_hash(config)),
            os.path.join(config.output_dir, RUN_CONFIG_FILE))

    def path(self, artifact: str, target: str = '') -> str:
        """Get the path of an artifact of the run.

        """
        name, _ = ARTIFACTS[artifact]
        return os.path.join(self.__config.output_dir,
                            name.format(target=target))

    def __require(self, artifact: str, target: str = '') -> str:
        path = self.path(artifact, target)
        if not os.path.exists(path):
            _, stage = ARTIFACTS[artifact]
            raise ArtifactError(
                f'{path} is missing; run "graftcert {stage}" first', stage)
        return path

    def __datasets(self) -> tuple[Dataset, Dataset]:
        if self.__splits is not None:
            return self.__splits
        data = self.__config.data
        seed = self.__config.seed
        if data.path is None:
            dataset = make_synthetic(data.synthetic, data.synthetic_n,
                                     data.synthetic_noise, seed)
        else:
            dataset = load_dataset(data.path, data.format, data.labels_path,
                                   data.num_classes)
        if data.test_path is not None:
            test = load_dataset(data.test_path, data.format,
                                data.test_labels_path, dataset.num_classes)
            train = dataset.subset(np.arange(len(dataset)), 'train')
            test = test.subset(np.arange(len(test)), 'test')
        else:
            train, test = split_dataset(dataset, data.test_fraction, seed)
        if data.limit is not None:
            test = test.subset(np.arange(min(data.limit, len(test))), 'test')
        _logger.info(f'{len(train)} training and {len(test)} test samples')
        self.__splits = (train, test)
        return self.__splits

    def __calibration(self) -> np.ndarray:
        train, _ = self.__datasets()
        return calibration_subset(train, self.__config.data.calibration_size,
                                  self.__config.seed).inputs

    def __baseline_path(self) -> str:
        if self.__config.model is not None:
            return self.__config.model
        return self.__require('baseline')

    def __target_path(self, target: str) -> str:
        if target == 'baseline':
            return self.__baseline_path()
        return self.__require(target)

    def __load(self, path: str) -> tuple[Network, typing.Optional[GraftSet],
                                         typing.Optional[list[np.ndarray]]]:
        net, graft_set, prune_mask = load_model_document(path)
        validate_network(net, self.__config.max_slope)
        return net, graft_set, prune_mask

    def train(self) -> Network:
        """Adversarially train a baseline network.

        Produces the baseline model and its training log.

        """
        train, test = self.__datasets()
        widths = ([train.inputs.shape[1]] + list(self.__config.hidden) +
                  [train.num_classes])
        net = initialize_network(widths,
                                 substream(self.__config.seed, 'init'))
        result = pretrain(net, train, self.__config.train, test)
        save_model(result.network, self.path('baseline'))
        write_training_log(result.log, self.path('train_log'))
        return result.network

    def score(self) -> ScoreTable:
        """Score every hidden neuron of the baseline over the calibration
        set.

        """
        net, _, _ = self.__load(self.__baseline_path())
        table = score_calibration(net, self.__calibration(),
                                  self.__config.epsilon,
                                  self.__config.score_bounds)
        write_json(score_table_to_dict(table, self.__config.epsilon),
                   self.path('scores'))
        return table

    def select(self) -> GraftSet:
        """Select the neurons of the baseline to graft.

        Produces the graft set (also written to the mask-out path when
        one is set) and the scores it was made from.

        """
        net, _, _ = self.__load(self.__baseline_path())
        graft_set, table = backward_select(net, self.__calibration(),
                                           self.__config.epsilon,
                                           self.__config.selection,
                                           self.__config.score_bounds)
        write_json(score_table_to_dict(table, self.__config.epsilon),
                   self.path('scores'))
        save_graft_set(graft_set, self.path('graftset'))
        if self.__config.mask_out is not None:
            save_graft_set(graft_set, self.__config.mask_out)
        _logger.info(f'selected {graft_set.size()} neurons to graft')
        return graft_set

    def graft(self) -> Network:
        """Graft the selected neurons of the baseline.

        The graft set comes from the mask-in path when one is set and
        from the select stage otherwise.

        """
        net, _, _ = self.__load(self.__baseline_path())
        mask_path = (self.__config.mask_in if self.__config.mask_in
                     is not None else self.__require('graftset'))
        graft_set = load_graft_set(mask_path)
        grafted = apply_graft(net, graft_set, self.__config.init_slope,
                              self.__config.init_intercept)
        save_model(grafted, self.path('grafted'), graft_set)
        return grafted

    def finetune(self) -> Network:
        """Prune and fine-tune the grafted network.

        """
        net, graft_set, _ = self.__load(self.__require('grafted'))
        graft_set = graft_set if graft_set is not None else GraftSet({})
        pruned, mask = small_weight_prune(net,
                                          self.__config.finetune.prune_ratio)
        train, test = self.__datasets()
        result = finetune(pruned, graft_set, train, self.__config.finetune,
                          mask, test)
        if result.diverged:
            _logger.warning('fine-tuning diverged; keeping the last finite '
                            'network')
        save_model(result.network, self.path('finetuned'), graft_set, mask)
        write_training_log(result.log, self.path('finetune_log'))
        return result.network

    def attack(self) -> dict[str, typing.Any]:
        """Measure the standard and robust accuracies of the target model.

        """
        target = self.__config.target
        net, _, _ = self.__load(self.__target_path(target))
        _, test = self.__datasets()
        epsilon = self.__config.epsilon
        suite = self.__config.suite
        step_size = suite.attack.step_size or suite.step_size_ratio * epsilon
        correct = predict(net, test.inputs) == test.labels
        adversarial = pgd_attack_batch(
            net, test.inputs, test.labels, epsilon,
            PgdConfig(suite.attack.steps, step_size, suite.attack.restarts),
            substream(self.__config.seed, 'attack'))
        robust = correct & (predict(net, adversarial) == test.labels)
        total = max(len(test), 1)
        values = {
            'target': target,
            'epsilon': epsilon,
            'n': len(test),
            'sa': 100.0 * float(np.sum(correct)) / total,
            'ra': 100.0 * float(np.sum(robust)) / total
        }
        write_json(values, self.path('attack', target))
        return values

    def certify(self) -> tuple[SuiteMetrics, list[SampleRecord]]:
        """Evaluate and certify the target model on the test set.

        Certificates stored in the ledger for the same model, radius and
        budget are reused; new ones are stored.

        """
        config = self.__config
        target = config.target
        path = self.__target_path(target)
        net, _, _ = self.__load(path)
        _, test = self.__datasets()
        model_hash = file_hash(path)
        known = (get_certificates(model_hash, config.epsilon,
                                  config.suite.budget)
                 if self.__ledger else {})
        metrics, records = evaluate_suite(net, test, config.epsilon,
                                          config.suite, known)
        if self.__ledger:
            add_certificates(model_hash, config.epsilon, config.suite.budget,
                             [
                                 record for record in records
                                 if record.certificate is not None
                                 and record.index not in known
                             ])
        write_json(
            dict(metrics.to_dict(),
                 target=target,
                 epsilon=config.epsilon,
                 model_hash=model_hash,
                 config_hash=config_hash(config)),
            self.path('metrics', target))
        write_json([{
            'index': record.index,
            'correct': record.correct,
            'robust': record.robust,
            'certificate': (record.certificate.to_dict()
                            if record.certificate is not None else None)
        } for record in records], self.path('certificates', target))
        return metrics, records

    def lipschitz(self) -> dict[str, typing.Any]:
        """Bound the local Lipschitz constant of the target model around
        the first test samples.

        """
        config = self.__config
        target = config.target
        net, _, _ = self.__load(self.__target_path(target))
        _, test = self.__datasets()
        anchors = test.inputs[:config.lipschitz_anchors]
        estimates = [
            lipschitz_estimate(net, anchor, config.epsilon,
                               config.lipschitz_pairs, config.seed,
                               config.width_mode) for anchor in anchors
        ]
        uppers = [estimate.upper for estimate in estimates]
        lowers = [estimate.lower for estimate in estimates]
        values = {
            'target': target,
            'epsilon': config.epsilon,
            'width_mode': config.width_mode.value,
            'anchors': len(estimates),
            'mean_upper': float(np.mean(uppers)) if uppers else 0.0,
            'mean_lower': float(np.mean(lowers)) if lowers else 0.0,
            'unr': (neuron_status(net, ibp(net, anchors, config.epsilon)).unr
                    if len(anchors) else 0.0),
            'per_anchor': [{
                'index': index,
                'upper': estimate.upper,
                'lower': estimate.lower
            } for index, estimate in enumerate(estimates)]
        }
        write_json(values, self.path('lipschitz', target))
        _logger.info(f'mean Lipschitz bounds of the {target} model: '
                     f'{values["mean_lower"]:.4f} to '
                     f'{values["mean_upper"]:.4f}')
        return values
