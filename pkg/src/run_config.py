"""Module for building, serializing and hashing run configurations.

A run configuration starts from the defaults of the configuration file,
is updated by an optional JSON document and finally by command-line
flags.

"""
import dataclasses
import enum
import hashlib
import json
import typing

from src.config import get_config
from src.config import get_thread_count
from src.domain import BabBudget
from src.domain import DataConfig
from src.domain import LowerSlope
from src.domain import PgdConfig
from src.domain import RunConfig
from src.domain import ScoreBounds
from src.domain import SelectionRatios
from src.domain import SlopeLossVariant
from src.domain import SuiteConfig
from src.domain import TrainConfig
from src.domain import WidthMode
from src.exceptions import ConfigError

TARGETS = ('baseline', 'grafted', 'finetuned')
"""Models a run can attack, certify and bound."""


def _enum_value(kind: typing.Type[enum.Enum], value: str,
                key: str) -> typing.Any:
    try:
        return kind(value)
    except ValueError:
        choices = ', '.join(str(member.value) for member in kind)
        raise ConfigError(f'{key}: unknown value {value}, expected one of '
                          f'{choices}')


def _train_defaults(finetune: bool) -> TrainConfig:
    section = get_config()['Training']
    return TrainConfig(
        epochs=section.getint('epochs'),
        batch_size=section.getint('batch_size'),
        lr=section.getfloat('lr_finetune' if finetune else 'lr'),
        decay_epochs=tuple(
            int(epoch) for epoch in section['decay_epochs'].split(',')
            if epoch.strip()),
        decay_factor=section.getfloat('decay_factor'),
        lr_graft=section.getfloat('lr_graft'),
        momentum=section.getfloat('momentum'),
        weight_decay=section.getfloat('weight_decay'),
        lambda_slope=section.getfloat('lambda_slope'),
        lambda_l1=section.getfloat('lambda_l1'),
        slope_k=section.getfloat('slope_k'),
        slope_loss=_enum_value(SlopeLossVariant, section['slope_loss'],
                               'Training.slope_loss'),
        pgd=PgdConfig(section.getint('pgd_steps'), 0.0,
                      section.getint('pgd_restarts')),
        prune_ratio=section.getfloat('prune_ratio'))


def default_run_config() -> RunConfig:
    """Get the run configuration of the configuration file.

    """
    config = get_config()
    selection = config['Selection']
    attack = config['Attack']
    verification = config['Verification']
    return RunConfig(
        data=DataConfig(
            test_fraction=config['Data'].getfloat('test_fraction'),
            calibration_size=config['Data'].getint('calibration_size')),
        selection=SelectionRatios(
            selection.getfloat('pool_ratio'),
            selection.getfloat('influential_ratio'),
            selection.getfloat('last_layer_retain_ratio'),
            selection.getfloat('graft_ratio'),
            selection.getboolean('retain_only_if_full')),
        score_bounds=_enum_value(ScoreBounds, selection['score_bounds'],
                                 'Selection.score_bounds'),
        init_slope=config['Training'].getfloat('init_slope'),
        init_intercept=config['Training'].getfloat('init_intercept'),
        train=_train_defaults(False),
        finetune=_train_defaults(True),
        suite=SuiteConfig(
            attack=PgdConfig(attack.getint('steps'), 0.0,
                             attack.getint('restarts')),
            step_size_ratio=attack.getfloat('step_size_ratio'),
            budget=BabBudget(verification.getint('budget_branches'),
                             verification.getfloat('budget_seconds')),
            lower_slope=_enum_value(LowerSlope,
                                    config['Bounds']['lower_slope'],
                                    'Bounds.lower_slope'),
            refine_intermediate=config['Bounds'].getboolean(
                'refine_intermediate'),
            threads=get_thread_count()),
        width_mode=_enum_value(WidthMode, config['Lipschitz']['width_mode'],
                               'Lipschitz.width_mode'),
        lipschitz_pairs=config['Lipschitz'].getint('sample_pairs'),
        max_slope=config['Model'].getfloat('max_slope'))


def _convert(current: typing.Any, value: typing.Any, key: str) -> typing.Any:
    if dataclasses.is_dataclass(current):
        if not isinstance(value, dict):
            raise ConfigError(f'{key}: expected an object')
        return update_dataclass(current, value, f'{key}.')
    if isinstance(current, enum.Enum):
        return _enum_value(type(current), value, key)
    if current is None or value is None:
        return value
    try:
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(current, tuple):
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return tuple(int(item) for item in value)
        if isinstance(current, int):
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if isinstance(current, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(current, str):
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f'{key}: invalid value {value!r}')
    return value


def update_dataclass(instance: typing.Any, values: dict[str, typing.Any],
                     prefix: str = '') -> typing.Any:
    """Get a copy of a configuration dataclass with some fields replaced.

    Parameters
    ----------
    instance : dataclass
        The configuration to update.
    values : dict
        The new values by field name; nested configurations take nested
        objects.
    prefix : str
        The key prefix used in error messages.

    Raises
    ------
    ConfigError
        If a key is unknown or a value has the wrong type.

    """
    names = {field.name for field in dataclasses.fields(instance)}
    changes = {}
    for key, value in values.items():
        if key not in names:
            raise ConfigError(f'unknown configuration key {prefix}{key}')
        changes[key] = _convert(getattr(instance, key), value,
                                f'{prefix}{key}')
    return dataclasses.replace(instance, **changes)


def finalize(config: RunConfig) -> RunConfig:
    """Propagate the run radius and seed into every stage and resolve
    relative attack step sizes.

    Raises
    ------
    ConfigError
        If the radius is negative, the target is unknown or a size is
        not positive.

    """
    if config.epsilon < 0:
        raise ConfigError('epsilon must not be negative')
    if config.target not in TARGETS:
        raise ConfigError(f'unknown target {config.target}, expected one of '
                          f'{", ".join(TARGETS)}')
    if any(width <= 0 for width in config.hidden):
        raise ConfigError('hidden widths must be positive')
    if config.lipschitz_pairs < 1 or config.lipschitz_anchors < 1:
        raise ConfigError('the Lipschitz sample sizes must be positive')
    if config.data.limit is not None and config.data.limit <= 0:
        raise ConfigError('the evaluation limit must be positive')
    step_size = config.suite.step_size_ratio * config.epsilon

    def resolve(train: TrainConfig) -> TrainConfig:
        pgd = train.pgd
        if pgd.step_size <= 0:
            pgd = dataclasses.replace(pgd, step_size=step_size)
        return dataclasses.replace(train,
                                   epsilon=config.epsilon,
                                   seed=config.seed,
                                   pgd=pgd)

    return dataclasses.replace(config,
                               train=resolve(config.train),
                               finetune=resolve(config.finetune),
                               suite=dataclasses.replace(config.suite,
                                                         seed=config.seed))


def load_run_config(path: typing.Optional[str] = None,
                    overrides: typing.Optional[dict[str, typing.Any]] = None
                    ) -> RunConfig:
    """Build a run configuration.

    Parameters
    ----------
    path : str, optional
        A JSON document updating the defaults of the configuration file.
    overrides : dict, optional
        Values updating the document, as nested objects.

    Returns
    -------
    RunConfig
        The finalized run configuration.

    Raises
    ------
    ConfigError
        If the document is not valid JSON or holds an invalid entry.

    """
    config = default_run_config()
    if path is not None:
        with open(path) as file:
            try:
                document = json.load(file)
            except json.JSONDecodeError as error:
                raise ConfigError(f'{path}: {error}')
        if not isinstance(document, dict):
            raise ConfigError(f'{path}: expected a JSON object')
        config = update_dataclass(config, document)
    if overrides:
        config = update_dataclass(config, overrides)
    return finalize(config)


def _jsonable(value: typing.Any) -> typing.Any:
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    return value


def run_config_to_dict(config: RunConfig) -> dict[str, typing.Any]:
    """Get the JSON form of a run configuration.

    """
    return _jsonable(dataclasses.asdict(config))


def config_hash(config: RunConfig) -> str:
    """Get the SHA-256 hash of the canonical JSON form of a run
    configuration. The number of threads does not change any result and
    is left out.

    """
    values = run_config_to_dict(config)
    del values['suite']['threads']
    canonical = json.dumps(values, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
