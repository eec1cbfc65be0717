"""Module for loading, and accessing the configuration.

"""

import configparser
import os
import typing

_CONFIGURATION_FILE = 'config.ini'
"""Configuration file path."""

_THREADS_ENVIRONMENT_VARIABLE = 'GRAFTCERT_THREADS'
"""Environment variable capping the number of worker threads."""

_DEFAULTS: dict[str, dict[str, str]] = {
    'Logging': {
        'file': 'false',
        'file_name': 'graftcert.log',
        'level': 'info'
    },
    'Database': {
        'url': 'sqlite:///graftcert.db'
    },
    'Model': {
        'max_slope': '10'
    },
    'Bounds': {
        'lower_slope': 'adaptive',
        'refine_intermediate': 'false'
    },
    'Selection': {
        'pool_ratio': '0.8',
        'influential_ratio': '0.15',
        'last_layer_retain_ratio': '0.7',
        'graft_ratio': '0.5',
        'retain_only_if_full': 'true',
        'score_bounds': 'ibp'
    },
    'Lipschitz': {
        'width_mode': 'pre',
        'sample_pairs': '1000'
    },
    'Training': {
        'epochs': '40',
        'batch_size': '64',
        'lr': '0.1',
        'lr_finetune': '0.001',
        'decay_epochs': '25,35',
        'decay_factor': '0.1',
        'lr_graft': '0.01',
        'momentum': '0.9',
        'weight_decay': '0.0005',
        'lambda_slope': '0.00005',
        'lambda_l1': '0.0001',
        'slope_k': '2',
        'slope_loss': 'verbatim',
        'prune_ratio': '0.3',
        'pgd_steps': '10',
        'pgd_restarts': '1',
        'init_slope': '0.4',
        'init_intercept': '0.0'
    },
    'Attack': {
        'steps': '20',
        'restarts': '5',
        'step_size_ratio': '0.25'
    },
    'Verification': {
        'budget_branches': '2000',
        'budget_seconds': '10'
    },
    'Data': {
        'calibration_size': '500',
        'test_fraction': '0.2'
    },
    'Runtime': {
        'threads': '0'
    }
}
"""Built-in defaults, overridden by the configuration file."""

_config: typing.Optional[configparser.ConfigParser] = None
"""Configuration singleton object."""


def get_config() -> configparser.ConfigParser:
    """Get the configuration.

    Returns
    -------
    configparser.ConfigParser
        The configuration object.

    """
    global _config
    if not _config:
        _config = configparser.ConfigParser()
        _config.read_dict(_DEFAULTS)
        _config.read(_CONFIGURATION_FILE)
    return _config


def get_thread_count() -> int:
    """Get the number of worker threads to use.

    The environment variable GRAFTCERT_THREADS takes precedence over the
    configuration; zero or less means the number of CPUs.

    Returns
    -------
    int
        The number of worker threads.

    """
    threads = os.environ.get(_THREADS_ENVIRONMENT_VARIABLE)
    if threads is None:
        threads = get_config()['Runtime']['threads']
    count = int(threads)
    if count <= 0:
        count = os.cpu_count() or 4
    return count
