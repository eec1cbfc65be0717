import json
import os

import pytest

from src.__main__ import EXIT_CONFIG
from src.__main__ import EXIT_IO
from src.__main__ import EXIT_SUCCESS
from src.__main__ import main
from src.database.access import get_certificate_groups
from src.model.serialization import graft_set_to_dict
from src.model.serialization import load_graft_set
from src.model.serialization import load_model_document
from src.model.serialization import save_model
from src.pipeline import Pipeline
from src.run_config import load_run_config
from tests.conftest import random_network

SMALL_RUN = {
    'hidden': [8, 8],
    'data': {
        'synthetic_n': 120,
        'calibration_size': 40,
        'limit': 12
    },
    'train': {
        'epochs': 2,
        'batch_size': 32,
        'decay_epochs': [],
        'pgd': {
            'steps': 2
        }
    },
    'finetune': {
        'epochs': 1,
        'batch_size': 32,
        'pgd': {
            'steps': 2
        }
    },
    'suite': {
        'attack': {
            'steps': 3,
            'restarts': 1
        },
        'budget': {
            'max_branches': 50,
            'max_seconds': 2.0
        },
        'threads': 1
    },
    'lipschitz_pairs': 20,
    'lipschitz_anchors': 3,
    'epsilon': 0.02
}
"""Overrides of a run small enough for the test suite."""


def _overrides(tmp_path, **changes):
    return dict(SMALL_RUN, output_dir=str(tmp_path / 'run'), **changes)


@pytest.fixture
def baseline(tmp_path):
    path = str(tmp_path / 'random.json')
    save_model(random_network(4, (2, 8, 8, 2)), path)
    return path


def test_certify_at_zero_radius(tmp_path, ledger, baseline):
    config = load_run_config(overrides=_overrides(
        tmp_path, model=baseline, target='baseline', epsilon=0.0))
    metrics, records = Pipeline(config).certify()
    assert metrics.n == 12
    assert metrics.sa == metrics.ra == metrics.va
    assert metrics.unr == 0.0
    assert sum(record.verified for record in records) == sum(
        record.correct for record in records)
    path = os.path.join(config.output_dir, 'metrics_baseline.json')
    with open(path) as file:
        assert json.load(file)['target'] == 'baseline'


def test_certificates_are_reused(tmp_path, ledger, baseline):
    config = load_run_config(
        overrides=_overrides(tmp_path, model=baseline, target='baseline'))
    first, records = Pipeline(config).certify()
    second, _ = Pipeline(config).certify()
    assert (first.sa, first.ra, first.va) == (second.sa, second.ra,
                                              second.va)
    certified = sum(record.certificate is not None for record in records)
    assert sum(group.count for group in get_certificate_groups()) == certified


def test_select_graft_and_bound(tmp_path, ledger, baseline):
    mask = str(tmp_path / 'mask.json')
    config = load_run_config(overrides=_overrides(
        tmp_path, model=baseline, target='grafted', mask_out=mask))
    pipeline = Pipeline(config)
    selected = pipeline.select()
    assert graft_set_to_dict(load_graft_set(mask)) == graft_set_to_dict(
        selected)
    pipeline.graft()
    _, stored, _ = load_model_document(pipeline.path('grafted'))
    assert graft_set_to_dict(stored) == graft_set_to_dict(selected)
    values = pipeline.lipschitz()
    assert values['anchors'] == 3
    assert values['mean_lower'] <= values['mean_upper'] + 1e-9
    with open(pipeline.path('scores')) as file:
        assert json.load(file)['calibration_size'] == 40


def test_graft_from_a_given_mask(tmp_path, baseline):
    first = load_run_config(overrides=_overrides(
        tmp_path, model=baseline, mask_out=str(tmp_path / 'mask.json')))
    Pipeline(first, ledger=False).select()
    second = load_run_config(
        overrides=dict(_overrides(tmp_path, model=baseline),
                       output_dir=str(tmp_path / 'other'),
                       mask_in=str(tmp_path / 'mask.json')))
    grafted = Pipeline(second, ledger=False).graft()
    assert grafted.depth == 3


def test_missing_artifact_exit_code(tmp_path):
    assert main(['graft', '--output-dir', str(tmp_path / 'run')]) == EXIT_IO


def test_invalid_radius_exit_code(tmp_path):
    code = main(
        ['certify', '--output-dir',
         str(tmp_path / 'run'), '--eps', '-1'])
    assert code == EXIT_CONFIG


def test_report_of_missing_metrics(tmp_path):
    (tmp_path / 'run').mkdir()
    assert main(['report', str(tmp_path / 'run')]) == EXIT_IO


@pytest.mark.slow
def test_full_run(tmp_path, ledger):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(_overrides(tmp_path, name='moons')))
    run = ['--config', str(path)]
    for stage in ('train', 'score', 'select', 'graft', 'finetune', 'attack'):
        assert main([stage] + run) == EXIT_SUCCESS
    for target in ('baseline', 'finetuned'):
        assert main(['certify', '--target', target] + run) in (0, 1)
        assert main(['lipschitz', '--target', target] + run) == EXIT_SUCCESS
    out = str(tmp_path / 'report')
    assert main(['report', str(tmp_path / 'run'), '--out',
                 out]) == EXIT_SUCCESS
    with open(f'{out}.json') as file:
        rows = json.load(file)
    assert [(row['run'], row['model']) for row in rows] == [
        ('moons', 'baseline'), ('moons', 'finetuned')]
    assert all(row['Lip'] is not None for row in rows)
    _, _, mask = load_model_document(str(tmp_path / 'run' /
                                          'finetuned.json'))
    assert mask is not None


TOY = os.path.join(os.path.dirname(__file__), 'data')
"""Directory of the bundled toy network, dataset and golden graft set."""


def test_toy_stages_reproduce_the_golden_graft_set(tmp_path):
    def run(stage, *flags):
        return main([
            stage, '--config',
            os.path.join(TOY, 'toy_run.json'), '--output-dir',
            str(tmp_path), '--model',
            os.path.join(TOY, 'toy_net.json'), '--dataset',
            os.path.join(TOY, 'toy.csv'), '--test-dataset',
            os.path.join(TOY, 'toy.csv'), *flags
        ])

    mask = tmp_path / 'mask.json'
    assert run('select', '--mask-out', str(mask)) == EXIT_SUCCESS
    assert run('graft') == EXIT_SUCCESS
    assert run('lipschitz', '--target', 'grafted') == EXIT_SUCCESS
    with open(os.path.join(TOY, 'toy_graftset.json'), 'rb') as file:
        golden = file.read()
    assert (tmp_path / 'graftset.json').read_bytes() == golden
    assert mask.read_bytes() == golden
    grafted, graft_set, _ = load_model_document(str(tmp_path /
                                                    'grafted.json'))
    assert graft_set.selected == {0: [0, 1, 2], 1: [1, 3]}
    assert grafted.layers[1].slopes[[1, 3]].tolist() == [0.4, 0.4]
    bounds = json.loads((tmp_path / 'lipschitz_grafted.json').read_text())
    assert bounds['anchors'] == 6
    assert bounds['mean_lower'] <= bounds['mean_upper']
