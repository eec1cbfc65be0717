"""Module for merging the metrics of several runs into one table.

"""
import csv
import dataclasses
import glob
import json
import logging
import os
import typing

from src.domain import SuiteMetrics
from src.exceptions import ArtifactError

_logger = logging.getLogger(__name__)
"""Logger for this module."""

REPORT_COLUMNS = ('run', 'model', 'SA', 'RA', 'VA', 'UNR', 'Time', 'AvgLB',
                  'Lip', 'config_hash')
"""Columns of the report table."""


@dataclasses.dataclass
class ReportRow:
    """Metrics of one model of one run.

    """
    run: str
    model: str
    metrics: SuiteMetrics
    lip: typing.Optional[float]
    config_hash: str

    def to_dict(self) -> dict[str, typing.Any]:
        return {
            'run': self.run,
            'model': self.model,
            'SA': self.metrics.sa,
            'RA': self.metrics.ra,
            'VA': self.metrics.va,
            'UNR': self.metrics.unr,
            'Time': self.metrics.time_sec,
            'AvgLB': self.metrics.avg_lb,
            'Lip': self.lip,
            'config_hash': self.config_hash
        }


def _read_json(path: str) -> typing.Any:
    try:
        with open(path) as file:
            return json.load(file)
    except json.JSONDecodeError as error:
        raise ArtifactError(f'{path}: {error}', 'report')


def collect_rows(run_directories: list[str]) -> list[ReportRow]:
    """Read the certification metrics of every model of every run.

    Parameters
    ----------
    run_directories : list of str
        The run directories.

    Returns
    -------
    list of ReportRow
        The rows, sorted by run name and model.

    Raises
    ------
    ArtifactError
        If a run directory holds no certification metrics.

    """
    rows = []
    for directory in run_directories:
        config_path = os.path.join(directory, 'run_config.json')
        run_config = (_read_json(config_path)
                      if os.path.exists(config_path) else {})
        run = run_config.get('name', os.path.basename(directory.rstrip('/')))
        metric_paths = sorted(
            glob.glob(os.path.join(directory, 'metrics_*.json')))
        if not metric_paths:
            raise ArtifactError(
                f'{directory} holds no metrics; run "graftcert certify" '
                'first', 'certify')
        for path in metric_paths:
            values = _read_json(path)
            model = values.get('target', os.path.basename(path)[8:-5])
            lipschitz_path = os.path.join(directory,
                                          f'lipschitz_{model}.json')
            lip = (_read_json(lipschitz_path)['mean_upper']
                   if os.path.exists(lipschitz_path) else None)
            rows.append(
                ReportRow(run, model, SuiteMetrics.from_dict(values), lip,
                          values.get('config_hash',
                                     run_config.get('config_hash', ''))))
    return sorted(rows, key=lambda row: (row.run, row.model))


def write_report(rows: list[ReportRow], prefix: str) -> tuple[str, str]:
    """Write the report table as CSV and JSON.

    Parameters
    ----------
    rows : list of ReportRow
        The rows.
    prefix : str
        The path of the report files without extension.

    Returns
    -------
    tuple of str
        The CSV and JSON paths.

    """
    directory = os.path.dirname(prefix)
    if directory:
        os.makedirs(directory, exist_ok=True)
    csv_path = f'{prefix}.csv'
    json_path = f'{prefix}.json'
    with open(csv_path, 'w', newline='') as file:
        writer = csv.DictWriter(file, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_dict())
    with open(json_path, 'w') as file:
        json.dump([row.to_dict() for row in rows],
                  file,
                  indent=2,
                  sort_keys=True)
        file.write('\n')
    _logger.info(f'wrote a report of {len(rows)} rows to {csv_path} and '
                 f'{json_path}')
    return csv_path, json_path
