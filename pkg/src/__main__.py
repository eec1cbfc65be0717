"""Linearity grafting and certification pipeline entry point.

"""
import argparse
import datetime
import logging
import sys
import typing

from src.data.exceptions import DatasetParseError
from src.database import initialize_database
from src.database.exceptions import DatabaseError
from src.domain import SlopeLossVariant
from src.domain import Verdict
from src.domain import WidthMode
from src.exceptions import ArtifactError
from src.exceptions import BaseError
from src.logging import initialize_logging
from src.model.exceptions import ModelError
from src.pipeline import Pipeline
from src.reporting import collect_rows
from src.reporting import write_report
from src.run_config import TARGETS
from src.run_config import load_run_config

_logger = logging.getLogger(__name__)
"""Logger for this module."""

EXIT_SUCCESS = 0
"""Exit code of a successful stage."""

EXIT_UNKNOWN = 1
"""Exit code of a certification dominated by unknown verdicts."""

EXIT_CONFIG = 2
"""Exit code of an invalid configuration."""

EXIT_IO = 3
"""Exit code of a missing or malformed file."""

STAGES = ('train', 'score', 'select', 'graft', 'finetune', 'attack',
          'certify', 'lipschitz')
"""Subcommands running one pipeline stage."""


def initialize_application():
    """Initialize the application requirements.

    """
    initialize_logging()
    initialize_database()


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='JSON run configuration')
    parser.add_argument('--name', help='run name')
    parser.add_argument('--output-dir', help='run directory')
    parser.add_argument('--model', help='baseline model instead of the '
                        'train stage output')
    parser.add_argument('--target', choices=TARGETS,
                        help='model to attack, certify or bound')
    parser.add_argument('--dataset', help='dataset file')
    parser.add_argument('--format', choices=('csv', 'idx'),
                        help='dataset file format')
    parser.add_argument('--test-dataset', help='separate test dataset file')
    parser.add_argument('--limit', type=int,
                        help='evaluate the first N test samples only')
    parser.add_argument('--eps', type=float, help='radius of the ball')
    parser.add_argument('--seed', type=int, help='run seed')
    parser.add_argument('--mask-in', help='graft set to graft')
    parser.add_argument('--mask-out', help='copy of the selected graft set')
    parser.add_argument('--budget-branches', type=int,
                        help='branch and bound sub-domains per sample')
    parser.add_argument('--budget-seconds', type=float,
                        help='branch and bound seconds per sample')
    parser.add_argument(
        '--slope-loss',
        choices=[variant.value for variant in SlopeLossVariant],
        help='slope loss variant of fine-tuning')
    parser.add_argument('--lip-width',
                        choices=[mode.value for mode in WidthMode],
                        help='width model of the interval Lipschitz bound')


def _overrides(args: argparse.Namespace) -> dict[str, typing.Any]:
    overrides: dict[str, typing.Any] = {}
    data: dict[str, typing.Any] = {}
    budget: dict[str, typing.Any] = {}
    for flag, key in (('name', 'name'), ('output_dir', 'output_dir'),
                      ('model', 'model'), ('target', 'target'),
                      ('eps', 'epsilon'), ('seed', 'seed'),
                      ('mask_in', 'mask_in'), ('mask_out', 'mask_out'),
                      ('lip_width', 'width_mode')):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    for flag, key in (('dataset', 'path'), ('format', 'format'),
                      ('test_dataset', 'test_path'), ('limit', 'limit')):
        if getattr(args, flag) is not None:
            data[key] = getattr(args, flag)
    if data:
        overrides['data'] = data
    if args.budget_branches is not None:
        budget['max_branches'] = args.budget_branches
    if args.budget_seconds is not None:
        budget['max_seconds'] = args.budget_seconds
    if budget:
        overrides['suite'] = {'budget': budget}
    if args.slope_loss is not None:
        overrides['finetune'] = {'slope_loss': args.slope_loss}
    return overrides


def build_parser() -> argparse.ArgumentParser:
    """Build the command-line parser.

    """
    parser = argparse.ArgumentParser(
        prog='graftcert',
        description='Lipschitz-aware linearity grafting and certification')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for stage in STAGES:
        _add_run_arguments(
            subparsers.add_parser(stage, help=f'run the {stage} stage'))
    report = subparsers.add_parser('report',
                                   help='merge the metrics of several runs')
    report.add_argument('runs', nargs='+', help='run directories')
    report.add_argument('--out', default='report',
                        help='report path without extension')
    return parser


def run_stage(args: argparse.Namespace) -> int:
    """Run one pipeline stage.

    Returns
    -------
    int
        EXIT_UNKNOWN when unknown verdicts outnumber decided ones,
        EXIT_SUCCESS otherwise.

    """
    if args.command == 'report':
        write_report(collect_rows(args.runs), args.out)
        return EXIT_SUCCESS
    config = load_run_config(args.config, _overrides(args))
    pipeline = Pipeline(config)
    _logger.info(f'running the {args.command} stage of {config.name}')
    if args.command != 'certify':
        getattr(pipeline, args.command)()
        return EXIT_SUCCESS
    _, records = pipeline.certify()
    verdicts = [
        record.certificate.verdict for record in records
        if record.certificate is not None
    ]
    unknown = sum(1 for verdict in verdicts if verdict is Verdict.UNKNOWN)
    if unknown > len(verdicts) - unknown:
        _logger.warning(f'{unknown} of {len(verdicts)} certifications ended '
                        'unknown')
        return EXIT_UNKNOWN
    return EXIT_SUCCESS


def exit_code(error: BaseException) -> int:
    """Get the exit code of an error. Missing or malformed files map to
    EXIT_IO and every other error to EXIT_CONFIG.

    """
    if isinstance(error, (ArtifactError, OSError, ModelError,
                          DatasetParseError, DatabaseError)):
        return EXIT_IO
    return EXIT_CONFIG


def main(argv: typing.Optional[list[str]] = None) -> int:
    """Parse the command line and run the requested subcommand.

    """
    args = build_parser().parse_args(argv)
    try:
        return run_stage(args)
    except ArtifactError as error:
        _logger.error(f'{error} (stage: {error.stage})')
        return EXIT_IO
    except (BaseError, OSError, ValueError) as error:
        _logger.error(f'{type(error).__name__}: {error}')
        return exit_code(error)


if __name__ == "__main__":
    initialize_application()
    _logger.info(
        f'===========NEW RUN STARTED ON {datetime.datetime.now()}===========')
    code = main()
    _logger.info(
        f'===========RUN FINISHED ON {datetime.datetime.now()}===========')
    sys.exit(code)
