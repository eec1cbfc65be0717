"""Module for the CLI which manages the certificate ledger.

"""
import argparse
import logging

from src.database import initialize_database
from src.database.access import delete_certificates
from src.database.access import get_certificate_groups
from src.logging import initialize_logging

_logger = logging.getLogger(__name__)
"""Logger for this module."""


def view_data():
    """View which certificates are saved.

    """
    groups = get_certificate_groups()
    if len(groups) == 0:
        print('No certificates are saved.')
        return
    print(f'There are {len(groups)} certified runs saved')
    for group in groups:
        print(f'model {group.model_hash[:12]} epsilon {group.epsilon} '
              f'budget {group.budget}: {group.count} certificates')


def delete_data(model_hash: str):
    """Delete the certificates of a model.

    Parameters
    ----------
    model_hash : str
        The hash of the model whose certificates are deleted.

    """
    number_of_deleted_certificates = delete_certificates(model_hash)
    print(f'{number_of_deleted_certificates} certificates have been '
          'deleted.')


def main():
    parser = argparse.ArgumentParser(description="Certificate Ledger CLI")
    parser.add_argument('--runs', action='store_true',
                        help='View which certificates are saved')
    parser.add_argument("--delete", metavar='model_hash',
                        help='Delete the certificates of a model')

    args = parser.parse_args()

    if args.runs:
        view_data()
    elif args.delete:
        delete_data(args.delete)
    else:
        print('No action specified. Use --runs or --delete')


if __name__ == "__main__":
    initialize_database()
    initialize_logging()
    try:
        main()
    except Exception:
        _logger.error('error when using the CLI', exc_info=True)
