"""Package for the certificate ledger, a database of certificates keyed by
model hash, radius and branch and bound budget.

"""
import contextlib
import logging
import typing

import sqlalchemy.exc
import sqlalchemy.orm

from src.config import get_config
from src.database.exceptions import DatabaseError
from src.database.models import Base

_logger = logging.getLogger(__name__)
"""Logger for this module."""

_engine: typing.Optional[sqlalchemy.Engine] = None
"""Engine of the ledger database."""

_session_maker: typing.Optional[sqlalchemy.orm.sessionmaker] = None
"""Factory object for creating ledger sessions."""


def get_session_maker() -> sqlalchemy.orm.sessionmaker:
    """Get the session maker of the ledger.

    Raises
    ------
    DatabaseError
        If the ledger has not been initialized.

    """
    if _session_maker is None:
        raise DatabaseError('certificate ledger not yet initialized')
    return _session_maker


@contextlib.contextmanager
def ledger_session(
        write: bool = False) -> typing.Iterator[sqlalchemy.orm.Session]:
    """Open a session on the ledger.

    Parameters
    ----------
    write : bool
        Whether the session runs in a transaction that is committed when
        the block ends normally and rolled back otherwise.

    Yields
    ------
    sqlalchemy.orm.Session
        The session.

    Raises
    ------
    DatabaseError
        If the ledger is not initialized or cannot be reached.

    """
    session_maker = get_session_maker()
    try:
        if write:
            with session_maker.begin() as session:
                yield session
        else:
            with session_maker() as session:
                yield session
    except sqlalchemy.exc.OperationalError as error:
        raise DatabaseError(f'certificate ledger unavailable: {error}')


def initialize_database(url: typing.Optional[str] = None) -> None:
    """Open the ledger, creating its tables when they do not exist.
    A previously opened ledger is closed first.

    Parameters
    ----------
    url : str, optional
        The database URL; the "url" entry of the "Database" configuration
        section by default.

    Raises
    ------
    DatabaseError
        If the database cannot be opened.

    """
    global _engine, _session_maker
    if _engine is not None:
        _engine.dispose()
    url = url if url is not None else get_config()['Database']['url']
    _engine = sqlalchemy.create_engine(url)
    try:
        Base.metadata.create_all(_engine)
    except sqlalchemy.exc.OperationalError as error:
        raise DatabaseError(f'cannot open the ledger at {url}: {error}')
    _session_maker = sqlalchemy.orm.sessionmaker(bind=_engine,
                                                 expire_on_commit=False)
    _logger.info(f'certificate ledger at {url}')
