"""Module for initializing the console or file logging of the pipeline
stages.

"""
import logging

from src.config import get_config
from src.exceptions import ConfigError

_LOG_FORMAT = '%(asctime)s %(levelname)s [%(threadName)s] %(name)s: ' \
    '%(message)s'
"""Format of every log record; the thread name tells the verification
workers apart."""


def initialize_logging() -> None:
    """Initialize the logging from the "Logging" configuration section.

    The "file" entry switches from the console to the file named by
    "file_name"; "level" is the name of the lowest level recorded.

    Raises
    ------
    ConfigError
        If the level is not a logging level name.

    """
    section = get_config()['Logging']
    level = logging.getLevelName(section.get('level', 'info').upper())
    if not isinstance(level, int):
        raise ConfigError(f'unknown logging level {section.get("level")}')
    log_file = (section.get('file_name', 'graftcert.log')
                if section.getboolean('file') else None)
    logging.basicConfig(level=level, filename=log_file, format=_LOG_FORMAT)
