"""Module that defines dataset-specific exceptions.

"""
from src.exceptions import BaseError


class DatasetParseError(BaseError):
    """Exception class for malformed dataset files.

    """
