"""Module that defines training-specific exceptions.

"""
from src.exceptions import BaseError


class TrainingError(BaseError):
    """Exception class for invalid training configurations.

    """
