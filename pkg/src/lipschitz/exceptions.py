"""Module that defines Lipschitz-specific exceptions.

"""
from src.exceptions import BaseError


class LipschitzError(BaseError):
    """Exception class for Lipschitz estimates over degenerate balls.

    """
