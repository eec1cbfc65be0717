"""Module that defines grafting-specific exceptions.

"""
from src.exceptions import BaseError


class GraftingError(BaseError):
    """Base exception class for all grafting errors.

    """


class ScoreError(GraftingError):
    """Exception class for scores requested over empty sets.

    """


class SelectionConfigError(GraftingError):
    """Exception class for invalid selection ratios.

    """


class GraftError(GraftingError):
    """Exception class for graft sets that do not fit the network.

    """
