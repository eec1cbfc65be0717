"""Module that defines verification-specific exceptions.

"""
from src.exceptions import BaseError


class VerificationError(BaseError):
    """Base exception class for all verification errors.

    """


class BudgetError(VerificationError):
    """Exception class for non-positive verification budgets.

    """


class OracleSizeError(VerificationError):
    """Exception class for networks with too many unstable neurons to
    enumerate.

    """
