"""Module that defines differentiation-specific exceptions.

"""
from src.exceptions import BaseError


class AutodiffError(BaseError):
    """Base exception class for all differentiation errors.

    """


class UnsupportedPrimitiveError(AutodiffError):
    """Exception class for operations without a registered primitive.

    """


class NumericError(AutodiffError):
    """Exception class for non-finite values produced during the forward
    pass.

    """
    def __init__(self, node: int, primitive: str):
        super().__init__(
            f'non-finite value at node {node} (primitive: {primitive})')
        self.node = node
        self.primitive = primitive
