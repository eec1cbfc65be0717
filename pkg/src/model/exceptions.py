"""Module that defines model-specific exceptions.

"""
from src.exceptions import BaseError


class ModelError(BaseError):
    """Base exception class for all model errors.

    """


class ShapeError(ModelError):
    """Exception class for dimension mismatches.

    """


class ModelValidationError(ModelError):
    """Exception class for networks violating a structural invariant.

    """


class ModelParseError(ModelError):
    """Exception class for malformed model files.

    """
    def __init__(self, message: str, field: str):
        super().__init__(f'{message} (field: {field})')
        self.field = field
