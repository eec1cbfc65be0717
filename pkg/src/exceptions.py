"""Module that defines general exceptions.

"""


class BaseError(Exception):
    """Base exception class for all errors.

    """


class ConfigError(BaseError):
    """Exception class for invalid run configurations.

    """


class ArtifactError(BaseError):
    """Exception class for missing or unreadable stage artifacts.

    """
    def __init__(self, message: str, stage: str):
        super().__init__(message)
        self.stage = stage
