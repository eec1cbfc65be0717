"""Module that defines the errors of the certificate ledger.

"""
from src.exceptions import BaseError


class DatabaseError(BaseError):
    """Error raised when the certificate ledger cannot be opened, read or
    written.

    """
    pass


class DuplicateCertificateError(DatabaseError):
    """Error raised when a certificate is recorded twice under the same
    model hash, radius, budget and sample.

    Attributes
    ----------
    model_hash : str
        The hash of the certified model.
    epsilon : str
        The stored form of the radius.
    budget : str
        The stored form of the branch and bound budget.

    """
    def __init__(self, model_hash: str, epsilon: str, budget: str):
        super().__init__(f'certificate already stored for model '
                         f'{model_hash} at epsilon {epsilon} and budget '
                         f'{budget}')
        self.model_hash = model_hash
        self.epsilon = epsilon
        self.budget = budget
