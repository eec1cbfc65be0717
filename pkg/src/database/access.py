"""Module for accessing database records.

"""
import json
import typing

import sqlalchemy.exc

from src.database import ledger_session
from src.database.exceptions import DuplicateCertificateError
from src.database.models import CertificateModel
from src.domain import BabBudget
from src.domain import Certificate
from src.domain import SampleRecord


class CertificateGroup(typing.NamedTuple):
    """Certificates stored for one model, radius and budget.

    """
    model_hash: str
    epsilon: str
    budget: str
    count: int


def budget_key(budget: BabBudget) -> str:
    """Get the stored form of a branch and bound budget.

    """
    return f'{budget.max_branches}/{budget.max_seconds!r}'


def add_certificates(model_hash: str, epsilon: float, budget: BabBudget,
                     records: list[SampleRecord]) -> None:
    """Add the certificates of the given sample records to the database.
    Records without a certificate are skipped.

    Parameters
    ----------
    model_hash : str
        The hash of the certified model.
    epsilon : float
        The radius of the ball.
    budget : BabBudget
        The branch and bound budget.
    records : list of SampleRecord
        The sample records.

    Raises
    ------
    DuplicateCertificateError
        If a certificate of one of the samples is already stored.

    """
    stored_epsilon = repr(float(epsilon))
    values = [{
        'model_hash': model_hash,
        'epsilon': stored_epsilon,
        'budget': budget_key(budget),
        'sample_index': record.index,
        'verdict': record.certificate.verdict.value,
        'certificate': json.dumps(record.certificate.to_dict(),
                                  sort_keys=True)
    } for record in records if record.certificate is not None]
    if not values:
        return
    statement = sqlalchemy.insert(CertificateModel).values(values)
    try:
        with ledger_session(write=True) as session:
            session.execute(statement)
    except sqlalchemy.exc.IntegrityError:
        raise DuplicateCertificateError(model_hash, stored_epsilon,
                                        budget_key(budget))


def get_certificates(model_hash: str, epsilon: float,
                     budget: BabBudget) -> dict[int, Certificate]:
    """Get the stored certificates of a model, radius and budget.

    Returns
    -------
    dict
        The certificates by sample index.

    """
    statement = sqlalchemy.select(CertificateModel).where(
        sqlalchemy.and_(CertificateModel.model_hash == model_hash,
                        CertificateModel.epsilon == repr(float(epsilon)),
                        CertificateModel.budget == budget_key(budget)))
    with ledger_session() as session:
        certificate_models = session.execute(statement).scalars().all()
        return {
            certificate_model.sample_index:
            Certificate.from_dict(json.loads(certificate_model.certificate))
            for certificate_model in certificate_models
        }


def get_certificate_groups() -> list[CertificateGroup]:
    """Get every stored model, radius and budget with its number of
    certificates.

    Returns
    -------
    list of CertificateGroup
        The groups, sorted by model hash, radius and budget.

    """
    statement = sqlalchemy.select(
        CertificateModel.model_hash, CertificateModel.epsilon,
        CertificateModel.budget,
        sqlalchemy.func.count(CertificateModel.sample_index)).group_by(
            CertificateModel.model_hash, CertificateModel.epsilon,
            CertificateModel.budget).order_by(CertificateModel.model_hash,
                                              CertificateModel.epsilon,
                                              CertificateModel.budget)
    with ledger_session() as session:
        rows = session.execute(statement).all()
        return [CertificateGroup(*row) for row in rows]


def delete_certificates(model_hash: str) -> int:
    """Delete all the certificates of a model.

    Returns
    -------
    int
        The number of deleted certificates.

    """
    statement = sqlalchemy.delete(CertificateModel).where(
        CertificateModel.model_hash == model_hash)
    with ledger_session(write=True) as session:
        result = session.execute(statement)
        return result.rowcount
