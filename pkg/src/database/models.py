"""Module that defines the database models.

"""
import sqlalchemy.orm

from src.domain import Verdict


class Base(sqlalchemy.orm.DeclarativeBase):
    """Base class used for declarative class definitions.

    """
    pass


class CertificateModel(Base):
    """Model class for "certificates". Each instance is the certificate
    of one evaluation sample, for one model, radius and budget.

    """
    __tablename__ = "certificates"

    model_hash: sqlalchemy.orm.Mapped[str] = sqlalchemy.orm.mapped_column(
        primary_key=True)
    epsilon: sqlalchemy.orm.Mapped[str] = sqlalchemy.orm.mapped_column(
        primary_key=True)
    budget: sqlalchemy.orm.Mapped[str] = sqlalchemy.orm.mapped_column(
        primary_key=True)
    sample_index: sqlalchemy.orm.Mapped[int] = sqlalchemy.orm.mapped_column(
        primary_key=True)
    verdict: sqlalchemy.orm.Mapped[int] = sqlalchemy.orm.mapped_column(
        default=Verdict.UNKNOWN.value)
    certificate: sqlalchemy.orm.Mapped[str]
