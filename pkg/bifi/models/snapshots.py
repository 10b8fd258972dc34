from datetime import datetime

from sqlalchemy import Column, DateTime, Integer, LargeBinary, String, UniqueConstraint
from sqlalchemy.orm import declarative_base

# Base model for SQLAlchemy
Base = declarative_base()


class Snapshot(Base):
    """One solver output u(z) on its grid, keyed by the solver configuration and exact parameter bytes."""
    __tablename__ = 'snapshots'

    snapshot_id = Column(Integer, primary_key=True, autoincrement=True)
    config_key = Column(String, nullable=False, index=True)
    fidelity = Column(String, nullable=False)
    params_key = Column(String, nullable=False)
    cells = Column(Integer, nullable=False)
    values = Column(LargeBinary, nullable=False)
    created_at = Column(DateTime, nullable=False, default=datetime.utcnow)

    __table_args__ = (UniqueConstraint('config_key', 'fidelity', 'params_key'),)
