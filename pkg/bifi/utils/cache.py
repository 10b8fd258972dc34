import logging
from typing import Dict, Sequence

import numpy as np
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from bifi.models.snapshots import Base, Snapshot
from bifi.utils.hashing import params_key


class SnapshotCache:
    """
    SQLite store of solver outputs, so that expensive HF reference and
    validation solves run once per configuration.
    """

    def __init__(self, db_path: str):
        """Open (or create) the cache database at db_path."""
        self.db_path = db_path
        self._initialize_database()

    def _initialize_database(self) -> None:
        self.engine = create_engine(f'sqlite:///{self.db_path}')
        Base.metadata.create_all(self.engine)
        self.Session = sessionmaker(bind=self.engine)
        logging.info(f"Using snapshot cache at {self.db_path}")

    def lookup(self, config_key: str, fidelity: str, params: np.ndarray) -> Dict[int, np.ndarray]:
        """
        Cached outputs for the rows of params.

        Returns:
            Mapping from row index to the stored vector, for the rows found
        """
        wanted = {params_key(z): i for i, z in enumerate(np.atleast_2d(params))}
        found = {}
        session = self.Session()
        try:
            rows = session.query(Snapshot).filter(
                Snapshot.config_key == config_key, Snapshot.fidelity == fidelity
            ).all()
            for row in rows:
                index = wanted.get(row.params_key)
                if index is not None:
                    found[index] = np.frombuffer(row.values, dtype="<f8").copy()
        finally:
            session.close()
        return found

    def store(self, config_key: str, fidelity: str, params: np.ndarray, values: Sequence[np.ndarray]) -> None:
        session = self.Session()
        seen = set()
        try:
            for z, u in zip(np.atleast_2d(params), values):
                key = params_key(z)
                if key in seen or self._existing(session, config_key, fidelity, key) is not None:
                    continue
                seen.add(key)
                u = np.ascontiguousarray(u, dtype="<f8")
                session.add(Snapshot(
                    config_key=config_key,
                    fidelity=fidelity,
                    params_key=key,
                    cells=u.shape[0],
                    values=u.tobytes(),
                ))
            session.commit()
            logging.info(f"Cached {len(seen)} {fidelity} snapshots")
        except Exception as e:
            session.rollback()
            raise e
        finally:
            session.close()

    @staticmethod
    def _existing(session, config_key: str, fidelity: str, key: str):
        return session.query(Snapshot).filter_by(config_key=config_key, fidelity=fidelity, params_key=key).first()

    def count(self) -> int:
        session = self.Session()
        try:
            return session.query(Snapshot).count()
        finally:
            session.close()
