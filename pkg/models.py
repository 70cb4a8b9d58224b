from datetime import datetime
from typing import Any, Dict, List, Optional

from sqlalchemy import DateTime, ForeignKey, Integer, String, create_engine, select
from sqlalchemy.engine import Engine
from sqlalchemy.orm import DeclarativeBase, Mapped, Session, mapped_column, relationship


class Base(DeclarativeBase):
    pass


class Run(Base):
    __tablename__ = 'runs'

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    config_hash: Mapped[str] = mapped_column(String(64), index=True, nullable=False)
    experiment: Mapped[str] = mapped_column(String(32), nullable=False)
    master_seed: Mapped[str] = mapped_column(String(24), nullable=False)  # up to 2**64, kept as text
    code_version: Mapped[str] = mapped_column(String(32), default='unknown')
    status: Mapped[str] = mapped_column(String(16), default='running')  # running/success/failed
    started_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.utcnow)
    finished_at: Mapped[Optional[datetime]] = mapped_column(DateTime)

    outputs: Mapped[List['RunOutput']] = relationship(back_populates='run', cascade='all, delete-orphan',
                                                      order_by='RunOutput.path')

    def __repr__(self):
        return f'<Run {self.experiment} {self.config_hash[:12]} {self.status}>'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'config_hash': self.config_hash,
            'experiment': self.experiment,
            'master_seed': self.master_seed,
            'code_version': self.code_version,
            'status': self.status,
            'started_at': self.started_at.isoformat() if self.started_at else None,
            'finished_at': self.finished_at.isoformat() if self.finished_at else None,
            'outputs': [o.to_dict() for o in self.outputs],
        }


class RunOutput(Base):
    __tablename__ = 'run_outputs'

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    run_id: Mapped[int] = mapped_column(ForeignKey('runs.id'), nullable=False)
    path: Mapped[str] = mapped_column(String(256), nullable=False)
    rows: Mapped[int] = mapped_column(Integer, default=0)
    sha256: Mapped[Optional[str]] = mapped_column(String(64))

    run: Mapped[Run] = relationship(back_populates='outputs')

    def __repr__(self):
        return f'<RunOutput {self.path} rows={self.rows}>'

    def to_dict(self) -> Dict[str, Any]:
        return {'path': self.path, 'rows': self.rows, 'sha256': self.sha256}


def ledger_engine(db_path: str) -> Engine:
    engine = create_engine(f'sqlite:///{db_path}')
    Base.metadata.create_all(engine)
    return engine


def record_run(db_path: str, manifest: Dict[str, Any]) -> int:
    """Store a finished run manifest in the ledger and return the run id"""
    engine = ledger_engine(db_path)
    with Session(engine) as session:
        run = Run(
            config_hash=manifest['config_hash'],
            experiment=manifest['experiment'],
            master_seed=str(manifest['master_seed']),
            code_version=manifest.get('code_version', 'unknown'),
            status=manifest.get('status', 'success'),
            started_at=datetime.fromisoformat(manifest['started_at']),
            finished_at=datetime.fromisoformat(manifest['finished_at']) if manifest.get('finished_at') else None,
        )
        for out in manifest.get('outputs', []):
            run.outputs.append(RunOutput(path=out['path'], rows=out['rows'], sha256=out.get('sha256')))
        session.add(run)
        session.commit()
        run_id = run.id
    engine.dispose()
    return run_id


def runs_for_hash(db_path: str, config_hash: str) -> List[Dict[str, Any]]:
    engine = ledger_engine(db_path)
    with Session(engine) as session:
        runs = session.scalars(select(Run).where(Run.config_hash == config_hash).order_by(Run.id)).all()
        result = [r.to_dict() for r in runs]
    engine.dispose()
    return result
