"""
P-value store: SQLAlchemy models over SQLite (WAL mode).

One SuiteRun row per stored suite run, with its parameters, and one PValueRecord
row per P-value. Engines and sessionmakers are cached per database path. The
path defaults to RC4SIM_DB_PATH (./data/pvalues.db) and can be switched with
configure().
"""

import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional, Set

from sqlalchemy import (
    Boolean,
    Column,
    DateTime,
    Float,
    ForeignKey,
    Integer,
    String,
    Text,
    create_engine,
)
from sqlalchemy.engine import Engine
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import declarative_base, relationship, sessionmaker
from sqlalchemy.pool import StaticPool
from sqlalchemy.sql import text

from .errors import StoreError

logger = logging.getLogger(__name__)

Base = declarative_base()


class SuiteRun(Base):
    """One stored suite run: corpus shape and test parameters."""
    __tablename__ = "suite_runs"

    id = Column(Integer, primary_key=True, index=True)
    label = Column(String(200), nullable=True)
    samples = Column(Integer, nullable=False)
    bits_per_sample = Column(Integer, nullable=False)
    tests = Column(Text, nullable=False)  # comma-separated test names
    block_length = Column(Integer, nullable=False)
    serial_m = Column(Integer, nullable=False)
    apen_m = Column(Integer, nullable=False)
    alpha = Column(Float, nullable=False)
    rc4sim_version = Column(String(20), nullable=False)
    created_at = Column(DateTime, default=datetime.utcnow, nullable=False)

    pvalues = relationship(
        "PValueRecord",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="PValueRecord.id",
    )


class PValueRecord(Base):
    """One P-value of one test stream on one sample."""
    __tablename__ = "pvalues"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("suite_runs.id"), nullable=False, index=True)
    test_name = Column(String(80), nullable=False, index=True)
    sample_index = Column(Integer, nullable=False)
    p_value = Column(Float, nullable=False)
    external = Column(Boolean, nullable=False, default=False)

    run = relationship("SuiteRun", back_populates="pvalues")


class SchemaVersion(Base):
    """
    Track store schema version.
    A store written by a newer schema is refused.
    """
    __tablename__ = "schema_version"

    id = Column(Integer, primary_key=True, index=True)
    version = Column(Integer, nullable=False, index=True)
    applied_at = Column(DateTime, default=datetime.utcnow, nullable=False)
    rc4sim_version = Column(String(20), nullable=False)
    description = Column(Text, nullable=True)


DB_PATH: Optional[str] = None

# Per-db cache, keyed by absolute db_path.
_ENGINE_BY_DB_PATH: Dict[str, Engine] = {}
_SESSIONMAKER_BY_DB_PATH: Dict[str, sessionmaker] = {}
_INITIALIZED_DB_PATHS: Set[str] = set()


def configure(db_path: Optional[str]):
    """Select the store used by get_db() and SessionLocal() without a path."""
    global DB_PATH
    DB_PATH = db_path


def get_db_path() -> str:
    """Configured path, else RC4SIM_DB_PATH, else ./data/pvalues.db."""
    if DB_PATH is not None:
        return DB_PATH
    from .config import load_settings
    return load_settings().db_path


def _normalize_db_path(db_path: str) -> str:
    return str(Path(db_path).expanduser().resolve())


def _create_engine_for_db_path(db_path: str) -> Engine:
    eng = create_engine(
        f"sqlite:///{db_path}",
        connect_args={
            "timeout": 15,
            "check_same_thread": False,
        },
        poolclass=StaticPool,
        echo=False,
    )
    with eng.connect() as conn:
        conn.execute(text("PRAGMA journal_mode=WAL"))
        conn.execute(text("PRAGMA busy_timeout=15000"))
        conn.commit()
    return eng


def _get_or_create_engine_and_sessionmaker(db_path: str) -> tuple[Engine, sessionmaker]:
    norm = _normalize_db_path(db_path)
    if norm in _ENGINE_BY_DB_PATH and norm in _SESSIONMAKER_BY_DB_PATH:
        return _ENGINE_BY_DB_PATH[norm], _SESSIONMAKER_BY_DB_PATH[norm]

    Path(norm).parent.mkdir(parents=True, exist_ok=True)
    eng = _create_engine_for_db_path(norm)
    maker = sessionmaker(autocommit=False, autoflush=False, bind=eng)
    _ENGINE_BY_DB_PATH[norm] = eng
    _SESSIONMAKER_BY_DB_PATH[norm] = maker
    return eng, maker


def get_db_schema_version(db) -> int:
    """Latest recorded schema version, 0 for a fresh store."""
    try:
        latest = db.query(SchemaVersion).order_by(SchemaVersion.version.desc()).first()
        return latest.version if latest else 0
    except SQLAlchemyError:
        return 0


def set_db_schema_version(db, version: int, app_version: str, description: str = None):
    db.add(SchemaVersion(version=version, rc4sim_version=app_version, description=description))
    db.commit()


def init_db(db_path: Optional[str] = None):
    """Create tables and record the schema version; refuse a store from a newer schema."""
    from .version import STORE_SCHEMA_VERSION, __version__, get_changelog

    path = db_path or get_db_path()
    eng, maker = _get_or_create_engine_and_sessionmaker(path)
    Base.metadata.create_all(bind=eng)

    db = maker()
    try:
        current_version = get_db_schema_version(db)
        if current_version == 0:
            changelog = get_changelog(STORE_SCHEMA_VERSION)
            description = changelog.get("description", "Initial setup") if changelog else "Initial setup"
            set_db_schema_version(db, STORE_SCHEMA_VERSION, __version__, description)
            logger.info("store %s initialized with schema v%d", path, STORE_SCHEMA_VERSION)
        elif current_version > STORE_SCHEMA_VERSION:
            raise StoreError(
                f"store {path} has schema v{current_version}, newer than this RC4Sim (v{STORE_SCHEMA_VERSION})"
            )
    finally:
        db.close()
    _INITIALIZED_DB_PATHS.add(_normalize_db_path(path))


def SessionLocal(db_path: Optional[str] = None):
    """
    Return a new SQLAlchemy Session on the given store (or the configured one),
    initializing the schema on first use of each path.
    """
    path = db_path or get_db_path()
    _, maker = _get_or_create_engine_and_sessionmaker(path)
    if _normalize_db_path(path) not in _INITIALIZED_DB_PATHS:
        init_db(path)
    return maker()


def get_db():
    """Dependency to get database session."""
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
