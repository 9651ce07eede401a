"""
Store operations for suite runs and their P-values.
These functions are used by the nist command and the web server.
"""

from typing import Dict, Iterable, List, Optional

from sqlalchemy.orm import Session

from .db import PValueRecord, SuiteRun
from .randomness import PVALUES_PER_SAMPLE, summarize_stream
from .schemas import BUILTIN_TESTS, PValue, SuiteConfig, SuiteReport
from .version import __version__


def _new_run(config: SuiteConfig, samples: int, bits_per_sample: int,
             label: Optional[str] = None) -> SuiteRun:
    return SuiteRun(
        label=label,
        samples=samples,
        bits_per_sample=bits_per_sample,
        tests=",".join(config.tests),
        block_length=config.block_length,
        serial_m=config.serial_m,
        apen_m=config.apen_m,
        alpha=config.alpha,
        rc4sim_version=__version__,
    )


def _records(run_id: int, pvalues: Iterable[PValue], external: bool) -> List[PValueRecord]:
    return [
        PValueRecord(
            run_id=run_id,
            test_name=p.test_name,
            sample_index=p.sample_index,
            p_value=p.value,
            external=external,
        )
        for p in pvalues
    ]


def create_run(db: Session, config: SuiteConfig, samples: int, bits_per_sample: int,
               label: Optional[str] = None) -> SuiteRun:
    run = _new_run(config, samples, bits_per_sample, label)
    db.add(run)
    db.commit()
    db.refresh(run)
    return run


def add_pvalues(db: Session, run: SuiteRun, pvalues: Iterable[PValue], external: bool = False) -> int:
    """Append P-values to a run; returns how many were stored."""
    records = _records(run.id, pvalues, external)
    db.add_all(records)
    db.commit()
    return len(records)


def store_report(db: Session, report: SuiteReport, config: SuiteConfig,
                 label: Optional[str] = None) -> SuiteRun:
    """
    Persist every P-value of a suite report under a new run.

    The run and its P-values are written in one transaction; on any failure
    nothing is stored.
    """
    run = _new_run(config, report.samples, report.bits_per_sample, label)
    try:
        db.add(run)
        db.flush()
        for row in report.rows:
            db.add_all(_records(
                run.id,
                (PValue(value=v, test_name=row.test_name, sample_index=i)
                 for v, i in zip(row.pvalues, row.sample_indices)),
                row.external,
            ))
        db.commit()
    except Exception:
        db.rollback()
        raise
    db.refresh(run)
    return run


def get_run(db: Session, run_id: int) -> Optional[SuiteRun]:
    return db.query(SuiteRun).filter(SuiteRun.id == run_id).first()


def list_runs(db: Session, skip: int = 0, limit: int = 100) -> List[SuiteRun]:
    """Stored runs, oldest first."""
    return db.query(SuiteRun).order_by(SuiteRun.id).offset(skip).limit(limit).all()


def get_pvalues(db: Session, run_id: int) -> Dict[str, List[PValue]]:
    """P-values of a run grouped by test name, in insertion order."""
    streams: Dict[str, List[PValue]] = {}
    records = (
        db.query(PValueRecord)
        .filter(PValueRecord.run_id == run_id)
        .order_by(PValueRecord.id)
        .all()
    )
    for r in records:
        streams.setdefault(r.test_name, []).append(
            PValue(value=r.p_value, test_name=r.test_name, sample_index=r.sample_index)
        )
    return streams


def _external_tests(db: Session, run_id: int) -> set:
    rows = (
        db.query(PValueRecord.test_name)
        .filter(PValueRecord.run_id == run_id, PValueRecord.external.is_(True))
        .distinct()
        .all()
    )
    return {name for (name,) in rows}


def report_for_run(db: Session, run_id: int) -> Optional[SuiteReport]:
    """Re-summarise a stored run; None when the run does not exist."""
    run = get_run(db, run_id)
    if run is None:
        return None
    streams = get_pvalues(db, run_id)
    external = _external_tests(db, run_id)

    ordered = [name for name in BUILTIN_TESTS if name in streams and name not in external]
    ordered += sorted(name for name in streams if name not in ordered)

    rows = []
    for name in ordered:
        pvalues = streams[name]
        if name in external:
            samples = len({p.sample_index for p in pvalues})
            per_sample = max(1, len(pvalues) // samples)
        else:
            per_sample = PVALUES_PER_SAMPLE.get(name, 1)
        rows.append(summarize_stream(name, pvalues, per_sample, run.alpha, external=name in external))
    return SuiteReport(samples=run.samples, bits_per_sample=run.bits_per_sample, rows=rows)
