"""
FastAPI inspection server for RC4Sim.
Read-only JSON views of the simulator, the gating comparison and the stored suite runs.
"""

import logging
from typing import Optional

import uvicorn
from fastapi import Depends, FastAPI, HTTPException, Query
from sqlalchemy.orm import Session

from . import crud
from .activity_power import compare_gating, reference_power
from .config import load_settings
from .db import get_db, get_db_path, init_db
from .errors import USAGE_ERRORS
from .hw_model import Rc4Hardware, compare_designs, rc4_hw_encrypt, trace_collect
from .rc4_core import RC4Key
from .schemas import EngineKind, HwUnit, SuiteRunInfo
from .transport import make_engine
from .version import STORE_SCHEMA_VERSION, WIRE_PROTOCOL_VERSION, __version__

logger = logging.getLogger(__name__)

MAX_TRACE_CLOCKS = 4096
MAX_KEYSTREAM_BYTES = 65536
MAX_POWER_BYTES = 100000

app = FastAPI(
    title="RC4Sim",
    description="Cycle-accurate RC4 hardware model, switching activity and randomness reports",
    version=__version__,
)


def _key(key_hex: Optional[str]) -> RC4Key:
    """Requested key, or the configured default key; bad keys are a 422."""
    text = key_hex if key_hex is not None else load_settings().default_key_hex
    try:
        return RC4Key.from_hex(text)
    except USAGE_ERRORS as e:
        raise HTTPException(status_code=422, detail=str(e))


@app.get("/api/version")
async def api_version():
    return {
        "version": __version__,
        "wire_protocol": WIRE_PROTOCOL_VERSION,
        "store_schema": STORE_SCHEMA_VERSION,
    }


@app.get("/api/keystream")
def api_keystream(
    n: int = Query(16, ge=1, le=MAX_KEYSTREAM_BYTES),
    key_hex: Optional[str] = None,
    engine: EngineKind = EngineKind.REFERENCE,
):
    key = _key(key_hex)
    stream = make_engine(engine, key).keystream(n)
    return {"key_hex": key.hex(), "engine": engine.value, "keystream": stream.hex()}


@app.get("/api/cycles")
def api_cycles(n: int = Query(1000, ge=1, le=MAX_KEYSTREAM_BYTES), key_hex: Optional[str] = None):
    _, report = rc4_hw_encrypt(_key(key_hex), bytes(n))
    return report.model_dump(mode="json")


@app.get("/api/designs")
async def api_designs(n: int = Query(1000, ge=1)):
    return [row.model_dump(mode="json") for row in compare_designs(n)]


@app.get("/api/trace")
def api_trace(
    clocks: int = Query(8, ge=0, le=MAX_TRACE_CLOCKS),
    unit: HwUnit = HwUnit.PRGA,
    key_hex: Optional[str] = None,
):
    hw = Rc4Hardware(_key(key_hex))
    if unit is HwUnit.PRGA:
        hw.ksa.run()
        events = trace_collect(hw.prga, clocks)
    else:
        events = trace_collect(hw.ksa, clocks)
    return {"events": [e.model_dump(mode="json") for e in events], "lines": [e.to_line() for e in events]}


@app.get("/api/power")
def api_power(n: int = Query(100, ge=1, le=MAX_POWER_BYTES), key_hex: Optional[str] = None):
    comparison = compare_gating(_key(key_hex), n)
    return {
        "comparison": comparison.model_dump(mode="json"),
        "reference": reference_power().model_dump(mode="json"),
    }


@app.get("/api/runs", response_model=list[SuiteRunInfo])
async def api_list_runs(skip: int = Query(0, ge=0), limit: int = Query(100, ge=1, le=1000),
                        db: Session = Depends(get_db)):
    return crud.list_runs(db, skip=skip, limit=limit)


@app.get("/api/runs/{run_id}")
async def api_get_run(run_id: int, db: Session = Depends(get_db)):
    run = crud.get_run(db, run_id)
    if run is None:
        raise HTTPException(status_code=404, detail="Run not found")
    report = crud.report_for_run(db, run_id)
    return {
        "run": SuiteRunInfo.model_validate(run).model_dump(mode="json"),
        "report": report.model_dump(mode="json"),
        "total_pvalues": report.total_pvalues,
        "total_failures": report.total_failures,
        "all_passed": report.all_passed,
    }


@app.on_event("startup")
async def startup_event():
    """Initialize the P-value store on startup."""
    init_db()
    logger.info("using store %s", get_db_path())


def run_server(host: str, port: int, log_level: str = "info"):
    """Serve the API with uvicorn until interrupted."""
    uvicorn.run(app, host=host, port=port, log_level=log_level)
