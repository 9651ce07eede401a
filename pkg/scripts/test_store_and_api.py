"""
P-value store and the read-only HTTP API.
Uses a temporary SQLite file per test so no real store is touched.
"""

import pytest
from fastapi.testclient import TestClient
from pydantic import ValidationError

from src import crud, db
from src.errors import StoreError
from src.randomness import generate_corpus, run_suite
from src.schemas import PValue, SuiteConfig
from src.version import STORE_SCHEMA_VERSION, WIRE_PROTOCOL_VERSION, __version__
from src.web_server import app

CONFIG = SuiteConfig(serial_m=5, apen_m=3)


@pytest.fixture(scope="module")
def report():
    external = {"fft": [PValue(value=(i + 0.5) / 6, test_name="fft", sample_index=i) for i in range(6)]}
    return run_suite(generate_corpus(6, 8000), CONFIG, external)


@pytest.fixture
def store_path(tmp_path):
    path = str(tmp_path / "pvalues.db")
    db.configure(path)
    yield path
    db.configure(None)


@pytest.fixture
def client(store_path):
    with TestClient(app) as c:
        yield c


def test_store_round_trip(store_path, report):
    session = db.SessionLocal(store_path)
    try:
        run = crud.store_report(session, report, CONFIG, label="round trip")
        assert run.rc4sim_version == __version__
        assert run.tests == ",".join(CONFIG.tests)
        restored = crud.report_for_run(session, run.id)
    finally:
        session.close()
    assert restored.model_dump() == report.model_dump()
    assert restored.row("fft").external


def test_pvalues_grouped_by_test(store_path, report):
    session = db.SessionLocal(store_path)
    try:
        run = crud.store_report(session, report, CONFIG)
        streams = crud.get_pvalues(session, run.id)
    finally:
        session.close()
    assert len(streams["serial"]) == 12
    assert [p.sample_index for p in streams["serial"][:4]] == [0, 0, 1, 1]
    assert len(streams["fft"]) == 6


def test_failed_store_leaves_no_partial_run(store_path, report):
    broken = report.model_copy(deep=True)
    broken.rows[-1].pvalues[0] = 1.5
    session = db.SessionLocal(store_path)
    try:
        with pytest.raises(ValidationError):
            crud.store_report(session, broken, CONFIG, label="broken")
        assert crud.list_runs(session) == []
        assert session.query(db.PValueRecord).count() == 0

        run_id = crud.store_report(session, report, CONFIG, label="after").id
        assert [r.label for r in crud.list_runs(session)] == ["after"]
        assert crud.report_for_run(session, run_id).total_pvalues == report.total_pvalues
    finally:
        session.close()


def test_create_run_then_add_pvalues(store_path):
    session = db.SessionLocal(store_path)
    try:
        run = crud.create_run(session, SuiteConfig(tests="frequency"), 3, 800, label="manual")
        stored = crud.add_pvalues(
            session, run, [PValue(value=v, test_name="frequency", sample_index=i) for i, v in enumerate((0.2, 0.5, 0.9))]
        )
        assert stored == 3
        restored = crud.report_for_run(session, run.id)
    finally:
        session.close()
    assert restored.row("frequency").pvalues == [0.2, 0.5, 0.9]
    assert not restored.row("frequency").external


def test_missing_run(store_path):
    session = db.SessionLocal(store_path)
    try:
        assert crud.get_run(session, 42) is None
        assert crud.report_for_run(session, 42) is None
    finally:
        session.close()


def test_schema_version_recorded(store_path):
    session = db.SessionLocal(store_path)
    try:
        assert db.get_db_schema_version(session) == STORE_SCHEMA_VERSION
    finally:
        session.close()


def test_newer_store_is_refused(store_path):
    session = db.SessionLocal(store_path)
    try:
        db.set_db_schema_version(session, STORE_SCHEMA_VERSION + 1, "99.0.0", "from the future")
    finally:
        session.close()
    with pytest.raises(StoreError):
        db.init_db(store_path)


def test_api_version(client):
    body = client.get("/api/version").json()
    assert body == {
        "version": __version__,
        "wire_protocol": WIRE_PROTOCOL_VERSION,
        "store_schema": STORE_SCHEMA_VERSION,
    }


def test_api_keystream(client):
    body = client.get("/api/keystream", params={"n": 10, "key_hex": "4b6579", "engine": "hw"}).json()
    assert body["keystream"] == "eb9f7781b734ca72a719"
    assert body["engine"] == "hw"


@pytest.mark.parametrize(
    "params",
    [{"n": 0}, {"n": 4, "key_hex": "zz"}, {"n": 4, "engine": "quantum"}],
)
def test_api_keystream_rejects(client, params):
    assert client.get("/api/keystream", params=params).status_code == 422


def test_api_cycles(client):
    body = client.get("/api/cycles", params={"n": 1000}).json()
    assert body["total_clocks"] == 1258
    assert body["rc4_per_byte"] == "629/500"


def test_api_designs(client):
    rows = client.get("/api/designs", params={"n": 1000}).json()
    assert [r["design"] for r in rows] == [
        "three_clock_per_byte", "pipelined_three_init", "two_byte_two_clock", "one_byte_one_clock",
    ]


def test_api_trace(client):
    body = client.get("/api/trace", params={"clocks": 2, "key_hex": "4b6579"}).json()
    assert len(body["events"]) == 4
    assert body["events"][2]["z"] == 0xEB
    assert body["lines"][0].startswith("0\trising\tprga")
    assert client.get("/api/trace", params={"clocks": 5000}).status_code == 422


def test_api_power(client):
    body = client.get("/api/power", params={"n": 100}).json()
    assert body["comparison"]["gated"]["ksa_clock_toggles"] == 514
    assert body["comparison"]["ungated"]["prga_clock_toggles"] == 716
    assert body["comparison"]["clock_saving_fraction"] == "1/2"
    assert len(body["reference"]["columns"]) == 3


def test_api_runs(client, store_path, report):
    assert client.get("/api/runs").json() == []
    session = db.SessionLocal(store_path)
    try:
        run_id = crud.store_report(session, report, CONFIG, label="api").id
    finally:
        session.close()

    runs = client.get("/api/runs").json()
    assert [r["label"] for r in runs] == ["api"]

    body = client.get(f"/api/runs/{run_id}").json()
    assert body["run"]["samples"] == 6
    assert body["total_pvalues"] == report.total_pvalues
    assert [row["test_name"] for row in body["report"]["rows"]][-1] == "fft"


def test_api_run_not_found(client):
    response = client.get("/api/runs/999")
    assert response.status_code == 404
    assert response.json()["detail"] == "Run not found"
