"""
Command-line surface: outputs, exit codes and file handling.
"""

import pytest

from src import crud
from src.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from src.db import SessionLocal
from src.port_manager import find_available_port


@pytest.fixture(autouse=True)
def _isolated_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("RC4SIM_DB_PATH", str(tmp_path / "default.db"))
    monkeypatch.setenv("RC4SIM_CORPUS_DIR", str(tmp_path / "corpus"))
    monkeypatch.delenv("RC4SIM_DEFAULT_KEY_HEX", raising=False)
    monkeypatch.delenv("RC4SIM_WORKERS", raising=False)


def test_keystream_hw(capsys):
    assert main(["keystream", "--key-hex", "4b6579", "--bytes", "10", "--engine", "hw"]) == EXIT_OK
    assert capsys.readouterr().out == "eb9f7781b734ca72a719\n"


def test_keystream_key_file(tmp_path, capsys):
    key_file = tmp_path / "key.bin"
    key_file.write_bytes(b"Wiki")
    assert main(["keystream", "--key-file", str(key_file), "-n", "5"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "6044db6d41"


def test_keystream_needs_a_key(capsys):
    assert main(["keystream", "--bytes", "4"]) == EXIT_USAGE
    assert "key is required" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["keystream", "--key-hex", "zz", "--bytes", "4"],
        ["keystream", "--key-hex", "4b6579", "--bytes", "-1"],
        ["keystream", "--key-hex", "4b6579", "--key-file", "k", "--bytes", "1"],
        ["cycles", "--bytes", "0"],
        ["send", "--key-hex", "4b6579"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert "wire protocol v1" in capsys.readouterr().out


def test_encrypt_files(tmp_path):
    src = tmp_path / "plain.txt"
    src.write_bytes(b"Plaintext")
    out = tmp_path / "cipher.hex"
    assert main(["encrypt", "--key-hex", "4b6579", "--in", str(src), "--out", str(out), "--hex"]) == EXIT_OK
    assert out.read_text() == "bbf316e8d940af0ad3\n"


def test_encrypt_round_trip_with_hardware(tmp_path):
    src = tmp_path / "plain.bin"
    src.write_bytes(bytes(range(256)) * 3)
    ct = tmp_path / "ct.bin"
    back = tmp_path / "back.bin"
    assert main(["encrypt", "--key-hex", "0102030405", "--engine", "hw", "--in", str(src), "--out", str(ct)]) == 0
    assert main(["encrypt", "--key-hex", "0102030405", "--in", str(ct), "--out", str(back)]) == 0
    assert back.read_bytes() == src.read_bytes()


def test_encrypt_missing_input():
    assert main(["encrypt", "--key-hex", "4b6579", "--in", "no-such-file"]) == EXIT_RUNTIME


def test_cycles(capsys):
    assert main(["cycles", "--bytes", "1000", "--compare"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "total_clocks=1258" in out
    assert "rc4_per_byte=629/500" in out
    assert "one_byte_one_clock" in out
    assert "three_clock_per_byte" in out


def test_cycles_uses_configured_default_key(monkeypatch):
    monkeypatch.setenv("RC4SIM_DEFAULT_KEY_HEX", "zz")
    assert main(["cycles", "--bytes", "5"]) == EXIT_USAGE


def test_power_csv(capsys):
    assert main(["power", "--bytes", "100", "--csv"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "counter,ungated,gated"
    assert "ksa_clock_toggles,716,514" in lines
    assert "prga_clock_toggles,716,202" in lines


def test_power_text(capsys):
    assert main(["power", "--bytes", "100"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "clock_saving_fraction=1/2" in out
    assert "measured clock gating saving" in out


def test_trace(tmp_path, capsys):
    assert main(["trace", "--clocks", "2"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4
    assert lines[0].split("\t")[:3] == ["0", "rising", "prga"]

    out = tmp_path / "ksa.tsv"
    assert main(["trace", "--unit", "ksa", "--clocks", "500", "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 514


def test_corpus_command(tmp_path, capsys):
    assert main(["corpus", "--samples", "2", "--bits", "800", "--out", str(tmp_path / "c")]) == EXIT_OK
    assert (tmp_path / "c" / "manifest.csv").exists()
    assert (tmp_path / "c" / "sample_1.bin").stat().st_size == 100


def test_nist_report_and_store(tmp_path, capsys):
    store = tmp_path / "runs.db"
    report = tmp_path / "out" / "report.txt"
    argv = [
        "nist", "--samples", "5", "--bits", "8000",
        "--serial-m", "5", "--apen-m", "3",
        "--report", str(report), "--store", str(store), "--label", "desk",
    ]
    assert main(argv) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("samples=5 bits_per_sample=8000")
    assert report.read_text() == out

    db = SessionLocal(str(store))
    try:
        runs = crud.list_runs(db)
        assert [r.label for r in runs] == ["desk"]
        stored = crud.report_for_run(db, runs[0].id)
        assert stored.total_pvalues == 5 * 8
    finally:
        db.close()


def test_nist_from_saved_corpus_with_external(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    pvalues = tmp_path / "external.csv"
    pvalues.write_text("".join(f"fft,{i},{(i + 0.5) / 5}\n" for i in range(5)))
    base = ["nist", "--tests", "frequency,runs", "--serial-m", "5", "--apen-m", "3"]
    assert main(base + ["--samples", "5", "--bits", "8000", "--save-corpus", str(corpus)]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(base + ["--corpus", str(corpus), "--pvalues", str(pvalues)]) == EXIT_OK
    second = capsys.readouterr().out
    assert "fft*" in second
    assert first.splitlines()[3] == second.splitlines()[3]


def test_nist_bad_parameters(tmp_path):
    assert main(["nist", "--samples", "2", "--bits", "800", "--tests", "fft"]) == EXIT_USAGE
    assert main(["nist", "--samples", "2", "--bits", "801"]) == EXIT_USAGE
    assert main(["nist", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["nist", "--corpus", str(tmp_path / "nowhere")]) == EXIT_RUNTIME


@pytest.mark.parametrize("damage", ["corpus", "pvalues", "builtin_name"])
def test_nist_corrupt_data_files_are_runtime_errors(tmp_path, capsys, damage):
    corpus = tmp_path / "corpus"
    pvalues = tmp_path / "external.csv"
    pvalues.write_text("fft,0,0.5\n")
    assert main(["corpus", "--samples", "2", "--bits", "800", "--out", str(corpus)]) == EXIT_OK
    if damage == "corpus":
        (corpus / "sample_1.bin").write_bytes(b"\x00" * 3)
    elif damage == "pvalues":
        pvalues.write_text("fft,0,not-a-number\n")
    else:
        pvalues.write_text("frequency,0,0.5\n")
    capsys.readouterr()
    argv = ["nist", "--tests", "frequency", "--corpus", str(corpus), "--pvalues", str(pvalues)]
    assert main(argv) == EXIT_RUNTIME
    assert "❌" in capsys.readouterr().err


def test_nist_config_file(tmp_path, capsys):
    config = tmp_path / "suite.json"
    config.write_text('{"tests": ["frequency"], "alpha": 0.05}')
    assert main(["nist", "--config", str(config), "--samples", "3", "--bits", "800"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "frequency" in out
    assert "runs" not in out


def test_send_to_closed_port(capsys):
    port = find_available_port(22000)
    assert main(["send", "--connect", f"127.0.0.1:{port}", "--key-hex", "4b6579", "--in", __file__]) == EXIT_RUNTIME
    assert "cannot connect" in capsys.readouterr().err
