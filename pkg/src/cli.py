"""
Command-line entry point for RC4Sim.

Results go to standard output; status lines and diagnostics go to standard
error. Exit status: 0 success, 1 usage error, 2 runtime or protocol error.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from . import db as store
from . import crud
from .activity_power import compare_gating, comparison_csv, reference_power
from .config import Settings, load_settings, resolve_suite_config
from .errors import USAGE_ERRORS, InvalidArgumentError, Rc4SimError, TruncationError
from .hw_model import Rc4Hardware, compare_designs, rc4_hw_encrypt, trace_collect
from .port_manager import DEFAULT_HOST, DEFAULT_SERVER_PORT, find_available_port, format_endpoint, is_port_available
from .randomness import (
    CANONICAL_BITS,
    CANONICAL_SAMPLES,
    generate_corpus,
    read_corpus,
    read_pvalue_lines,
    run_suite,
    write_corpus,
)
from .rc4_core import RC4Key, xor_bytes
from .reports import render_activity, render_cycle_report, render_design_table, render_suite_report, render_trace, write_report
from .schemas import EngineKind, HwUnit, SessionConfig, SessionRole
from .transport import make_engine, run_endpoint
from .version import STORE_SCHEMA_VERSION, WIRE_PROTOCOL_VERSION, __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _status(message: str):
    print(message, file=sys.stderr, flush=True)


def _stdout_binary():
    return getattr(sys.stdout, "buffer", None) or sys.stdout


# ---------------------------------------------------------------------------
# Key and engine flags
# ---------------------------------------------------------------------------

def _add_key_flags(p: argparse.ArgumentParser, required: bool):
    group = p.add_mutually_exclusive_group(required=False)
    group.add_argument("--key-hex", metavar="HEX", help="Key as hex text (1..256 octets)")
    group.add_argument("--key-file", metavar="PATH", help="File holding the raw key octets")
    p.set_defaults(key_required=required)


def _add_engine_flag(p: argparse.ArgumentParser):
    p.add_argument(
        "--engine",
        choices=[e.value for e in EngineKind],
        default=EngineKind.REFERENCE.value,
        help="Keystream generator (default: reference)",
    )


def _resolve_key(args, settings: Settings) -> RC4Key:
    if args.key_hex is not None:
        return RC4Key.from_hex(args.key_hex)
    if args.key_file is not None:
        return RC4Key(Path(args.key_file).read_bytes())
    if args.key_required:
        raise InvalidArgumentError("a key is required: pass --key-hex or --key-file")
    return RC4Key.from_hex(settings.default_key_hex)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_keystream(args, settings: Settings) -> int:
    """Print keystream octets as lowercase hex."""
    key = _resolve_key(args, settings)
    stream = make_engine(EngineKind(args.engine), key).keystream(args.bytes)
    print(stream.hex())
    return EXIT_OK


def cmd_encrypt(args, settings: Settings) -> int:
    """Encrypt (or decrypt) a file or standard input."""
    key = _resolve_key(args, settings)
    if args.input:
        data = Path(args.input).read_bytes()
    else:
        data = sys.stdin.buffer.read()
    engine = make_engine(EngineKind(args.engine), key)
    out = xor_bytes(data, engine.keystream(len(data)))
    if args.hex:
        payload = (out.hex() + "\n").encode("ascii")
    else:
        payload = out
    if args.output:
        Path(args.output).write_bytes(payload)
    else:
        sink = _stdout_binary()
        sink.write(payload)
        sink.flush()
    if args.engine == EngineKind.HARDWARE.value and data:
        logger.info("hardware engine spent %d clocks", engine.clocks)
    return EXIT_OK


def cmd_trace(args, settings: Settings) -> int:
    """Print the edge-by-edge trace of one unit."""
    hw = Rc4Hardware(_resolve_key(args, settings))
    if args.unit == HwUnit.PRGA.value:
        hw.ksa.run()
        events = trace_collect(hw.prga, args.clocks)
    else:
        events = trace_collect(hw.ksa, args.clocks)
    text = render_trace(events)
    if args.output:
        write_report(text, args.output)
        _status(f"✓ {len(events)} events written to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_cycles(args, settings: Settings) -> int:
    """Clock accounting for encrypting --bytes octets."""
    key = _resolve_key(args, settings)
    _, report = rc4_hw_encrypt(key, bytes(args.bytes))
    sys.stdout.write(render_cycle_report(report))
    if args.compare:
        sys.stdout.write("\n")
        sys.stdout.write(render_design_table(compare_designs(args.bytes)))
    return EXIT_OK


def cmd_power(args, settings: Settings) -> int:
    """Gated vs ungated switching activity."""
    comparison = compare_gating(_resolve_key(args, settings), args.bytes)
    if args.csv:
        sys.stdout.write(comparison_csv(comparison))
    else:
        sys.stdout.write(render_activity(comparison, reference_power()))
    return EXIT_OK


def cmd_corpus(args, settings: Settings) -> int:
    """Generate a keystream corpus and write it to a directory."""
    out_dir = args.out or settings.corpus_dir
    workers = args.workers or settings.workers
    corpus = generate_corpus(args.samples, args.bits, workers)
    manifest = write_corpus(corpus, out_dir)
    _status(f"✓ {len(corpus)} samples of {args.bits} bits written to {out_dir}")
    print(manifest)
    return EXIT_OK


def cmd_nist(args, settings: Settings) -> int:
    """Run the statistical suite and print the proportion/uniformity report."""
    config = resolve_suite_config(
        args.config,
        settings,
        tests=args.tests,
        block_length=args.block_length,
        serial_m=args.serial_m,
        apen_m=args.apen_m,
        alpha=args.alpha,
        workers=args.workers,
    )
    if args.corpus:
        corpus = read_corpus(args.corpus)
        _status(f"✓ Loaded {len(corpus)} samples from {args.corpus}")
    else:
        samples = args.samples if args.samples is not None else CANONICAL_SAMPLES
        bits = args.bits if args.bits is not None else CANONICAL_BITS
        if samples == CANONICAL_SAMPLES and bits == CANONICAL_BITS:
            _status("🔄 Generating the canonical corpus (300 x 1,342,400 bits); this takes a while")
        corpus = generate_corpus(samples, bits, config.workers)
    if args.save_corpus:
        write_corpus(corpus, args.save_corpus)
        _status(f"✓ Corpus saved to {args.save_corpus}")

    external = None
    if args.pvalues:
        with open(args.pvalues) as f:
            external = read_pvalue_lines(f)
        _status(f"✓ {sum(len(v) for v in external.values())} external P-values for {len(external)} tests")

    report = run_suite(corpus, config, external)
    text = render_suite_report(report)
    sys.stdout.write(text)
    if args.report:
        write_report(text, args.report)
        _status(f"✓ Report written to {args.report}")
    if args.store:
        db = store.SessionLocal(args.store)
        try:
            run = crud.store_report(db, report, config, label=args.label)
            _status(f"✓ Stored as run #{run.id} in {args.store}")
        finally:
            db.close()
    if not report.all_passed:
        _status("⚠️  At least one test failed the proportion or uniformity criterion")
    return EXIT_OK


def _session_config(args, settings: Settings, role: SessionRole) -> SessionConfig:
    key = _resolve_key(args, settings)
    return SessionConfig(
        role=role,
        endpoint=args.listen or args.connect,
        key=key.data,
        engine=EngineKind(args.engine),
        listen=args.listen is not None,
    )


def _on_listening(host: str, port: int):
    _status(f"✓ Listening on {format_endpoint(host, port)}")


def cmd_send(args, settings: Settings) -> int:
    """Encrypt a file or standard input onto the wire."""
    config = _session_config(args, settings, SessionRole.SENDER)
    if args.input:
        with open(args.input, "rb") as source:
            session = asyncio.run(run_endpoint(config, source, _on_listening))
    else:
        session = asyncio.run(run_endpoint(config, sys.stdin.buffer, _on_listening))
    _status(f"✓ Sent {session.bytes_transferred} octets in {session.frames} frames")
    return EXIT_OK


def cmd_recv(args, settings: Settings) -> int:
    """Decrypt a stream from the wire into a file or standard output."""
    config = _session_config(args, settings, SessionRole.RECEIVER)
    if args.output:
        with open(args.output, "wb") as sink:
            session = asyncio.run(run_endpoint(config, sink, _on_listening))
    else:
        sink = _stdout_binary()
        session = asyncio.run(run_endpoint(config, sink, _on_listening))
        sink.flush()
    _status(f"✓ Received {session.bytes_transferred} octets in {session.frames} frames")
    return EXIT_OK


def cmd_serve(args, settings: Settings) -> int:
    """Serve the read-only HTTP inspection API."""
    from .web_server import run_server

    store.configure(args.db or settings.db_path)
    port = args.port
    if port == 0 or not is_port_available(port, args.host):
        port = find_available_port(DEFAULT_SERVER_PORT if port == 0 else port, host=args.host)
    _status(f"✓ Serving on http://{format_endpoint(args.host, port)} (store: {store.get_db_path()})")
    run_server(args.host, port, log_level=settings.log_level.lower())
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="rc4sim",
        description="Cycle-accurate RC4 hardware model with activity, randomness and transport tools",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Keystream from the hardware model
  rc4sim keystream --key-hex 4b6579 --bytes 10 --engine hw

  # Clock accounting and the schedule comparison
  rc4sim cycles --bytes 1000 --compare

  # Gated vs ungated switching activity as CSV
  rc4sim power --bytes 100 --csv

  # Desk-scale randomness run, stored for the web API
  rc4sim nist --samples 100 --bits 1000000 --report out/report.txt --store data/pvalues.db

  # Two-endpoint transport
  rc4sim recv --listen 127.0.0.1:9000 --key-hex 4b6579 --out received.bin
  rc4sim send --connect 127.0.0.1:9000 --key-hex 4b6579 --in message.bin
""",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More log output (repeatable)")
    parser.add_argument(
        "--version",
        action="version",
        version=f"RC4Sim v{__version__} (wire protocol v{WIRE_PROTOCOL_VERSION}, store schema v{STORE_SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("keystream", help="Print keystream octets as hex")
    _add_key_flags(p, required=True)
    _add_engine_flag(p)
    p.add_argument("-n", "--bytes", type=_non_negative, required=True, help="Number of octets")
    p.set_defaults(func=cmd_keystream)

    p = sub.add_parser("encrypt", help="XOR data with the keystream (encrypts and decrypts)")
    _add_key_flags(p, required=True)
    _add_engine_flag(p)
    p.add_argument("--in", dest="input", metavar="PATH", help="Input file (default: standard input)")
    p.add_argument("--out", dest="output", metavar="PATH", help="Output file (default: standard output)")
    p.add_argument("--hex", action="store_true", help="Write the result as lowercase hex")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("trace", help="Edge-by-edge hardware trace")
    _add_key_flags(p, required=False)
    p.add_argument("--clocks", type=_non_negative, default=8, help="Clocks to trace (default: 8)")
    p.add_argument("--unit", choices=[u.value for u in HwUnit], default=HwUnit.PRGA.value,
                   help="Unit to trace (default: prga, after a full KSA)")
    p.add_argument("--out", dest="output", metavar="PATH", help="Write the trace to a file")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("cycles", help="Clock accounting for n bytes")
    _add_key_flags(p, required=False)
    p.add_argument("-n", "--bytes", type=_positive, default=1000, help="Number of octets (default: 1000)")
    p.add_argument("--compare", action="store_true", help="Also print the hardware schedule comparison")
    p.set_defaults(func=cmd_cycles)

    p = sub.add_parser("power", help="Clock gating switching-activity comparison")
    _add_key_flags(p, required=False)
    p.add_argument("-n", "--bytes", type=_positive, default=100, help="Number of octets (default: 100)")
    p.add_argument("--csv", action="store_true", help="Print counter,ungated,gated lines")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("corpus", help="Generate a keystream corpus on disk")
    p.add_argument("--samples", type=_non_negative, default=CANONICAL_SAMPLES)
    p.add_argument("--bits", type=_non_negative, default=CANONICAL_BITS)
    p.add_argument("--out", metavar="DIR", help="Corpus directory (default: RC4SIM_CORPUS_DIR)")
    p.add_argument("--workers", type=_positive, help="Worker processes (default: RC4SIM_WORKERS)")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("nist", help="Statistical randomness suite and meta-analysis")
    p.add_argument("--samples", type=_non_negative, help=f"Samples to generate (default: {CANONICAL_SAMPLES})")
    p.add_argument("--bits", type=_non_negative, help=f"Bits per sample (default: {CANONICAL_BITS})")
    p.add_argument("--corpus", metavar="DIR", help="Read an existing corpus instead of generating one")
    p.add_argument("--save-corpus", metavar="DIR", help="Write the generated corpus")
    p.add_argument("--pvalues", metavar="FILE", help="External test_name,sample_index,p_value lines")
    p.add_argument("--report", metavar="PATH", help="Also write the report to a file")
    p.add_argument("--store", metavar="PATH", help="Store the P-values in this SQLite store")
    p.add_argument("--label", help="Label for the stored run")
    p.add_argument("--config", metavar="PATH", help="JSON file with suite parameters")
    p.add_argument("--tests", help="Comma-separated test names (default: all built-in tests)")
    p.add_argument("--block-length", type=int, help="Block frequency block length (default: 128)")
    p.add_argument("--serial-m", type=int, help="Serial test pattern length (default: 16)")
    p.add_argument("--apen-m", type=int, help="Approximate entropy pattern length (default: 10)")
    p.add_argument("--alpha", type=float, help="Significance level (default: 0.01)")
    p.add_argument("--workers", type=_positive, help="Worker processes (default: RC4SIM_WORKERS)")
    p.set_defaults(func=cmd_nist)

    for name, role_help, func in (
        ("send", "Encrypt input and send it to a receiver", cmd_send),
        ("recv", "Receive and decrypt a stream from a sender", cmd_recv),
    ):
        p = sub.add_parser(name, help=role_help)
        _add_key_flags(p, required=True)
        _add_engine_flag(p)
        where = p.add_mutually_exclusive_group(required=True)
        where.add_argument("--listen", metavar="ADDR", help="Accept one connection on host:port")
        where.add_argument("--connect", metavar="ADDR", help="Connect to host:port")
        if name == "send":
            p.add_argument("--in", dest="input", metavar="PATH", help="Input file (default: standard input)")
        else:
            p.add_argument("--out", dest="output", metavar="PATH", help="Output file (default: standard output)")
        p.set_defaults(func=func)

    p = sub.add_parser("serve", help="Serve the read-only HTTP inspection API")
    p.add_argument("--host", default=DEFAULT_HOST)
    p.add_argument("--port", type=_non_negative, default=DEFAULT_SERVER_PORT,
                   help="Port (0 picks a free one; a busy port moves to the next free one)")
    p.add_argument("--db", metavar="PATH", help="P-value store (default: RC4SIM_DB_PATH)")
    p.set_defaults(func=cmd_serve)

    return parser


def _configure_logging(settings: Settings, verbose: int):
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.getLevelName(settings.log_level.upper())
        if not isinstance(level, int):
            level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr)
    logging.getLogger("src").setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        settings = load_settings()
    except ValidationError as e:
        _status(f"❌ Invalid RC4SIM_* environment: {e.errors()[0]['msg']}")
        return EXIT_USAGE
    _configure_logging(settings, args.verbose)

    try:
        return args.func(args, settings)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        _status(f"❌ Invalid value{' for ' + where if where else ''}: {first['msg']}")
        return EXIT_USAGE
    except USAGE_ERRORS as e:
        _status(f"❌ {e}")
        return EXIT_USAGE
    except TruncationError as e:
        _status(f"❌ {e} ({e.recovered} octets recovered)")
        return EXIT_RUNTIME
    except (Rc4SimError, OSError) as e:
        _status(f"❌ {e}")
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        _status("⚠️  Interrupted")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
