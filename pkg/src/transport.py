"""
Encrypted stream transport between an encrypting sender and a decrypting receiver.

Wire protocol (version 1):

    handshake   sender -> receiver  52 43 34 53 01   ("RC4S", version)
                receiver -> sender  the same five octets, echoed
    frame       4-octet big-endian payload length, then the ciphertext payload
    end         a frame of length 0

Payloads are at most 65,536 octets. Each session runs KSA once after the
handshake; the keystream then advances across frames, so ciphertext does not
depend on where the frame boundaries fall. Sessions are one-way; a duplex link
needs two of them.
"""

import asyncio
import logging
import struct
from contextlib import suppress
from dataclasses import dataclass
from typing import BinaryIO, Callable, List, Optional, Protocol, Union

from .errors import (
    InvalidArgumentError,
    ProtocolError,
    TransportError,
    TruncationError,
    UnsupportedVersionError,
)
from .hw_model import Rc4Hardware
from .port_manager import parse_endpoint
from .rc4_core import KeyLike, generate, ksa, xor_bytes
from .schemas import EngineKind, SessionConfig, SessionRole
from .version import WIRE_PROTOCOL_VERSION

logger = logging.getLogger(__name__)

MAGIC = b"RC4S"
HANDSHAKE = MAGIC + bytes([WIRE_PROTOCOL_VERSION])
MAX_FRAME = 65536
FRAME_HEADER = struct.Struct(">I")
END_OF_STREAM = FRAME_HEADER.pack(0)


# Keystream engines

class KeystreamEngine(Protocol):
    def keystream(self, n: int) -> bytes: ...


class ReferenceEngine:
    """Keystream from the reference cipher state."""

    def __init__(self, key: KeyLike):
        self.state = ksa(key)

    def keystream(self, n: int) -> bytes:
        return generate(self.state, n)


class HardwareEngine:
    """Keystream from the cycle-accurate hardware model, continuing across calls."""

    def __init__(self, key: KeyLike):
        self.hw = Rc4Hardware(key)
        self.hw.ksa.run()

    @property
    def clocks(self) -> int:
        return self.hw.total_clocks

    def keystream(self, n: int) -> bytes:
        if n == 0:
            return b""
        return self.hw.keystream(n)


def make_engine(kind: EngineKind, key: KeyLike) -> KeystreamEngine:
    if EngineKind(kind) is EngineKind.HARDWARE:
        return HardwareEngine(key)
    return ReferenceEngine(key)


# Framing

def chunk_payload(data: bytes, max_frame: int = MAX_FRAME) -> List[bytes]:
    """Split data into frame payloads of at most max_frame octets."""
    return [data[k:k + max_frame] for k in range(0, len(data), max_frame)]


def build_frames(data: bytes, engine: KeystreamEngine, max_frame: int = MAX_FRAME) -> List[bytes]:
    """Wire frames for data, end marker included, without a connection."""
    frames = []
    for chunk in chunk_payload(bytes(data), max_frame):
        ct = xor_bytes(chunk, engine.keystream(len(chunk)))
        frames.append(FRAME_HEADER.pack(len(ct)) + ct)
    frames.append(END_OF_STREAM)
    return frames


def check_hello(hello: bytes):
    """Validate a 5-octet handshake."""
    if hello[:4] != MAGIC:
        raise ProtocolError(f"bad handshake magic {hello[:4].hex()}")
    version = hello[4]
    if version != WIRE_PROTOCOL_VERSION:
        raise UnsupportedVersionError(
            f"peer speaks protocol version {version}, expected {WIRE_PROTOCOL_VERSION}", version
        )


# Sessions

@dataclass
class Session:
    config: SessionConfig
    engine: KeystreamEngine
    reader: asyncio.StreamReader
    writer: asyncio.StreamWriter
    bytes_transferred: int = 0
    frames: int = 0

    def apply(self, data: bytes) -> bytes:
        """XOR data with the next len(data) keystream octets."""
        out = xor_bytes(data, self.engine.keystream(len(data)))
        self.bytes_transferred += len(data)
        return out


async def _read_exactly(reader: asyncio.StreamReader, n: int, what: str) -> bytes:
    try:
        return await reader.readexactly(n)
    except asyncio.IncompleteReadError as e:
        raise TransportError(f"connection closed during {what} ({len(e.partial)} of {n} octets)")
    except ConnectionError as e:
        raise TransportError(f"connection failed during {what}: {e}")


async def handshake(reader: asyncio.StreamReader, writer: asyncio.StreamWriter,
                    config: SessionConfig) -> Session:
    """Exchange and verify the 5-octet hello, then run KSA once for this session."""
    try:
        if config.role is SessionRole.SENDER:
            writer.write(HANDSHAKE)
            await writer.drain()
            check_hello(await _read_exactly(reader, len(HANDSHAKE), "handshake"))
        else:
            check_hello(await _read_exactly(reader, len(HANDSHAKE), "handshake"))
            writer.write(HANDSHAKE)
            await writer.drain()
    except ConnectionError as e:
        raise TransportError(f"connection failed during handshake: {e}")
    logger.debug("%s handshake ok, engine=%s", config.role.value, config.engine.value)
    return Session(config=config, engine=make_engine(config.engine, config.key), reader=reader, writer=writer)


Source = Union[bytes, bytearray, BinaryIO]


def _chunks(source: Source):
    if isinstance(source, (bytes, bytearray, memoryview)):
        yield from chunk_payload(bytes(source))
        return
    while True:
        chunk = source.read(MAX_FRAME)
        if not chunk:
            return
        yield chunk


async def send_stream(session: Session, source: Source) -> int:
    """Encrypt source frame by frame and finish with the end marker; returns payload octets sent."""
    if session.config.role is not SessionRole.SENDER:
        raise InvalidArgumentError("send_stream needs a sender session")
    sent = 0
    try:
        for chunk in _chunks(source):
            ct = session.apply(chunk)
            session.writer.write(FRAME_HEADER.pack(len(ct)) + ct)
            await session.writer.drain()
            sent += len(ct)
            session.frames += 1
            logger.debug("sent frame %d (%d octets)", session.frames, len(ct))
        session.writer.write(END_OF_STREAM)
        await session.writer.drain()
    except ConnectionError as e:
        raise TransportError(f"write failed after {sent} octets: {e}", sent=sent)
    return sent


async def recv_stream(session: Session, sink: BinaryIO) -> int:
    """Decrypt frames into sink until the end marker; returns payload octets received."""
    if session.config.role is not SessionRole.RECEIVER:
        raise InvalidArgumentError("recv_stream needs a receiver session")
    received = 0
    reader = session.reader
    while True:
        try:
            header = await reader.readexactly(FRAME_HEADER.size)
        except (asyncio.IncompleteReadError, ConnectionError):
            raise TruncationError(f"stream ended without end marker after {received} octets", recovered=received)
        (length,) = FRAME_HEADER.unpack(header)
        if length == 0:
            break
        if length > MAX_FRAME:
            raise ProtocolError(f"frame length {length} exceeds {MAX_FRAME}")
        try:
            ct = await reader.readexactly(length)
        except asyncio.IncompleteReadError as e:
            if e.partial:
                sink.write(session.apply(e.partial))
                received += len(e.partial)
            raise TruncationError(
                f"frame truncated at {len(e.partial)} of {length} octets", recovered=received
            )
        except ConnectionError:
            raise TruncationError(f"connection failed after {received} octets", recovered=received)
        sink.write(session.apply(ct))
        received += length
        session.frames += 1
        logger.debug("received frame %d (%d octets)", session.frames, length)
    return received


# Endpoints

ListeningCallback = Callable[[str, int], None]


async def _serve_once(host: str, port: int, handler, on_listening: Optional[ListeningCallback] = None):
    """Accept one connection, run handler on it and stop listening."""
    loop = asyncio.get_running_loop()
    done = loop.create_future()

    async def on_client(reader, writer):
        if done.done():
            writer.close()
            return
        try:
            result = await handler(reader, writer)
        except Exception as e:
            if not done.done():
                done.set_exception(e)
        else:
            if not done.done():
                done.set_result(result)
        finally:
            writer.close()

    try:
        server = await asyncio.start_server(on_client, host, port)
    except OSError as e:
        raise TransportError(f"cannot listen on {host}:{port}: {e}")
    bound = server.sockets[0].getsockname()[1]
    logger.info("listening on %s:%d", host, bound)
    if on_listening is not None:
        on_listening(host, bound)
    try:
        return await done
    finally:
        server.close()
        with suppress(Exception):
            await server.wait_closed()


async def _dial(host: str, port: int, handler):
    try:
        reader, writer = await asyncio.open_connection(host, port)
    except OSError as e:
        raise TransportError(f"cannot connect to {host}:{port}: {e}")
    try:
        return await handler(reader, writer)
    finally:
        writer.close()
        with suppress(Exception):
            await writer.wait_closed()


async def run_endpoint(config: SessionConfig, stream: Union[Source, BinaryIO],
                       on_listening: Optional[ListeningCallback] = None) -> Session:
    """
    Listen or dial per config, handshake, then send from or receive into stream.

    Returns the finished session.
    """
    host, port = parse_endpoint(config.endpoint)

    async def handler(reader, writer):
        session = await handshake(reader, writer, config)
        if config.role is SessionRole.SENDER:
            await send_stream(session, stream)
        else:
            await recv_stream(session, stream)
        return session

    if config.listen:
        return await _serve_once(host, port, handler, on_listening)
    return await _dial(host, port, handler)
