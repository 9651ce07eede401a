"""
Exception hierarchy for RC4Sim.

Library code raises these and never exits; the CLI maps them to exit codes
(usage problems → 1, everything else → 2).
"""


class Rc4SimError(Exception):
    """Base class for every error raised by RC4Sim."""
    pass


class InvalidKeyError(Rc4SimError, ValueError):
    """Key is empty or longer than 256 octets."""
    pass


class InvalidCountError(Rc4SimError, ValueError):
    """Byte or clock count outside the accepted range."""
    pass


class InvalidArgumentError(Rc4SimError, ValueError):
    """Argument outside an operation's domain (bit alignment, test parameters, ...)."""
    pass


class DataFormatError(Rc4SimError):
    """A corpus directory or P-value file is malformed or inconsistent."""
    pass


class SimulatorProtocolError(Rc4SimError):
    """The hardware model was driven out of order (commit without latch, PRGA before KSA)."""
    pass


class ProtocolError(Rc4SimError):
    """Peer violated the wire protocol (bad magic, oversized frame)."""
    pass


class UnsupportedVersionError(ProtocolError):
    """Peer speaks a different wire-protocol version."""

    def __init__(self, message: str, version: int):
        super().__init__(message)
        self.version = version


class TransportError(Rc4SimError):
    """The byte-stream connection failed. `sent` counts payload octets already written."""

    def __init__(self, message: str, sent: int = 0):
        super().__init__(message)
        self.sent = sent


class TruncationError(TransportError):
    """Connection closed before the end-of-stream marker. `recovered` counts plaintext octets delivered."""

    def __init__(self, message: str, recovered: int = 0):
        super().__init__(message)
        self.recovered = recovered


class StoreError(Rc4SimError):
    """P-value store cannot be used (schema written by a newer RC4Sim)."""
    pass


# Errors a user can fix by changing flags or input values.
USAGE_ERRORS = (InvalidKeyError, InvalidCountError, InvalidArgumentError)
