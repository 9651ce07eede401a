"""
Reference RC4: key scheduling (KSA), keystream generation (PRGA) and the XOR
step applied by the main processor.

This module is the oracle every other part of RC4Sim is checked against: the
hardware model must reproduce its keystream byte for byte, the randomness
corpus is drawn from it and the transport's Reference engine is built on it.
"""

from dataclasses import dataclass
from typing import Union

from .errors import InvalidKeyError, InvalidCountError

N = 256
KEY_MIN_LENGTH = 1
KEY_MAX_LENGTH = 256
# Typical key sizes; anything in KEY_MIN_LENGTH..KEY_MAX_LENGTH is accepted.
CANONICAL_KEY_LENGTHS = range(5, 17)


@dataclass(frozen=True)
class RC4Key:
    """Secret key of 1..256 octets."""
    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, (bytes, bytearray)):
            raise InvalidKeyError("key must be bytes")
        if not KEY_MIN_LENGTH <= len(self.data) <= KEY_MAX_LENGTH:
            raise InvalidKeyError(
                f"key length {len(self.data)} outside {KEY_MIN_LENGTH}..{KEY_MAX_LENGTH} octets"
            )
        object.__setattr__(self, "data", bytes(self.data))

    @classmethod
    def from_hex(cls, text: str) -> "RC4Key":
        try:
            raw = bytes.fromhex(text.strip())
        except ValueError:
            raise InvalidKeyError(f"key is not valid hex: {text!r}")
        return cls(raw)

    @property
    def is_canonical(self) -> bool:
        return len(self.data) in CANONICAL_KEY_LENGTHS

    def hex(self) -> str:
        return self.data.hex()

    def __len__(self) -> int:
        return len(self.data)


KeyLike = Union[RC4Key, bytes, bytearray]


def as_key(key: KeyLike) -> RC4Key:
    """Accept an RC4Key or raw key octets."""
    if isinstance(key, RC4Key):
        return key
    return RC4Key(key)


def key_array(key: KeyLike) -> bytes:
    """The 256-entry K array: entry i is key[i mod l]."""
    raw = as_key(key).data
    reps, rem = divmod(N, len(raw))
    return raw * reps + raw[:rem]


def identity_sbox() -> bytearray:
    return bytearray(range(N))


def is_permutation(sbox) -> bool:
    return len(sbox) == N and len(set(sbox)) == N


class Rc4State:
    """
    S-box plus the two PRGA indices.

    Single-owner mutable state: prga_next and xor_cipher advance it in place.
    """

    __slots__ = ("sbox", "i", "j")

    def __init__(self, sbox: bytearray, i: int = 0, j: int = 0):
        self.sbox = sbox
        self.i = i
        self.j = j

    def copy(self) -> "Rc4State":
        return Rc4State(bytearray(self.sbox), self.i, self.j)

    def __repr__(self) -> str:
        return f"Rc4State(i={self.i}, j={self.j}, sbox={self.sbox[:8].hex()}...)"


def ksa(key: KeyLike) -> Rc4State:
    """Scramble the identity permutation with the key; returns a state with i = j = 0."""
    k = key_array(key)
    s = identity_sbox()
    j = 0
    for i in range(N):
        j = (j + s[i] + k[i]) & 0xFF
        s[i], s[j] = s[j], s[i]
    return Rc4State(s)


def prga_next(state: Rc4State) -> int:
    """Advance the state by one step and return the keystream octet Z = S[t], read after the swap."""
    s = state.sbox
    i = (state.i + 1) & 0xFF
    j = (state.j + s[i]) & 0xFF
    s[i], s[j] = s[j], s[i]
    state.i = i
    state.j = j
    return s[(s[i] + s[j]) & 0xFF]


def generate(state: Rc4State, n: int) -> bytes:
    """n successive prga_next outputs, computed in one pass."""
    if n < 0:
        raise InvalidCountError(f"byte count must be >= 0, got {n}")
    s = state.sbox
    i, j = state.i, state.j
    out = bytearray(n)
    for k in range(n):
        i = (i + 1) & 0xFF
        si = s[i]
        j = (j + si) & 0xFF
        sj = s[j]
        s[i] = sj
        s[j] = si
        out[k] = s[(si + sj) & 0xFF]
    state.i, state.j = i, j
    return bytes(out)


def keystream(key: KeyLike, n: int) -> bytes:
    """First n keystream octets for key, from a fresh KSA."""
    if n < 0:
        raise InvalidCountError(f"byte count must be >= 0, got {n}")
    return generate(ksa(key), n)


def xor_bytes(data: bytes, stream: bytes) -> bytes:
    """Octet-wise XOR of two equal-length sequences."""
    if len(data) != len(stream):
        raise InvalidCountError(f"length mismatch: {len(data)} data vs {len(stream)} keystream octets")
    if not data:
        return b""
    n = len(data)
    return (int.from_bytes(data, "big") ^ int.from_bytes(stream, "big")).to_bytes(n, "big")


def xor_cipher(state: Rc4State, data: bytes) -> bytes:
    """Encrypt or decrypt data, consuming exactly len(data) keystream octets from state."""
    return xor_bytes(bytes(data), generate(state, len(data)))
