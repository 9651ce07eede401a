"""
Reference cipher: published vectors, key handling and the XOR step.
Run:
  pytest scripts/test_rc4_core.py
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src import rc4_core
from src.errors import InvalidCountError, InvalidKeyError
from src.rc4_core import RC4Key, generate, is_permutation, key_array, keystream, ksa, xor_bytes, xor_cipher

keys = st.binary(min_size=1, max_size=256)


def _oracle(key: bytes, n: int) -> bytes:
    s = list(range(256))
    j = 0
    for i in range(256):
        j = (j + s[i] + key[i % len(key)]) % 256
        s[i], s[j] = s[j], s[i]
    i = j = 0
    out = []
    for _ in range(n):
        i = (i + 1) % 256
        j = (j + s[i]) % 256
        s[i], s[j] = s[j], s[i]
        out.append(s[(s[i] + s[j]) % 256])
    return bytes(out)


@pytest.mark.parametrize(
    "key, expected",
    [
        (b"Key", "eb9f7781b734ca72a719"),
        (b"Wiki", "6044db6d41"),
        (b"Secret", "04d46b053ca87b59"),
    ],
)
def test_published_keystreams(key, expected):
    assert keystream(key, len(expected) // 2).hex() == expected


@pytest.mark.parametrize(
    "key, plaintext, expected",
    [
        (b"Key", b"Plaintext", "bbf316e8d940af0ad3"),
        (b"Wiki", b"pedia", "1021bf0420"),
        (b"Secret", b"Attack at dawn", "45a01f645fc35b383552544b9bf5"),
    ],
)
def test_published_ciphertexts(key, plaintext, expected):
    ct = xor_cipher(ksa(key), plaintext)
    assert ct.hex() == expected
    assert xor_cipher(ksa(key), ct) == plaintext


def test_key_bounds():
    with pytest.raises(InvalidKeyError):
        RC4Key(b"")
    with pytest.raises(InvalidKeyError):
        RC4Key(bytes(257))
    assert len(RC4Key(bytes(256))) == 256
    assert len(RC4Key(b"\x00")) == 1


def test_key_from_hex():
    assert RC4Key.from_hex("4b6579").data == b"Key"
    assert RC4Key.from_hex(" 4B6579 \n").hex() == "4b6579"
    with pytest.raises(InvalidKeyError):
        RC4Key.from_hex("zz")
    with pytest.raises(InvalidKeyError):
        RC4Key.from_hex("")


def test_canonical_key_lengths():
    assert RC4Key(bytes(5)).is_canonical
    assert RC4Key(bytes(16)).is_canonical
    assert not RC4Key(bytes(4)).is_canonical
    assert not RC4Key(bytes(17)).is_canonical


def test_key_array_repeats_key():
    k = key_array(b"abc")
    assert len(k) == 256
    assert k[:6] == b"abcabc"
    assert k[255] == ord("a")  # 255 mod 3 == 0


def test_ksa_leaves_indices_at_zero():
    state = ksa(b"Key")
    assert (state.i, state.j) == (0, 0)
    assert is_permutation(state.sbox)


def test_zero_length_keystream():
    assert keystream(b"Key", 0) == b""
    with pytest.raises(InvalidCountError):
        keystream(b"Key", -1)


def test_xor_length_mismatch():
    with pytest.raises(InvalidCountError):
        xor_bytes(b"abc", b"ab")
    assert xor_bytes(b"", b"") == b""


def test_prga_next_matches_generate():
    a, b = ksa(b"Wiki"), ksa(b"Wiki")
    singles = bytes(rc4_core.prga_next(a) for _ in range(300))
    assert singles == generate(b, 300)
    assert (a.i, a.j) == (b.i, b.j)


def test_state_copy_is_independent():
    state = ksa(b"Key")
    clone = state.copy()
    generate(state, 10)
    assert clone.i == 0
    assert generate(clone, 10) == keystream(b"Key", 10)


@settings(max_examples=50, deadline=None)
@given(key=keys, n=st.integers(min_value=0, max_value=600))
def test_keystream_matches_oracle(key, n):
    assert keystream(key, n) == _oracle(key, n)


@settings(max_examples=50, deadline=None)
@given(key=keys, n=st.integers(min_value=0, max_value=300), m=st.integers(min_value=0, max_value=300))
def test_keystream_continues_across_calls(key, n, m):
    state = ksa(key)
    assert generate(state, n) + generate(state, m) == keystream(key, n + m)


@settings(max_examples=50, deadline=None)
@given(key=keys, data=st.binary(max_size=512))
def test_decrypt_inverts_encrypt(key, data):
    assert xor_cipher(ksa(key), xor_cipher(ksa(key), data)) == data


@settings(max_examples=30, deadline=None)
@given(key=keys, n=st.integers(min_value=0, max_value=1000))
def test_state_stays_a_permutation(key, n):
    state = ksa(key)
    generate(state, n)
    assert is_permutation(state.sbox)
