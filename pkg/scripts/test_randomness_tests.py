"""
Per-sample statistical tests against published worked examples.

Tests are called through the module (randomness.test_*) so pytest does not
collect them.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src import randomness
from src.errors import InvalidArgumentError
from src.randomness import BitSample
from src.schemas import CusumMode

# First 100 binary digits of the expansion of pi
PI_100 = (
    "11001001000011111101101010100010001000010110100011"
    "00001000110100110001001100011001100010100010111000"
)


def test_erfc():
    assert randomness.erfc(0.0) == 1.0
    assert randomness.erfc(1.0) == pytest.approx(0.157299207, abs=1e-9)
    with pytest.raises(InvalidArgumentError):
        randomness.erfc(float("nan"))


def test_igamc():
    assert randomness.igamc(1.0, 2.0) == pytest.approx(math.exp(-2.0))
    assert randomness.igamc(3.0, 0.0) == 1.0
    assert randomness.igamc(4.5, 1e6) == pytest.approx(0.0, abs=1e-300)
    with pytest.raises(InvalidArgumentError):
        randomness.igamc(0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        randomness.igamc(1.0, -1.0)


def test_bit_sample_packing():
    sample = BitSample.from_bits("1011 0101 01")
    assert sample.n_bits == 10
    assert list(sample.bits()) == [1, 0, 1, 1, 0, 1, 0, 1, 0, 1]
    assert list(BitSample.from_bytes(b"\x80").bits()) == [1, 0, 0, 0, 0, 0, 0, 0]
    with pytest.raises(InvalidArgumentError):
        BitSample.from_bits("10201")
    with pytest.raises(InvalidArgumentError):
        BitSample(b"\x00", 9)


def test_short_samples_need_relaxed():
    with pytest.raises(InvalidArgumentError):
        randomness.test_frequency("1011010101")
    with pytest.raises(InvalidArgumentError):
        randomness.test_frequency("", relaxed=True)


def test_ten_bit_frequency():
    p = randomness.test_frequency("1011010101", relaxed=True)
    assert p.value == pytest.approx(0.527089, abs=1e-6)
    assert p.test_name == "frequency"


def test_ten_bit_block_frequency():
    p = randomness.test_block_frequency("0110011010", M=3, relaxed=True)
    assert p.value == pytest.approx(0.801252, abs=1e-6)


def test_ten_bit_runs():
    assert randomness.test_runs("1001101011", relaxed=True).value == pytest.approx(0.147232, abs=1e-6)


def test_ten_bit_apen():
    p = randomness.test_apen("0100110101", m=3, relaxed=True)
    assert p.value == pytest.approx(0.261961, abs=1e-6)


def test_ten_bit_serial():
    p1, p2 = randomness.test_serial("0011011101", m=3, relaxed=True)
    assert p1.value == pytest.approx(0.808792, abs=1e-6)
    assert p2.value == pytest.approx(0.670320, abs=1e-6)
    assert p1.test_name == p2.test_name == "serial"


def test_ten_bit_cusum():
    p = randomness.test_cusum("1011010111", CusumMode.FORWARD, relaxed=True)
    assert abs(p.value - 0.4117) < 1e-3


def test_alternating_bits_fail_runs():
    p = randomness.test_runs("0101010101", relaxed=True)
    assert p.value == pytest.approx(0.00157, abs=1e-5)


def test_pi_frequency():
    assert randomness.test_frequency(PI_100).value == pytest.approx(0.109599, abs=1e-6)


def test_pi_block_frequency():
    assert randomness.test_block_frequency(PI_100, M=10).value == pytest.approx(0.706438, abs=1e-6)


def test_pi_runs():
    assert randomness.test_runs(PI_100).value == pytest.approx(0.500798, abs=1e-6)


def test_pi_cusum():
    forward = randomness.test_cusum(PI_100, CusumMode.FORWARD)
    backward = randomness.test_cusum(PI_100, CusumMode.BACKWARD)
    assert forward.value == pytest.approx(0.219194, abs=1e-6)
    assert backward.value == pytest.approx(0.114866, abs=1e-6)


def test_pi_apen():
    assert randomness.test_apen(PI_100, m=2, relaxed=True).value == pytest.approx(0.235301, abs=1e-6)


def test_runs_pretest():
    assert randomness.test_runs("1" * 100).value == 0.0


def test_block_length_bounds():
    with pytest.raises(InvalidArgumentError):
        randomness.test_block_frequency(PI_100, M=1)
    with pytest.raises(InvalidArgumentError):
        randomness.test_block_frequency(PI_100, M=101)


def test_pattern_length_bounds():
    bits = "01" * 500
    with pytest.raises(InvalidArgumentError):
        randomness.test_serial(bits, m=16)
    with pytest.raises(InvalidArgumentError):
        randomness.test_serial(bits, m=1)
    with pytest.raises(InvalidArgumentError):
        randomness.test_apen(bits, m=10)
    randomness.test_serial(bits, m=3)


def test_sample_index_is_carried():
    sample = BitSample.from_bits(PI_100, sample_index=42)
    assert randomness.test_frequency(sample).sample_index == 42
    assert [p.sample_index for p in randomness.test_serial(sample, m=3)] == [42, 42]


@settings(max_examples=40, deadline=None)
@given(data=st.binary(min_size=128, max_size=512))
def test_pvalues_lie_in_unit_interval(data):
    sample = BitSample.from_bytes(data)
    pvalues = [
        randomness.test_frequency(sample),
        randomness.test_block_frequency(sample, M=128),
        randomness.test_runs(sample),
        randomness.test_cusum(sample, CusumMode.FORWARD),
        randomness.test_cusum(sample, CusumMode.BACKWARD),
        *randomness.test_serial(sample, m=4),
        randomness.test_apen(sample, m=2),
    ]
    assert all(0.0 <= p.value <= 1.0 for p in pvalues)


def test_igamc_half_matches_erfc():
    for x in np.linspace(0.0, 25.0, 1000):
        assert abs(randomness.igamc(0.5, x) - randomness.erfc(math.sqrt(x))) < 1e-10


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5, 5.0])
def test_erfc_reflection(x):
    assert randomness.erfc(-x) == pytest.approx(2.0 - randomness.erfc(x), abs=1e-15)


def test_cusum_directions_agree_on_a_palindrome():
    rng = np.random.default_rng(11)
    half = rng.integers(0, 2, 500)
    sample = BitSample.from_bits(np.concatenate((half, half[::-1])))
    forward = randomness.test_cusum(sample, CusumMode.FORWARD)
    backward = randomness.test_cusum(sample, CusumMode.BACKWARD)
    assert forward.value == backward.value


# Cyclic sequences holding every k-bit pattern exactly once
DE_BRUIJN_3 = "00010111"
DE_BRUIJN_4 = "0000100110101111"
ALTERNATING = "10" * 512
ZEROS = "0" * 1024


def test_frequency_extremes():
    assert randomness.test_frequency(ALTERNATING).value == 1.0
    assert randomness.test_frequency(ZEROS).value < 1e-10


def test_block_frequency_extremes():
    assert randomness.test_block_frequency(ALTERNATING, M=10).value == 1.0
    assert randomness.test_block_frequency(ZEROS, M=10).value < 1e-10


def test_serial_extremes():
    balanced = randomness.test_serial(DE_BRUIJN_3 * 128, m=3)
    assert [p.value for p in balanced] == [1.0, 1.0]
    constant = randomness.test_serial(ZEROS, m=3)
    assert all(p.value < 1e-10 for p in constant)


def test_apen_extremes():
    balanced = randomness.test_apen(DE_BRUIJN_4 * 64, m=3)
    assert balanced.value == pytest.approx(1.0, abs=1e-9)
    assert randomness.test_apen(ZEROS, m=3).value < 1e-10
