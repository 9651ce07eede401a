"""
Clock gating: toggle counts, keystream invariance and the measured power table.
"""

from fractions import Fraction

import pytest

from src.activity_power import (
    ClockGate,
    compare_gating,
    comparison_csv,
    expected_clock_toggles,
    reference_power,
    run_clock_managed,
    simulate_activity,
    total_clocks_for,
)
from src.errors import InvalidCountError
from src.rc4_core import keystream
from src.schemas import GatingMode

KEY = bytes.fromhex("0102030405")


def test_gate_enables():
    gate = ClockGate(GatingMode.GATED)
    assert gate.enables(0) == (True, False)
    assert gate.enables(256) == (True, False)
    assert gate.enables(257) == (False, True)
    assert ClockGate(GatingMode.UNGATED).enables(5000) == (True, True)


def test_gated_toggles_for_100_bytes():
    report = simulate_activity(KEY, 100, GatingMode.GATED)
    assert report.total_clocks == 358
    assert report.ksa_clock_toggles == 514
    assert report.prga_clock_toggles == 202
    assert report.ksa_toggles_after_handoff == 0
    assert report.ksa_active_clocks == 257
    assert report.prga_active_clocks == 101


def test_ungated_toggles_for_100_bytes():
    report = simulate_activity(KEY, 100, GatingMode.UNGATED)
    assert report.ksa_clock_toggles == 716
    assert report.prga_clock_toggles == 716
    assert report.ksa_toggles_after_handoff == 2 * 101


@pytest.mark.parametrize("n", [1, 7, 100, 1000])
@pytest.mark.parametrize("mode", list(GatingMode))
def test_clock_toggles_follow_closed_form(n, mode):
    report = simulate_activity(KEY, n, mode)
    assert (report.ksa_clock_toggles, report.prga_clock_toggles) == expected_clock_toggles(n, mode)
    assert report.total_clocks == total_clocks_for(n) == 258 + n


@pytest.mark.parametrize("mode", list(GatingMode))
def test_gating_does_not_change_the_keystream(mode):
    run = run_clock_managed(KEY, 64, mode)
    assert run.keystream == keystream(KEY, 64)
    assert run.cycles.total_clocks == 258 + 64


def test_data_path_activity_is_mode_independent():
    comparison = compare_gating(KEY, 50)
    assert comparison.ungated.register_writes == comparison.gated.register_writes
    assert comparison.ungated.latch_loads == comparison.gated.latch_loads
    assert comparison.gated.total_toggles < comparison.ungated.total_toggles


@pytest.mark.parametrize("n", [1, 100, 10_000])
def test_clock_net_saving_is_exactly_half(n):
    comparison = compare_gating(KEY, n)
    assert comparison.clock_saving_fraction == Fraction(1, 2)
    assert comparison.gated.total_toggles < comparison.ungated.total_toggles


def test_toggle_saving_fraction():
    comparison = compare_gating(KEY, 100)
    expected = 1 - Fraction(comparison.gated.total_toggles, comparison.ungated.total_toggles)
    assert comparison.toggle_saving_fraction == expected
    assert 0 < comparison.toggle_saving_fraction < Fraction(1, 2)


def test_comparison_csv():
    lines = comparison_csv(compare_gating(KEY, 100)).splitlines()
    assert lines[0] == "counter,ungated,gated"
    assert lines[1] == "ksa_clock_toggles,716,514"
    assert lines[2] == "prga_clock_toggles,716,202"


def test_zero_bytes_rejected():
    with pytest.raises(InvalidCountError):
        simulate_activity(KEY, 0, GatingMode.GATED)


def test_reference_power_savings():
    ref = reference_power()
    assert [c.architecture for c in ref.columns] == ["behavioral", "structural", "clock_gated"]
    assert ref.dynamic_saving == pytest.approx(0.0465, abs=5e-4)
    assert ref.total_saving == pytest.approx(0.0100, abs=5e-4)
