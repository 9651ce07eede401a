"""
Switching-activity accounting for the clock-gated and ungated designs.

In the ungated design both unit clocks (ksa_clk, prga_clk) run for the whole
computation; in the gated design prga_en is 0 until the KSA unit is done and
ksa_en is its complement. Activity counts stand in for dynamic power.
"""

import csv
import io
import logging
from dataclasses import dataclass
from typing import List, Tuple

from .errors import InvalidCountError
from .hw_model import KSA_CLOCKS, PRGA_INIT_CLOCKS, Rc4Hardware
from .rc4_core import KeyLike
from .schemas import (
    ActivityReport,
    CycleReport,
    GatingComparison,
    GatingMode,
    PowerColumn,
    ReferencePower,
)

logger = logging.getLogger(__name__)

# Counters in report order
COUNTERS = (
    "ksa_clock_toggles",
    "prga_clock_toggles",
    "register_writes",
    "latch_loads",
    "total_toggles",
    "ksa_toggles_after_handoff",
    "ksa_active_clocks",
    "prga_active_clocks",
)


class ClockGate:
    """Enable logic of the two unit clock nets, indexed by global clock."""

    def __init__(self, mode: GatingMode):
        self.mode = GatingMode(mode)

    def enables(self, clock: int) -> Tuple[bool, bool]:
        """(ksa_en, prga_en) for one global clock."""
        if self.mode is GatingMode.UNGATED:
            return True, True
        prga_en = clock >= KSA_CLOCKS
        return not prga_en, prga_en


@dataclass
class ClockManagedRun:
    """Everything one clock-managed simulation produced."""
    report: ActivityReport
    keystream: bytes
    cycles: CycleReport


def total_clocks_for(n: int) -> int:
    return KSA_CLOCKS + PRGA_INIT_CLOCKS + n


def expected_clock_toggles(n: int, mode: GatingMode) -> Tuple[int, int]:
    """Closed-form (ksa_clk, prga_clk) toggle counts."""
    if GatingMode(mode) is GatingMode.UNGATED:
        both = 2 * total_clocks_for(n)
        return both, both
    return 2 * KSA_CLOCKS, 2 * (PRGA_INIT_CLOCKS + n)


def run_clock_managed(key: KeyLike, n: int, mode: GatingMode) -> ClockManagedRun:
    """
    Drive the hardware clock by clock through the gate.

    A unit only works in clocks where its net is enabled and it has work left;
    the keystream and cycle counts therefore do not depend on the mode.
    """
    if n < 1:
        raise InvalidCountError(f"byte count must be >= 1, got {n}")
    mode = GatingMode(mode)
    hw = Rc4Hardware(key)
    gate = ClockGate(mode)
    prga_clocks_needed = PRGA_INIT_CLOCKS + n

    ksa_toggles = prga_toggles = after_handoff = 0
    ksa_active = prga_active = 0
    stream = bytearray()
    for clock in range(total_clocks_for(n)):
        ksa_en, prga_en = gate.enables(clock)
        if ksa_en:
            ksa_toggles += 2
            if clock >= KSA_CLOCKS:
                after_handoff += 2
        if prga_en:
            prga_toggles += 2

        if ksa_en and not hw.ksa.finished:
            hw.ksa.tick()
            ksa_active += 1
        elif prga_en and hw.ksa.finished and prga_active < prga_clocks_needed:
            for event in hw.prga.tick():
                if event.z is not None:
                    stream.append(event.z)
            prga_active += 1

    register_writes = hw.activity.register_writes
    latch_loads = hw.activity.latch_loads
    report = ActivityReport(
        mode=mode,
        n_bytes=n,
        total_clocks=total_clocks_for(n),
        ksa_clock_toggles=ksa_toggles,
        prga_clock_toggles=prga_toggles,
        register_writes=register_writes,
        latch_loads=latch_loads,
        total_toggles=ksa_toggles + prga_toggles + register_writes + latch_loads,
        ksa_toggles_after_handoff=after_handoff,
        ksa_active_clocks=ksa_active,
        prga_active_clocks=prga_active,
    )
    logger.debug("%s run n=%d: %d toggles", mode.value, n, report.total_toggles)
    return ClockManagedRun(
        report=report,
        keystream=bytes(stream),
        cycles=CycleReport.from_clocks(ksa_active, prga_active, n),
    )


def simulate_activity(key: KeyLike, n: int, mode: GatingMode) -> ActivityReport:
    return run_clock_managed(key, n, mode).report


def compare_gating(key: KeyLike, n: int) -> GatingComparison:
    """Run both modes for the same key and length."""
    ungated = simulate_activity(key, n, GatingMode.UNGATED)
    gated = simulate_activity(key, n, GatingMode.GATED)
    return GatingComparison.from_reports(ungated, gated)


def comparison_rows(comparison: GatingComparison) -> List[Tuple[str, int, int]]:
    return [
        (name, getattr(comparison.ungated, name), getattr(comparison.gated, name))
        for name in COUNTERS
    ]


def comparison_csv(comparison: GatingComparison) -> str:
    """`counter,ungated,gated` export."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["counter", "ungated", "gated"])
    writer.writerows(comparison_rows(comparison))
    return buf.getvalue()


# Measured on the FPGA with the vendor power analyzer (watts). Documentation
# only; the activity proxy is never compared against these numbers.
_MEASURED_POWER = (
    PowerColumn(architecture="behavioral", total=1.41665, quiescent=0.96449, dynamic=0.45216,
                clock=0.10280, logic=0.05266, ios=0.00015, signal=0.29655),
    PowerColumn(architecture="structural", total=1.18910, quiescent=0.97264, dynamic=0.21646,
                clock=0.11263, logic=0.00545, ios=0.00015, signal=0.09823),
    PowerColumn(architecture="clock_gated", total=1.17720, quiescent=0.97080, dynamic=0.20640,
                clock=0.15897, logic=0.00404, ios=0.00002, signal=0.04337),
)


def reference_power() -> ReferencePower:
    """Measured wattage and the savings of clock gating over the structural design."""
    _, structural, gated = _MEASURED_POWER
    return ReferencePower(
        columns=list(_MEASURED_POWER),
        dynamic_saving=1 - gated.dynamic / structural.dynamic,
        total_saving=1 - gated.total / structural.total,
    )
