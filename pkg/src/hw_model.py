"""
Cycle-accurate model of the one-byte-per-clock RC4 hardware.

The design has a shared storage block (a 256-cell register bank with a MUX/DEMUX
swap path and two D flip-flops), a KSA unit and a PRGA unit. Both units follow
the same dual-edge discipline:

- falling edge: advance the index counter, update j, latch S[i] and S[j]
- rising edge:  commit the crossed write (cells[j] := S[i], cells[i] := S[j]);
                the PRGA unit also emits z = cells[(S[i] + S[j]) mod 256]

KSA takes one initial clock plus 256 iteration clocks (257). PRGA takes one
initial clock (j := 0) plus one clock per keystream byte (n + 1). A PRGA unit
keeps its counter running between runs, so a continuing run costs n clocks.

Trace events are pydantic objects and are only built on the edge-level API;
``KsaUnit.run`` and ``PrgaUnit.run`` are inlined loops over the same schedule.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple, Union

from .errors import InvalidCountError, SimulatorProtocolError
from .rc4_core import N, KeyLike, as_key, key_array, xor_bytes
from .schemas import ClockPhase, CycleReport, DesignClockRow, HwTraceEvent, HwUnit

logger = logging.getLogger(__name__)

KSA_CLOCKS = 257
PRGA_INIT_CLOCKS = 1


@dataclass
class ActivityCounters:
    """Data-path switching counted while the units run."""
    commits: int = 0
    cell_writes: int = 0
    latch_loads: int = 0
    j_updates: int = 0
    counter_advances: int = 0

    @property
    def register_writes(self) -> int:
        return self.cell_writes + self.j_updates + self.counter_advances


class RegisterBank:
    """The storage block: 256 cells plus the two D flip-flops holding S[i] and S[j]."""

    __slots__ = ("cells", "latch_i", "latch_j", "_pending", "activity")

    def __init__(self, activity: ActivityCounters = None):
        self.cells = bytearray(range(N))
        self.latch_i = 0
        self.latch_j = 0
        self._pending = None
        self.activity = activity if activity is not None else ActivityCounters()

    def fill_identity(self):
        self.cells[:] = bytes(range(N))
        self._pending = None

    def latch(self, i: int, j: int) -> Tuple[int, int]:
        self.latch_i = self.cells[i]
        self.latch_j = self.cells[j]
        self._pending = (i, j)
        self.activity.latch_loads += 2
        return self.latch_i, self.latch_j

    def commit(self, i: int, j: int):
        if self._pending != (i, j):
            raise SimulatorProtocolError(
                f"commit({i}, {j}) without a matching latch (pending: {self._pending})"
            )
        self.cells[j] = self.latch_i
        self.cells[i] = self.latch_j
        self._pending = None
        self.activity.commits += 1
        self.activity.cell_writes += 1 if i == j else 2

    @property
    def has_pending_latch(self) -> bool:
        return self._pending is not None


class ModCounter:
    """
    Index counter i. The first advance yields `start`; it then counts up mod 256.

    The PRGA counter starts at 1 (1, 2, ..., 255, 0, 1, ...); the KSA counter at 0.
    """

    __slots__ = ("start", "value", "started")

    def __init__(self, start: int = 1):
        self.start = start & 0xFF
        self.value = (self.start - 1) & 0xFF
        self.started = False

    def advance(self) -> int:
        if self.started:
            self.value = (self.value + 1) & 0xFF
        else:
            self.value = self.start
            self.started = True
        return self.value


def storage_latch(bank: RegisterBank, i: int, j: int) -> Tuple[int, int]:
    """Falling-edge read of S[i] and S[j] into the flip-flops."""
    return bank.latch(i & 0xFF, j & 0xFF)


def storage_commit(bank: RegisterBank, i: int, j: int):
    """Rising-edge crossed write of the latched pair."""
    bank.commit(i & 0xFF, j & 0xFF)


class _Unit:
    """Edge sequencing shared by both units."""

    unit = None

    def __init__(self, bank: RegisterBank, counter_start: int):
        self.bank = bank
        self.counter = ModCounter(counter_start)
        self.j = 0
        self.i = 0
        self.clock = -1
        self.next_phase = ClockPhase.RISING
        self._last_swapped = False

    @property
    def clocks_elapsed(self) -> int:
        return self.clock + 1

    @property
    def finished(self) -> bool:
        return False

    def _event(self, phase: ClockPhase, z=None, swapped=False) -> HwTraceEvent:
        return HwTraceEvent(
            clock_index=self.clock,
            phase=phase,
            unit=self.unit,
            i=self.i,
            j=self.j,
            s_i=self.bank.latch_i,
            s_j=self.bank.latch_j,
            z=z,
            swapped=swapped,
        )

    def rising_edge(self) -> HwTraceEvent:
        if self.next_phase is not ClockPhase.RISING:
            raise SimulatorProtocolError(f"{self.unit.value}: rising edge out of order at clock {self.clock}")
        if self.finished:
            raise SimulatorProtocolError(f"{self.unit.value}: unit already completed its clocks")
        self.clock += 1
        self.next_phase = ClockPhase.FALLING
        return self._rise()

    def falling_edge(self) -> HwTraceEvent:
        if self.next_phase is not ClockPhase.FALLING:
            raise SimulatorProtocolError(f"{self.unit.value}: falling edge out of order at clock {self.clock}")
        self.next_phase = ClockPhase.RISING
        return self._fall()

    def next_edge(self) -> HwTraceEvent:
        if self.next_phase is ClockPhase.RISING:
            return self.rising_edge()
        return self.falling_edge()

    def tick(self) -> List[HwTraceEvent]:
        """One full clock from the current position: the next two edges."""
        return [self.next_edge(), self.next_edge()]


class KsaUnit(_Unit):
    """
    Key scheduling on the shared bank.

    Clock 0 rising fills the bank with the identity and loads the K array;
    falling edges of clocks 0..255 latch, rising edges of clocks 1..256 commit.
    The falling edge of clock 256 is idle and ends the unit's work.
    """

    unit = HwUnit.KSA

    def __init__(self, bank: RegisterBank, k_array: bytes):
        super().__init__(bank, counter_start=0)
        self.k_array = k_array

    @property
    def finished(self) -> bool:
        return self.clock == KSA_CLOCKS - 1 and self.next_phase is ClockPhase.RISING

    # Edge semantics

    def _rise(self) -> HwTraceEvent:
        if self.clock == 0:
            self.bank.fill_identity()
            self.j = 0
            self.i = 0
            return self._event(ClockPhase.RISING)
        storage_commit(self.bank, self.i, self.j)
        return self._event(ClockPhase.RISING, swapped=True)

    def _fall(self) -> HwTraceEvent:
        if self.clock < N:
            self.i = self.counter.advance()
            self.j = (self.j + self.bank.cells[self.i] + self.k_array[self.i]) & 0xFF
            self.bank.activity.counter_advances += 1
            self.bank.activity.j_updates += 1
            storage_latch(self.bank, self.i, self.j)
        return self._event(ClockPhase.FALLING)

    # Fast path

    def run(self) -> int:
        """Run the remaining KSA clocks; returns how many clocks were spent."""
        start = self.clocks_elapsed
        if self.clock != -1:
            while not self.finished:
                self.next_edge()
            return self.clocks_elapsed - start

        self.clock = 0
        self.bank.fill_identity()
        s = self.bank.cells
        k = self.k_array
        j = 0
        aliased = 0
        si = sj = 0
        for i in range(N):
            si = s[i]
            j = (j + si + k[i]) & 0xFF
            sj = s[j]
            s[i] = sj
            s[j] = si
            if i == j:
                aliased += 1
        self.i = N - 1
        self.j = j
        self.bank.latch_i = si
        self.bank.latch_j = sj
        self.counter.value = N - 1
        self.counter.started = True
        self.clock = KSA_CLOCKS - 1
        self.next_phase = ClockPhase.RISING

        act = self.bank.activity
        act.commits += N
        act.cell_writes += 2 * N - aliased
        act.latch_loads += 2 * N
        act.j_updates += N
        act.counter_advances += N
        return KSA_CLOCKS


class PrgaUnit(_Unit):
    """
    Keystream generation on the shared bank, enabled once the KSA unit is done.

    Clock 0 rising sets j := 0; the falling edge of clock k latches byte k+1 and
    the rising edge of clock k+1 commits it and emits z.
    """

    unit = HwUnit.PRGA

    def __init__(self, bank: RegisterBank, ksa_unit: KsaUnit):
        super().__init__(bank, counter_start=1)
        self.ksa_unit = ksa_unit
        self.bytes_emitted = 0

    @property
    def started(self) -> bool:
        return self.clock >= 0

    def _require_ksa(self):
        if not self.ksa_unit.finished:
            raise SimulatorProtocolError("PRGA driven before KSA completed")

    def _rise(self) -> HwTraceEvent:
        if self.clock == 0:
            self.j = 0
            self.i = 0
            return self._event(ClockPhase.RISING)
        storage_commit(self.bank, self.i, self.j)
        z = self.bank.cells[(self.bank.latch_i + self.bank.latch_j) & 0xFF]
        self.bytes_emitted += 1
        return self._event(ClockPhase.RISING, z=z, swapped=True)

    def _fall(self) -> HwTraceEvent:
        self.i = self.counter.advance()
        self.j = (self.j + self.bank.cells[self.i]) & 0xFF
        self.bank.activity.counter_advances += 1
        self.bank.activity.j_updates += 1
        storage_latch(self.bank, self.i, self.j)
        return self._event(ClockPhase.FALLING)

    def rising_edge(self) -> HwTraceEvent:
        self._require_ksa()
        return super().rising_edge()

    def run(self, n: int) -> Tuple[bytes, int]:
        """
        Produce n keystream octets.

        Returns the octets and the clocks spent: n + 1 on a fresh unit (the init
        clock), n when continuing.
        """
        if n < 1:
            raise InvalidCountError(f"PRGA run needs n >= 1, got {n}")
        self._require_ksa()
        start = self.clocks_elapsed
        out = bytearray()
        remaining = n
        if not self.started:
            self.rising_edge()
        elif self.next_phase is ClockPhase.RISING:
            # a lone falling edge left a latch pending
            out.append(self.rising_edge().z)
            remaining -= 1

        s = self.bank.cells
        i = self.counter.value
        j = self.j
        si = self.bank.latch_i
        sj = self.bank.latch_j
        aliased = 0
        buf = bytearray(remaining)
        for k in range(remaining):
            i = (i + 1) & 0xFF
            si = s[i]
            j = (j + si) & 0xFF
            sj = s[j]
            s[i] = sj
            s[j] = si
            if i == j:
                aliased += 1
            buf[k] = s[(si + sj) & 0xFF]
        out += buf

        if remaining:
            self.i = i
            self.j = j
            self.counter.value = i
            self.counter.started = True
            self.bank.latch_i = si
            self.bank.latch_j = sj
            self.clock += remaining
            self.next_phase = ClockPhase.FALLING
            self.bytes_emitted += remaining
            act = self.bank.activity
            act.commits += remaining
            act.cell_writes += 2 * remaining - aliased
            act.latch_loads += 2 * remaining
            act.j_updates += remaining
            act.counter_advances += remaining
        return bytes(out), self.clocks_elapsed - start


class Rc4Hardware:
    """Storage block plus KSA and PRGA units for one key."""

    def __init__(self, key: KeyLike):
        self.key = as_key(key)
        self.activity = ActivityCounters()
        self.bank = RegisterBank(self.activity)
        self.ksa = KsaUnit(self.bank, key_array(self.key))
        self.prga = PrgaUnit(self.bank, self.ksa)

    @property
    def total_clocks(self) -> int:
        return self.ksa.clocks_elapsed + self.prga.clocks_elapsed

    def keystream(self, n: int) -> bytes:
        """Next n keystream octets, running KSA first when needed."""
        if n < 1:
            raise InvalidCountError(f"byte count must be >= 1, got {n}")
        if not self.ksa.finished:
            self.ksa.run()
        stream, _ = self.prga.run(n)
        return stream

    def sbox(self) -> bytes:
        return bytes(self.bank.cells)


HardwareUnit = Union[KsaUnit, PrgaUnit]


def ksa_run(key: KeyLike) -> Tuple[bytes, int]:
    """Key scheduling on fresh hardware; returns the final S-box and the clocks spent (257)."""
    hw = Rc4Hardware(key)
    clocks = hw.ksa.run()
    return hw.sbox(), clocks


def prga_step(unit: PrgaUnit) -> Tuple[HwTraceEvent, HwTraceEvent]:
    """
    One keystream byte at edge granularity: the falling edge that latches it and
    the rising edge that commits and emits it. The init clock's rising edge is
    applied first on a fresh unit.
    """
    if not unit.ksa_unit.finished:
        raise SimulatorProtocolError("PRGA driven before KSA completed")
    if not unit.started:
        unit.rising_edge()
    if unit.next_phase is ClockPhase.RISING:
        raise SimulatorProtocolError("prga_step called with a latch already pending")
    falling = unit.falling_edge()
    rising = unit.rising_edge()
    return falling, rising


def prga_run(unit: PrgaUnit, n: int) -> Tuple[bytes, int]:
    """n keystream octets and the clocks spent producing them."""
    return unit.run(n)


def rc4_hw_encrypt(key: KeyLike, data: bytes) -> Tuple[bytes, CycleReport]:
    """XOR data with the hardware keystream and account every clock."""
    n = len(data)
    if n < 1:
        raise InvalidCountError("hardware encryption needs at least one octet")
    hw = Rc4Hardware(key)
    ksa_clocks = hw.ksa.run()
    stream, prga_clocks = hw.prga.run(n)
    report = CycleReport.from_clocks(ksa_clocks, prga_clocks, n)
    logger.debug("hw encrypt: %d octets in %d clocks", n, report.total_clocks)
    return xor_bytes(bytes(data), stream), report


def trace_collect(unit: HardwareUnit, max_clocks: int) -> List[HwTraceEvent]:
    """
    Edge events for up to max_clocks clocks, two per clock.

    Stops early when a KSA unit has finished its 257 clocks.
    """
    if max_clocks < 0:
        raise InvalidCountError(f"max_clocks must be >= 0, got {max_clocks}")
    events = []
    for _ in range(max_clocks):
        if unit.finished:
            break
        events.extend(unit.tick())
    return events


def compare_designs(n: int) -> List[DesignClockRow]:
    """Clock counts of four RC4 hardware schedules for n bytes; the last row is this simulator."""
    if n < 1:
        raise InvalidCountError(f"byte count must be >= 1, got {n}")
    schedules = (
        ("three_clock_per_byte", 3 * N, 3 * n),
        ("pipelined_three_init", 259, 3 + n),
        ("two_byte_two_clock", KSA_CLOCKS, 2 + n),
        ("one_byte_one_clock", KSA_CLOCKS, PRGA_INIT_CLOCKS + n),
    )
    rows = []
    for name, ksa_clocks, prga_clocks in schedules:
        base = CycleReport.from_clocks(ksa_clocks, prga_clocks, n)
        rows.append(DesignClockRow(design=name, **base.model_dump()))
    return rows
