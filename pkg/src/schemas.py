"""
Pydantic schemas for reports, configuration and trace records, plus the enums
shared across modules.
"""

import enum
from datetime import datetime
from fractions import Fraction
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator


# Enums

class ClockPhase(str, enum.Enum):
    """Clock edge of one simulator event."""
    RISING = "rising"
    FALLING = "falling"


class HwUnit(str, enum.Enum):
    """Hardware unit that produced a trace event."""
    KSA = "ksa"
    PRGA = "prga"


class GatingMode(str, enum.Enum):
    """Clock management of the two unit clock nets."""
    UNGATED = "ungated"
    GATED = "gated"


class CusumMode(str, enum.Enum):
    """Walk direction of the cumulative sums test."""
    FORWARD = "forward"
    BACKWARD = "backward"


class SessionRole(str, enum.Enum):
    """Direction of a transport session."""
    SENDER = "sender"
    RECEIVER = "receiver"


class EngineKind(str, enum.Enum):
    """Keystream generator backing a session or command."""
    REFERENCE = "reference"
    HARDWARE = "hw"


# Names of the statistical tests computed in-module, in report order.
BUILTIN_TESTS = (
    "frequency",
    "block_frequency",
    "runs",
    "cumulative_sums",
    "serial",
    "approximate_entropy",
)


def _fraction_text(v: Fraction) -> str:
    return str(v)


# Hardware model schemas

class HwTraceEvent(BaseModel):
    """One clock edge of the simulator."""
    clock_index: int = Field(..., ge=0)
    phase: ClockPhase
    unit: HwUnit
    i: int = Field(..., ge=0, le=255)
    j: int = Field(..., ge=0, le=255)
    s_i: int = Field(..., ge=0, le=255, description="Latched S[i]")
    s_j: int = Field(..., ge=0, le=255, description="Latched S[j]")
    z: Optional[int] = Field(None, ge=0, le=255, description="Keystream octet emitted on this edge")
    swapped: bool = False

    model_config = ConfigDict(frozen=True)

    def to_line(self) -> str:
        """Tab-separated trace export line."""
        z = f"{self.z:02x}" if self.z is not None else "-"
        return "\t".join((
            str(self.clock_index),
            self.phase.value,
            self.unit.value,
            str(self.i),
            str(self.j),
            str(self.s_i),
            str(self.s_j),
            z,
            "1" if self.swapped else "0",
        ))


class CycleReport(BaseModel):
    """Clock accounting for one encryption of n_bytes octets."""
    ksa_clocks: int
    prga_clocks: int
    total_clocks: int
    n_bytes: int = Field(..., ge=1)
    ksa_per_byte: Fraction
    prga_per_byte: Fraction
    rc4_per_byte: Fraction

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_serializer("ksa_per_byte", "prga_per_byte", "rc4_per_byte", when_used="json")
    def _rationals(self, v: Fraction) -> str:
        return _fraction_text(v)

    @classmethod
    def from_clocks(cls, ksa_clocks: int, prga_clocks: int, n_bytes: int) -> "CycleReport":
        total = ksa_clocks + prga_clocks
        return cls(
            ksa_clocks=ksa_clocks,
            prga_clocks=prga_clocks,
            total_clocks=total,
            n_bytes=n_bytes,
            ksa_per_byte=Fraction(ksa_clocks, 256),
            prga_per_byte=Fraction(prga_clocks, n_bytes),
            rc4_per_byte=Fraction(total, n_bytes),
        )


class DesignClockRow(CycleReport):
    """Clock accounting of one hardware schedule in the design comparison."""
    design: str


# Switching activity schemas

class ActivityReport(BaseModel):
    """Switching-activity counters of one simulated encryption."""
    mode: GatingMode
    n_bytes: int = Field(..., ge=1)
    total_clocks: int
    ksa_clock_toggles: int
    prga_clock_toggles: int
    register_writes: int
    latch_loads: int
    total_toggles: int
    ksa_toggles_after_handoff: int = Field(0, description="ksa_clk toggles at clocks >= 257")
    ksa_active_clocks: int = Field(0, description="Clocks in which the KSA unit did work")
    prga_active_clocks: int = Field(0, description="Clocks in which the PRGA unit did work")

    model_config = ConfigDict(frozen=True)

    @property
    def clock_toggles(self) -> int:
        return self.ksa_clock_toggles + self.prga_clock_toggles


class GatingComparison(BaseModel):
    """Gated vs ungated activity for the same key and length."""
    ungated: ActivityReport
    gated: ActivityReport
    toggle_saving_fraction: Fraction
    clock_saving_fraction: Fraction

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_serializer("toggle_saving_fraction", "clock_saving_fraction", when_used="json")
    def _rationals(self, v: Fraction) -> str:
        return _fraction_text(v)

    @classmethod
    def from_reports(cls, ungated: ActivityReport, gated: ActivityReport) -> "GatingComparison":
        return cls(
            ungated=ungated,
            gated=gated,
            toggle_saving_fraction=1 - Fraction(gated.total_toggles, ungated.total_toggles),
            clock_saving_fraction=1 - Fraction(gated.clock_toggles, ungated.clock_toggles),
        )


class PowerColumn(BaseModel):
    """Measured power of one architecture, in watts."""
    architecture: str
    total: float
    quiescent: float
    dynamic: float
    clock: float
    logic: float
    ios: float
    signal: float


class ReferencePower(BaseModel):
    """Measured wattage of the three architectures and the savings of clock gating."""
    columns: List[PowerColumn]
    dynamic_saving: float
    total_saving: float


# Randomness schemas

class PValue(BaseModel):
    """One P-value of one test stream on one sample."""
    value: float = Field(..., ge=0.0, le=1.0)
    test_name: str
    sample_index: int = Field(..., ge=0)

    model_config = ConfigDict(frozen=True)


class ProportionReport(BaseModel):
    """Proportion of P-values at or above alpha, against the lower confidence bound."""
    m: int
    failures: int
    alpha: float
    observed: Fraction
    expected_lower: float
    passed: bool

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_serializer("observed", when_used="json")
    def _observed(self, v: Fraction) -> float:
        return float(v)


class UniformityReport(BaseModel):
    """Chi-square uniformity of P-values over ten equal bins."""
    bin_counts: List[int]
    chi_square: float
    pop: float
    uniform: bool

    model_config = ConfigDict(frozen=True)


class StreamSummary(BaseModel):
    """Meta-analysis of one test's pooled P-values."""
    test_name: str
    pvalues_per_sample: int
    pvalues: List[float]
    sample_indices: List[int] = Field(default_factory=list, description="Sample of each P-value, parallel to pvalues")
    proportion: ProportionReport
    uniformity: UniformityReport
    histogram: List[int]
    external: bool = False


class SuiteReport(BaseModel):
    """Proportion of passing and uniformity status for every test."""
    samples: int
    bits_per_sample: int
    rows: List[StreamSummary]

    @property
    def total_pvalues(self) -> int:
        return sum(row.proportion.m for row in self.rows)

    @property
    def total_failures(self) -> int:
        return sum(row.proportion.failures for row in self.rows)

    @property
    def all_passed(self) -> bool:
        return all(row.proportion.passed and row.uniformity.uniform for row in self.rows)

    def row(self, test_name: str) -> Optional[StreamSummary]:
        for r in self.rows:
            if r.test_name == test_name:
                return r
        return None


class SuiteConfig(BaseModel):
    """Test selection and parameters for a suite run."""
    tests: List[str] = Field(default_factory=lambda: list(BUILTIN_TESTS))
    block_length: int = Field(128, ge=2, description="Block frequency block length M")
    serial_m: int = Field(16, ge=2, description="Serial test pattern length")
    apen_m: int = Field(10, ge=1, description="Approximate entropy pattern length")
    alpha: float = Field(0.01, gt=0.0, lt=1.0)
    workers: int = Field(1, ge=1)

    @field_validator("tests", mode="before")
    @classmethod
    def _normalize_tests(cls, v):
        if v is None:
            return list(BUILTIN_TESTS)
        if isinstance(v, str):
            v = [s for s in v.split(",")]
        names = []
        for name in v:
            s = str(name).strip().lower()
            if s == "":
                continue
            if s not in BUILTIN_TESTS:
                raise ValueError(f"unknown test {s!r}; expected one of {', '.join(BUILTIN_TESTS)}")
            if s not in names:
                names.append(s)
        if not names:
            raise ValueError("at least one test must be selected")
        return names


class SuiteRunInfo(BaseModel):
    """Stored suite run as listed by the store and the web API."""
    id: int
    label: Optional[str] = None
    samples: int
    bits_per_sample: int
    tests: str
    block_length: int
    serial_m: int
    apen_m: int
    alpha: float
    rc4sim_version: str
    created_at: datetime

    model_config = ConfigDict(from_attributes=True)


# Transport schemas

class SessionConfig(BaseModel):
    """One endpoint of an encrypted stream."""
    role: SessionRole
    endpoint: str = Field(..., min_length=1, description="host:port")
    key: bytes
    engine: EngineKind = EngineKind.REFERENCE
    listen: bool = Field(False, description="Accept the connection instead of dialing it")

    model_config = ConfigDict(frozen=True)

    @field_validator("key", mode="before")
    @classmethod
    def _normalize_key(cls, v):
        if isinstance(v, str):
            try:
                v = bytes.fromhex(v.strip())
            except ValueError:
                raise ValueError("key must be hex text or bytes")
        if not isinstance(v, (bytes, bytearray)):
            raise ValueError("key must be bytes")
        if not 1 <= len(v) <= 256:
            raise ValueError("key must be 1..256 octets")
        return bytes(v)
