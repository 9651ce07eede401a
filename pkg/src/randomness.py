"""
Statistical randomness harness for RC4 keystreams.

Covers corpus generation (one derived key per sample), the built-in tests
(frequency, block frequency, runs, cumulative sums, serial, approximate entropy),
the P-value machinery (erfc, igamc) and the meta-analysis applied to every
test's P-values: proportion of passing against (1 - alpha) - 3*sqrt(alpha*(1 - alpha)/m),
chi-square uniformity over ten bins (POP) and the 11-range histogram.

Test functions accept ``relaxed=True`` to skip the length preconditions, which
is how the short textbook sequences are evaluated.
"""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaincc, ndtr

from .errors import DataFormatError, InvalidArgumentError, InvalidCountError
from .rc4_core import RC4Key, keystream
from .schemas import (
    BUILTIN_TESTS,
    CusumMode,
    ProportionReport,
    PValue,
    StreamSummary,
    SuiteConfig,
    SuiteReport,
    UniformityReport,
)

logger = logging.getLogger(__name__)

CANONICAL_SAMPLES = 300
CANONICAL_BITS = 1342400
MIN_BITS = 100
DEFAULT_ALPHA = 0.01
POP_THRESHOLD = 0.0001

# Ten equal uniformity bins and the 11 histogram ranges; last bin closed at 1.0.
UNIFORMITY_EDGES = np.array([0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
HISTOGRAM_EDGES = np.array([0.0, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
HISTOGRAM_LABELS = ("0-.01", ".01-.1", ".1-.2", ".2-.3", ".3-.4", ".4-.5",
                    ".5-.6", ".6-.7", ".7-.8", ".8-.9", ".9-1")

# P-values contributed per sample by each built-in test
PVALUES_PER_SAMPLE = {
    "frequency": 1,
    "block_frequency": 1,
    "runs": 1,
    "cumulative_sums": 2,
    "serial": 2,
    "approximate_entropy": 1,
}

# 64-bit LCG for per-sample keys
LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
LCG_MASK = (1 << 64) - 1
SAMPLE_KEY_LENGTH = 16


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BitSample:
    """n bits packed into octets, most significant bit first."""
    data: bytes
    n_bits: int
    sample_index: int = 0

    def __post_init__(self):
        if self.n_bits < 0 or self.n_bits > 8 * len(self.data):
            raise InvalidArgumentError(f"{self.n_bits} bits do not fit in {len(self.data)} octets")

    @classmethod
    def from_bytes(cls, data: bytes, sample_index: int = 0) -> "BitSample":
        return cls(bytes(data), 8 * len(data), sample_index)

    @classmethod
    def from_bits(cls, bits: Union[str, Sequence[int]], sample_index: int = 0) -> "BitSample":
        """Build from a '0'/'1' string or a sequence of bit values."""
        if isinstance(bits, str):
            text = "".join(bits.split())
            if set(text) - {"0", "1"}:
                raise InvalidArgumentError("bit string may only contain 0 and 1")
            arr = np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            arr = np.asarray(bits, dtype=np.uint8)
        return cls(np.packbits(arr).tobytes(), int(arr.size), sample_index)

    def bits(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self.data, dtype=np.uint8), count=self.n_bits)

    def __len__(self) -> int:
        return self.n_bits


SampleLike = Union[BitSample, str, Sequence[int], np.ndarray]


def _as_sample(sample: SampleLike) -> BitSample:
    if isinstance(sample, BitSample):
        return sample
    return BitSample.from_bits(sample)


def _prepare(sample: SampleLike, relaxed: bool) -> Tuple[np.ndarray, int]:
    s = _as_sample(sample)
    if not relaxed and s.n_bits < MIN_BITS:
        raise InvalidArgumentError(f"sample has {s.n_bits} bits; at least {MIN_BITS} required")
    if s.n_bits == 0:
        raise InvalidArgumentError("empty sample")
    return s.bits(), s.sample_index


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def erfc(x: float) -> float:
    """Complementary error function."""
    if not math.isfinite(x):
        raise InvalidArgumentError(f"erfc needs a finite argument, got {x}")
    return math.erfc(x)


def igamc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    if not (a > 0 and math.isfinite(a)):
        raise InvalidArgumentError(f"igamc needs a > 0, got {a}")
    if not (x >= 0 and math.isfinite(x)):
        raise InvalidArgumentError(f"igamc needs x >= 0, got {x}")
    return float(gammaincc(a, x))


def _clamp_p(p: float) -> float:
    return min(1.0, max(0.0, float(p)))


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------

def test_frequency(sample: SampleLike, relaxed: bool = False) -> PValue:
    """Monobit test."""
    bits, idx = _prepare(sample, relaxed)
    n = bits.size
    s_n = 2 * int(np.count_nonzero(bits)) - n
    p = erfc(abs(s_n) / math.sqrt(n) / math.sqrt(2))
    return PValue(value=_clamp_p(p), test_name="frequency", sample_index=idx)


def test_block_frequency(sample: SampleLike, M: int = 128, relaxed: bool = False) -> PValue:
    """Frequency within blocks of M bits; trailing bits are discarded."""
    bits, idx = _prepare(sample, relaxed)
    n = bits.size
    if M < 2:
        raise InvalidArgumentError(f"block length must be >= 2, got {M}")
    if M > n:
        raise InvalidArgumentError(f"block length {M} exceeds sample length {n}")
    blocks = n // M
    pi = bits[: blocks * M].reshape(blocks, M).sum(axis=1, dtype=np.int64) / M
    chi_squared = 4.0 * M * float(np.sum((pi - 0.5) ** 2))
    p = igamc(blocks / 2.0, chi_squared / 2.0)
    return PValue(value=_clamp_p(p), test_name="block_frequency", sample_index=idx)


def test_runs(sample: SampleLike, relaxed: bool = False) -> PValue:
    """Runs test; a failed frequency pretest yields P = 0."""
    bits, idx = _prepare(sample, relaxed)
    n = bits.size
    pi = np.count_nonzero(bits) / n
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        return PValue(value=0.0, test_name="runs", sample_index=idx)
    runs = int(np.count_nonzero(np.diff(bits))) + 1
    p = erfc(abs(runs - 2 * n * pi * (1 - pi)) / (2 * math.sqrt(2 * n) * pi * (1 - pi)))
    return PValue(value=_clamp_p(p), test_name="runs", sample_index=idx)


def test_cusum(sample: SampleLike, mode: CusumMode = CusumMode.FORWARD, relaxed: bool = False) -> PValue:
    """Cumulative sums test, walking forward or backward over the +/-1 sequence."""
    bits, idx = _prepare(sample, relaxed)
    mode = CusumMode(mode)
    n = bits.size
    steps = 2 * bits.astype(np.int64) - 1
    if mode is CusumMode.BACKWARD:
        steps = steps[::-1]
    z = int(np.max(np.abs(np.cumsum(steps))))
    root_n = math.sqrt(n)

    k1 = np.arange(math.floor((-n / z + 1) / 4), math.floor((n / z - 1) / 4) + 1)
    k2 = np.arange(math.floor((-n / z - 3) / 4), math.floor((n / z - 1) / 4) + 1)
    sum1 = np.sum(ndtr((4 * k1 + 1) * z / root_n) - ndtr((4 * k1 - 1) * z / root_n))
    sum2 = np.sum(ndtr((4 * k2 + 3) * z / root_n) - ndtr((4 * k2 + 1) * z / root_n))
    p = 1.0 - float(sum1) + float(sum2)
    return PValue(value=_clamp_p(p), test_name="cumulative_sums", sample_index=idx)


def _pattern_counts(bits: np.ndarray, k: int) -> np.ndarray:
    """Counts of every k-bit pattern over the cyclically extended sequence."""
    n = bits.size
    extended = np.concatenate((bits, bits[: k - 1])).astype(np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for offset in range(k):
        codes = (codes << 1) | extended[offset: offset + n]
    return np.bincount(codes, minlength=1 << k)


def _psi_numerator(bits: np.ndarray, k: int) -> int:
    """n * psi^2_k, kept as an exact integer."""
    n = bits.size
    if k <= 0:
        return 0
    counts = _pattern_counts(bits, k)
    return (1 << k) * int(np.dot(counts, counts)) - n * n


def test_serial(sample: SampleLike, m: int = 16, relaxed: bool = False) -> Tuple[PValue, PValue]:
    """Serial test; two P-values from the first and second differences of psi^2."""
    bits, idx = _prepare(sample, relaxed)
    n = bits.size
    if m < 2:
        raise InvalidArgumentError(f"serial pattern length must be >= 2, got {m}")
    if m > n or (not relaxed and m >= int(math.log2(n)) - 2):
        raise InvalidArgumentError(f"serial pattern length {m} too large for {n} bits")
    psi_m = _psi_numerator(bits, m)
    psi_m1 = _psi_numerator(bits, m - 1)
    psi_m2 = _psi_numerator(bits, m - 2)
    del1 = max(0.0, (psi_m - psi_m1) / n)
    del2 = max(0.0, (psi_m - 2 * psi_m1 + psi_m2) / n)
    p1 = igamc(2 ** (m - 2), del1 / 2.0)
    p2 = igamc(2 ** (m - 3), del2 / 2.0)
    return (
        PValue(value=_clamp_p(p1), test_name="serial", sample_index=idx),
        PValue(value=_clamp_p(p2), test_name="serial", sample_index=idx),
    )


def _phi(bits: np.ndarray, k: int) -> float:
    counts = _pattern_counts(bits, k)
    c = counts[counts > 0] / bits.size
    return float(np.sum(c * np.log(c)))


def test_apen(sample: SampleLike, m: int = 10, relaxed: bool = False) -> PValue:
    """Approximate entropy test with cyclic pattern counting."""
    bits, idx = _prepare(sample, relaxed)
    n = bits.size
    if m < 1:
        raise InvalidArgumentError(f"approximate entropy pattern length must be >= 1, got {m}")
    if m + 1 > n or (not relaxed and m >= int(math.log2(n)) - 5):
        raise InvalidArgumentError(f"approximate entropy pattern length {m} too large for {n} bits")
    apen = _phi(bits, m) - _phi(bits, m + 1)
    chi_squared = max(0.0, 2.0 * n * (math.log(2) - apen))
    p = igamc(2 ** (m - 1), chi_squared / 2.0)
    return PValue(value=_clamp_p(p), test_name="approximate_entropy", sample_index=idx)


# ---------------------------------------------------------------------------
# Meta-analysis
# ---------------------------------------------------------------------------

PValueLike = Union[PValue, float]


def _values(pvalues: Iterable[PValueLike]) -> np.ndarray:
    vals = np.array([p.value if isinstance(p, PValue) else float(p) for p in pvalues], dtype=float)
    if vals.size and (np.any(vals < 0.0) or np.any(vals > 1.0) or np.any(np.isnan(vals))):
        raise InvalidArgumentError("P-values must lie in [0, 1]")
    return vals


def _bin_counts(values: np.ndarray, edges: np.ndarray) -> List[int]:
    bins = edges.size - 1
    if values.size == 0:
        return [0] * bins
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.clip(idx, 0, bins - 1)
    return [int(c) for c in np.bincount(idx, minlength=bins)]


def expected_proportion(alpha: float, m: int) -> float:
    """Lower confidence bound on the proportion of passing for m P-values."""
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if m < 1:
        raise InvalidCountError(f"m must be >= 1, got {m}")
    return (1 - alpha) - 3 * math.sqrt(alpha * (1 - alpha) / m)


def proportion_of_passing(pvalues: Sequence[PValueLike], alpha: float = DEFAULT_ALPHA) -> ProportionReport:
    vals = _values(pvalues)
    m = int(vals.size)
    if m == 0:
        raise InvalidArgumentError("proportion of passing needs at least one P-value")
    if m < MIN_BITS:
        logger.warning("proportion of passing over %d P-values; the bound assumes at least 100", m)
    failures = int(np.count_nonzero(vals < alpha))
    observed = Fraction(m - failures, m)
    expected_lower = expected_proportion(alpha, m)
    return ProportionReport(
        m=m,
        failures=failures,
        alpha=alpha,
        observed=observed,
        expected_lower=expected_lower,
        passed=observed >= Fraction(expected_lower),
    )


def uniformity_from_bins(bin_counts: Sequence[int]) -> UniformityReport:
    """Chi-square over ten bin counts and its P-value (POP)."""
    counts = [int(c) for c in bin_counts]
    if len(counts) != 10:
        raise InvalidArgumentError(f"uniformity needs 10 bins, got {len(counts)}")
    m = sum(counts)
    if m == 0:
        raise InvalidArgumentError("uniformity needs at least one P-value")
    expected = m / 10.0
    chi_squared = sum((c - expected) ** 2 for c in counts) / expected
    pop = igamc(9 / 2.0, chi_squared / 2.0)
    return UniformityReport(
        bin_counts=counts,
        chi_square=chi_squared,
        pop=pop,
        uniform=pop >= POP_THRESHOLD,
    )


def pvalue_uniformity(pvalues: Sequence[PValueLike]) -> UniformityReport:
    vals = _values(pvalues)
    if vals.size == 0:
        raise InvalidArgumentError("uniformity needs at least one P-value")
    if vals.size < MIN_BITS:
        logger.warning("uniformity over %d P-values; the test assumes at least 100", vals.size)
    return uniformity_from_bins(_bin_counts(vals, UNIFORMITY_EDGES))


def histogram_ranges(pvalues: Sequence[PValueLike]) -> List[int]:
    """Counts over [0,.01), [.01,.1), [.1,.2), ..., [.9,1]."""
    return _bin_counts(_values(pvalues), HISTOGRAM_EDGES)


def summarize_stream(test_name: str, pvalues: Sequence[PValueLike], pvalues_per_sample: int,
                     alpha: float = DEFAULT_ALPHA, external: bool = False,
                     sample_indices: Optional[Sequence[int]] = None) -> StreamSummary:
    vals = _values(pvalues)
    if sample_indices is None:
        sample_indices = [p.sample_index for p in pvalues if isinstance(p, PValue)]
    return StreamSummary(
        test_name=test_name,
        pvalues_per_sample=pvalues_per_sample,
        pvalues=[float(v) for v in vals],
        sample_indices=list(sample_indices),
        proportion=proportion_of_passing(vals, alpha),
        uniformity=pvalue_uniformity(vals),
        histogram=histogram_ranges(vals),
        external=external,
    )


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------

def derive_sample_key(sample_index: int) -> RC4Key:
    """16-octet key: top octet of each of the first 16 LCG steps seeded with sample_index + 1."""
    if sample_index < 0:
        raise InvalidArgumentError(f"sample index must be >= 0, got {sample_index}")
    x = sample_index + 1
    out = bytearray()
    for _ in range(SAMPLE_KEY_LENGTH):
        x = (LCG_MULTIPLIER * x + LCG_INCREMENT) & LCG_MASK
        out.append(x >> 56)
    return RC4Key(bytes(out))


def _sample_for(args: Tuple[int, int]) -> BitSample:
    index, n_octets = args
    return BitSample(keystream(derive_sample_key(index), n_octets), 8 * n_octets, index)


def generate_corpus(num_samples: int, bits_per_sample: int, workers: int = 1) -> List[BitSample]:
    """Keystream samples 0..num_samples-1, each from its own derived key."""
    if bits_per_sample % 8 != 0:
        raise InvalidArgumentError(f"bits per sample must be a multiple of 8, got {bits_per_sample}")
    if num_samples < 0 or bits_per_sample < 0:
        raise InvalidCountError("sample count and length must be >= 0")
    n_octets = bits_per_sample // 8
    jobs = [(i, n_octets) for i in range(num_samples)]
    logger.info("generating %d samples of %d bits (%d workers)", num_samples, bits_per_sample, workers)
    if workers > 1 and num_samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sample_for, jobs))
    return [_sample_for(job) for job in jobs]


MANIFEST_NAME = "manifest.csv"


def write_corpus(corpus: Sequence[BitSample], directory: str) -> str:
    """Write sample_<index>.bin files plus the manifest; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    lines = []
    for sample in corpus:
        with open(os.path.join(directory, f"sample_{sample.sample_index}.bin"), "wb") as f:
            f.write(sample.data)
        key_hex = derive_sample_key(sample.sample_index).hex()
        lines.append(f"{sample.sample_index},{key_hex},{sample.n_bits}\n")
    manifest = os.path.join(directory, MANIFEST_NAME)
    with open(manifest, "w") as f:
        f.writelines(lines)
    logger.info("wrote %d samples to %s", len(corpus), directory)
    return manifest


def read_corpus(directory: str) -> List[BitSample]:
    """Load a corpus written by write_corpus, checking each file against the manifest."""
    manifest = os.path.join(directory, MANIFEST_NAME)
    corpus = []
    with open(manifest) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataFormatError(f"{manifest}:{lineno}: expected index,key_hex,bits")
            try:
                index, n_bits = int(parts[0]), int(parts[2])
            except ValueError:
                raise DataFormatError(f"{manifest}:{lineno}: index and bits must be integers")
            with open(os.path.join(directory, f"sample_{index}.bin"), "rb") as sf:
                data = sf.read()
            if len(data) != (n_bits + 7) // 8:
                raise DataFormatError(
                    f"sample_{index}.bin holds {len(data)} octets; manifest says {n_bits} bits"
                )
            corpus.append(BitSample(data, n_bits, index))
    return corpus


def read_pvalue_lines(lines: Iterable[str]) -> Dict[str, List[PValue]]:
    """Parse `test_name,sample_index,p_value` lines; blank lines and # comments are skipped."""
    streams: Dict[str, List[PValue]] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3 or not parts[0]:
            raise DataFormatError(f"line {lineno}: expected test_name,sample_index,p_value")
        try:
            index = int(parts[1])
            value = float(parts[2])
        except ValueError:
            raise DataFormatError(f"line {lineno}: malformed sample index or P-value")
        if not 0.0 <= value <= 1.0 or index < 0:
            raise DataFormatError(f"line {lineno}: P-value {value} or index {index} out of range")
        if parts[0].lower() in BUILTIN_TESTS:
            raise DataFormatError(f"line {lineno}: {parts[0]!r} is a built-in test; external P-values are only for other tests")
        streams.setdefault(parts[0], []).append(
            PValue(value=value, test_name=parts[0], sample_index=index)
        )
    return streams


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------

def evaluate_sample(sample: BitSample, config: SuiteConfig) -> Dict[str, List[float]]:
    """Every selected test's P-values for one sample."""
    out: Dict[str, List[float]] = {}
    for name in config.tests:
        if name == "frequency":
            out[name] = [test_frequency(sample).value]
        elif name == "block_frequency":
            out[name] = [test_block_frequency(sample, config.block_length).value]
        elif name == "runs":
            out[name] = [test_runs(sample).value]
        elif name == "cumulative_sums":
            out[name] = [test_cusum(sample, mode).value for mode in (CusumMode.FORWARD, CusumMode.BACKWARD)]
        elif name == "serial":
            out[name] = [p.value for p in test_serial(sample, config.serial_m)]
        elif name == "approximate_entropy":
            out[name] = [test_apen(sample, config.apen_m).value]
    return out


def _evaluate_job(args: Tuple[BitSample, SuiteConfig]) -> Dict[str, List[float]]:
    return evaluate_sample(*args)


def run_suite(corpus: Sequence[BitSample], config: Optional[SuiteConfig] = None,
              external: Optional[Mapping[str, Sequence[PValue]]] = None) -> SuiteReport:
    """
    Run the selected tests over every sample and summarise each P-value stream.

    Tests with two P-values per sample pool both into one stream of 2m values.
    External streams are summarised alongside, after the built-in ones; their
    names must not collide with a built-in test.
    """
    config = config or SuiteConfig()
    if not corpus:
        raise InvalidArgumentError("corpus is empty")
    n_bits = min(s.n_bits for s in corpus)
    clashing = sorted(name for name in (external or {}) if name.lower() in BUILTIN_TESTS)
    if clashing:
        raise InvalidArgumentError(f"external P-values reuse built-in test names: {', '.join(clashing)}")

    logger.info("running %s over %d samples", ", ".join(config.tests), len(corpus))
    jobs = [(s, config) for s in corpus]
    if config.workers > 1 and len(corpus) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_sample = list(pool.map(_evaluate_job, jobs))
    else:
        per_sample = [_evaluate_job(job) for job in jobs]

    rows = []
    for name in BUILTIN_TESTS:
        if name not in config.tests:
            continue
        pooled = [p for result in per_sample for p in result[name]]
        indices = [s.sample_index for s, result in zip(corpus, per_sample) for _ in result[name]]
        rows.append(summarize_stream(name, pooled, PVALUES_PER_SAMPLE[name], config.alpha,
                                     sample_indices=indices))

    for name, pvalues in sorted((external or {}).items()):
        if not pvalues:
            continue
        samples = len({p.sample_index for p in pvalues})
        rows.append(summarize_stream(name, pvalues, max(1, len(pvalues) // samples),
                                     config.alpha, external=True))

    report = SuiteReport(samples=len(corpus), bits_per_sample=n_bits, rows=rows)
    logger.info("suite done: %d of %d P-values below alpha", report.total_failures, report.total_pvalues)
    return report
