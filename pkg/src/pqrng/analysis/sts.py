"""Eight tests from the NIST SP 800-22 battery, plus the pass-proportion rule.

Implemented: frequency (monobit), frequency within a block, runs, longest
run of ones in a block, cumulative sums (forward and backward), serial (two
p-values), approximate entropy and the discrete Fourier transform test.
Each function takes a 1-D array of 0/1 values and returns p-values; the
formulas and constants follow the reference C implementation (sts-2.1.2),
including its truncating integer division in the cumulative-sums limits.

Parameter choices when not given explicitly:

* block frequency: ``M = 128``
* longest run: ``M = 8, 128, 10^4`` for ``n < 6272``, ``n < 750000`` and above,
  with the category probabilities in ``LONGEST_RUN_TABLES``
* serial: ``m = min(16, floor(log2 n) - 3)`` (the suite requires ``m < floor(log2 n) - 2``)
* approximate entropy: ``m = min(10, floor(log2 n) - 6)`` (requires ``m < floor(log2 n) - 5``)
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import erfc, gammaincc, ndtr

__all__ = [
    "LONGEST_RUN_TABLES",
    "STSParams",
    "TestResult",
    "TestReport",
    "frequency",
    "block_frequency",
    "runs",
    "longest_run",
    "cumulative_sums",
    "serial",
    "approximate_entropy",
    "dft",
    "proportion_interval",
    "nist_subset",
    "TEST_NAMES",
]

# block length -> (category upper values, probabilities); first and last categories are open
LONGEST_RUN_TABLES = {
    8: ((1, 2, 3, 4), (0.21484375, 0.3671875, 0.23046875, 0.1875)),
    128: (
        (4, 5, 6, 7, 8, 9),
        (0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847),
    ),
    10000: (
        (10, 11, 12, 13, 14, 15, 16),
        (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727),
    ),
}


def _pm1(bits: np.ndarray) -> np.ndarray:
    return 2 * bits.astype(np.int64) - 1


def frequency(bits: np.ndarray) -> float:
    n = bits.size
    s = abs(int(np.count_nonzero(bits)) * 2 - n)
    return float(erfc(s / math.sqrt(n) / math.sqrt(2)))


def block_frequency(bits: np.ndarray, m: int = 128) -> float:
    n_blocks = bits.size // m
    if n_blocks < 1:
        raise ValueError(f"block frequency needs at least {m} bits")
    ones = bits[: n_blocks * m].reshape(n_blocks, m).sum(axis=1)
    pi = ones / m
    chi2 = 4.0 * m * float(np.sum((pi - 0.5) ** 2))
    return float(gammaincc(n_blocks / 2.0, chi2 / 2.0))


def runs(bits: np.ndarray) -> float:
    n = bits.size
    pi = np.count_nonzero(bits) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return 0.0
    v_obs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return float(erfc(num / den))


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    """Longest run of ones in each row of a 2-D 0/1 array."""
    n_rows, width = blocks.shape
    padded = np.zeros((n_rows, width + 2), dtype=np.int8)
    padded[:, 1:-1] = blocks
    d = np.diff(padded.ravel())
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    lengths = ends - starts
    rows = starts // (width + 2)
    best = np.zeros(n_rows, dtype=np.int64)
    np.maximum.at(best, rows, lengths)
    return best


def longest_run(bits: np.ndarray) -> float:
    n = bits.size
    if n < 128:
        raise ValueError("longest-run test needs at least 128 bits")
    m = 8 if n < 6272 else 128 if n < 750000 else 10000
    cats, probs = LONGEST_RUN_TABLES[m]
    n_blocks = n // m
    longest = _longest_runs(bits[: n_blocks * m].reshape(n_blocks, m))
    idx = np.clip(longest, cats[0], cats[-1]) - cats[0]
    nu = np.bincount(idx, minlength=len(cats)).astype(float)
    expected = n_blocks * np.asarray(probs)
    chi2 = float(np.sum((nu - expected) ** 2 / expected))
    k = len(cats) - 1
    return float(gammaincc(k / 2.0, chi2 / 2.0))


def _cdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def _cusum_p(n: int, z: int) -> float:
    sq = math.sqrt(n)
    k1 = np.arange(_cdiv(_cdiv(-n, z) + 1, 4), _cdiv(_cdiv(n, z) - 1, 4) + 1)
    sum1 = np.sum(ndtr((4 * k1 + 1) * z / sq) - ndtr((4 * k1 - 1) * z / sq))
    k2 = np.arange(_cdiv(_cdiv(-n, z) - 3, 4), _cdiv(_cdiv(n, z) - 1, 4) + 1)
    sum2 = np.sum(ndtr((4 * k2 + 3) * z / sq) - ndtr((4 * k2 + 1) * z / sq))
    return float(1.0 - sum1 + sum2)


def cumulative_sums(bits: np.ndarray) -> tuple[float, float]:
    """Forward and backward p-values."""
    x = _pm1(bits)
    z_fwd = int(np.max(np.abs(np.cumsum(x))))
    z_bwd = int(np.max(np.abs(np.cumsum(x[::-1]))))
    n = bits.size
    return _cusum_p(n, max(z_fwd, 1)), _cusum_p(n, max(z_bwd, 1))


def _pattern_counts(bits: np.ndarray, m: int) -> np.ndarray:
    """Counts of overlapping m-bit patterns with wrap-around, MSB first."""
    n = bits.size
    ext = np.concatenate([bits, bits[: m - 1]]).astype(np.int64)
    vals = np.zeros(n, dtype=np.int64)
    for t in range(m):
        vals = (vals << 1) | ext[t : t + n]
    return np.bincount(vals, minlength=1 << m)


def _fold(counts: np.ndarray) -> np.ndarray:
    """m-bit counts to (m-1)-bit counts by dropping the last bit."""
    return counts[0::2] + counts[1::2]


def _psi2(counts: np.ndarray, n: int) -> float:
    if counts.size <= 1:
        return 0.0
    return counts.size / n * float(np.sum(counts.astype(float) ** 2)) - n


def serial(bits: np.ndarray, m: int | None = None) -> tuple[float, float]:
    n = bits.size
    if m is None:
        m = min(16, int(math.floor(math.log2(n))) - 3)
    if m < 3:
        raise ValueError(f"serial test needs m >= 3, got {m}")
    c_m = _pattern_counts(bits, m)
    c_m1 = _fold(c_m)
    psi_m, psi_m1, psi_m2 = _psi2(c_m, n), _psi2(c_m1, n), _psi2(_fold(c_m1), n)
    d1 = psi_m - psi_m1
    d2 = psi_m - 2 * psi_m1 + psi_m2
    return float(gammaincc(2 ** (m - 2), d1 / 2)), float(gammaincc(2 ** (m - 3), d2 / 2))


def _phi(counts: np.ndarray, n: int) -> float:
    c = counts[counts > 0] / n
    return float(np.sum(c * np.log(c)))


def approximate_entropy(bits: np.ndarray, m: int | None = None) -> float:
    n = bits.size
    if m is None:
        m = min(10, int(math.floor(math.log2(n))) - 6)
    if m < 1:
        raise ValueError(f"approximate entropy needs m >= 1, got {m}")
    c_next = _pattern_counts(bits, m + 1)
    apen = _phi(_fold(c_next), n) - _phi(c_next, n)
    chi2 = 2.0 * n * (math.log(2) - apen)
    return float(gammaincc(2 ** (m - 1), chi2 / 2))


def dft(bits: np.ndarray) -> float:
    n = bits.size
    mags = np.abs(np.fft.rfft(_pm1(bits).astype(float)))[: n // 2]
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = int(np.count_nonzero(mags < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4)
    return float(erfc(abs(d) / math.sqrt(2)))


# battery


@dataclass(frozen=True)
class STSParams:
    block_frequency_m: int = 128
    serial_m: int | None = None
    apen_m: int | None = None


TEST_NAMES = (
    "frequency",
    "block_frequency",
    "runs",
    "longest_run",
    "cumulative_sums_forward",
    "cumulative_sums_backward",
    "serial_1",
    "serial_2",
    "approximate_entropy",
    "dft",
)


def run_block(bits: np.ndarray, params: STSParams = STSParams()) -> dict[str, float]:
    """All p-values for one block, keyed by row name in ``TEST_NAMES`` order."""
    bits = np.asarray(bits, dtype=np.uint8)
    fwd, bwd = cumulative_sums(bits)
    s1, s2 = serial(bits, params.serial_m)
    return {
        "frequency": frequency(bits),
        "block_frequency": block_frequency(bits, params.block_frequency_m),
        "runs": runs(bits),
        "longest_run": longest_run(bits),
        "cumulative_sums_forward": fwd,
        "cumulative_sums_backward": bwd,
        "serial_1": s1,
        "serial_2": s2,
        "approximate_entropy": approximate_entropy(bits, params.apen_m),
        "dft": dft(bits),
    }


def proportion_interval(alpha: float, n_blocks: int) -> tuple[float, float]:
    """Acceptable range for the fraction of blocks with p >= alpha."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if n_blocks < 1:
        raise ValueError("n_blocks must be at least 1")
    p = 1 - alpha
    half = 3 * math.sqrt(p * alpha / n_blocks)
    return p - half, p + half


@dataclass
class TestResult:
    name: str
    p_values: list[float]
    pass_count: int
    proportion: float
    passed: bool


@dataclass
class TestReport:
    alpha: float
    n_blocks: int
    block_len: int
    interval: tuple[float, float]
    results: list[TestResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, name: str) -> TestResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interval"] = list(self.interval)
        d["all_passed"] = self.all_passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lo, hi = self.interval
        lines = [
            f"{self.n_blocks} blocks x {self.block_len} bits, alpha={self.alpha}, "
            f"proportion interval [{lo:.5f}, {hi:.5f}]",
            f"{'test':<26}{'min p':>10}{'pass':>8}{'prop':>9}  verdict",
        ]
        for r in self.results:
            lines.append(
                f"{r.name:<26}{min(r.p_values):>10.4f}{r.pass_count:>8d}{r.proportion:>9.4f}  "
                f"{'PASS' if r.passed else 'FAIL'}"
            )
        return "\n".join(lines)


def nist_subset(
    bits,
    block_len: int,
    n_blocks: int,
    alpha: float = 0.01,
    params: STSParams = STSParams(),
) -> TestReport:
    """Run the eight tests on ``n_blocks`` consecutive blocks of ``block_len`` bits."""
    from ..bitstream import BitStream

    if block_len < 100:
        raise ValueError(f"block_len must be at least 100, got {block_len}")
    need = block_len * n_blocks
    if isinstance(bits, BitStream):
        if bits.n_bits < need:
            raise ValueError(f"need {need} bits ({n_blocks} x {block_len}), got {bits.n_bits}")
        arr = bits.slice(0, need).to_bits()
    else:
        arr = np.asarray(bits, dtype=np.uint8).ravel()
        if arr.size < need:
            raise ValueError(f"need {need} bits ({n_blocks} x {block_len}), got {arr.size}")
    lo, hi = proportion_interval(alpha, n_blocks)
    per_block = [run_block(arr[i * block_len : (i + 1) * block_len], params) for i in range(n_blocks)]
    report = TestReport(alpha=alpha, n_blocks=n_blocks, block_len=block_len, interval=(lo, hi))
    for name in TEST_NAMES:
        ps = [blk[name] for blk in per_block]
        passes = sum(p >= alpha for p in ps)
        prop = passes / n_blocks
        report.results.append(TestResult(name, ps, passes, prop, lo <= prop <= hi))
    return report
