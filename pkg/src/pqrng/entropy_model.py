"""Noise statistics, conditional min-entropy, extractor sizing and rate arithmetic.

Everything here is a pure function over frozen value types. Units are SI
throughout: volts for noise and ADC range, Hz for bandwidths and sample
rates, bits for entropy and block lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from scipy.special import ndtr

__all__ = [
    "NoiseModel",
    "QuantizerSpec",
    "EntropyEstimate",
    "ExtractionPlan",
    "RateModel",
    "InfiniteQCNR",
    "EntropyBudgetError",
    "qcnr_db",
    "estimate_min_entropy",
    "optimize_range",
    "plan_extraction",
    "max_rate",
    "real_time_rate",
    "rate_model",
    "format_gbps",
    "cumulative_reported_gbps",
]

DEFAULT_K_SIGMA = 5.0


class InfiniteQCNR(ArithmeticError):
    """Raised when the classical noise floor is exactly zero."""


class EntropyBudgetError(ValueError):
    """The leftover-hash budget for a block is not positive.

    ``deficit`` is how many bits short the block is of yielding one output bit.
    """

    def __init__(self, message: str, deficit: float):
        super().__init__(message)
        self.deficit = deficit


@dataclass(frozen=True)
class NoiseModel:
    """Quantum (vacuum) and classical (electronic) noise amplitudes, in volts."""

    sigma_q: float
    sigma_e: float = 0.0

    def __post_init__(self):
        if not (self.sigma_q > 0 and math.isfinite(self.sigma_q)):
            raise ValueError(f"sigma_q must be positive and finite, got {self.sigma_q!r}")
        if not (self.sigma_e >= 0 and math.isfinite(self.sigma_e)):
            raise ValueError(f"sigma_e must be non-negative and finite, got {self.sigma_e!r}")

    @property
    def sigma_total(self) -> float:
        return math.hypot(self.sigma_q, self.sigma_e)

    def scaled(self, factor: float) -> NoiseModel:
        """Both components multiplied by a linear amplitude ``factor``."""
        return NoiseModel(self.sigma_q * factor, self.sigma_e * factor)


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform ADC over the symmetric range [-R, +R] with offset-binary codes.

    Code ``i`` covers ``[-R + i*delta, -R + (i+1)*delta)``; code 0 and the top
    code also absorb everything below and above the range respectively.
    """

    n_bits: int = 16
    range_r: float = 1.0
    convention: str = "offset_binary"

    def __post_init__(self):
        if not isinstance(self.n_bits, int) or not 2 <= self.n_bits <= 24:
            raise ValueError(f"n_bits must be an integer in [2, 24], got {self.n_bits!r}")
        if not (self.range_r > 0 and math.isfinite(self.range_r)):
            raise ValueError(f"range_r must be positive and finite, got {self.range_r!r}")
        if self.convention != "offset_binary":
            raise ValueError(f"unsupported code convention {self.convention!r}")
        if not self.bin_width > 0:
            raise ValueError("degenerate quantizer: bin width underflows to zero")

    @property
    def n_codes(self) -> int:
        return 1 << self.n_bits

    @property
    def bin_width(self) -> float:
        return 2.0 * self.range_r / self.n_codes

    @property
    def mid_code(self) -> int:
        return self.n_codes // 2

    def with_range(self, range_r: float) -> QuantizerSpec:
        return QuantizerSpec(self.n_bits, range_r, self.convention)


@dataclass(frozen=True)
class EntropyEstimate:
    h_min: float
    worst_case_shift: float
    p_max: float


@dataclass(frozen=True)
class ExtractionPlan:
    """Dimensions of one Toeplitz extractor sized by the leftover hash lemma."""

    n_in: int
    n_out: int
    n_bits: int
    epsilon: float
    h_min: float

    def __post_init__(self):
        if self.n_in % self.n_bits:
            raise ValueError(f"n_in={self.n_in} is not a multiple of n_bits={self.n_bits}")
        if self.n_out < 1:
            raise ValueError("n_out must be at least 1")

    @property
    def samples_per_block(self) -> int:
        return self.n_in // self.n_bits

    @property
    def seed_len(self) -> int:
        return self.n_in + self.n_out - 1

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.n_out, self.n_in)

    @property
    def budget(self) -> float:
        """Unfloored leftover-hash bound ``N*h_min - log2(1/eps^2)``."""
        return _lhl_budget(self.h_min, self.samples_per_block, self.epsilon)


@dataclass(frozen=True)
class RateModel:
    w_bw: float
    f_s: float
    c_max: float
    real_time_rate: Fraction
    n_bits: int

    def __post_init__(self):
        if self.real_time_rate > Fraction(self.f_s) * self.n_bits:
            raise ValueError("planned output rate exceeds the raw ADC bit rate")


def qcnr_db(model: NoiseModel) -> float:
    """Quantum-to-classical noise power ratio in dB."""
    if model.sigma_e == 0:
        raise InfiniteQCNR("sigma_e is zero: QCNR is infinite")
    return 10.0 * math.log10(model.sigma_q**2 / model.sigma_e**2)


def _gauss_mass(lo: float, hi: float, sigma: float) -> float:
    # Subtract in the tail nearer to the interval to avoid cancellation.
    a, b = lo / sigma, hi / sigma
    if a >= 0:
        return float(ndtr(-a) - ndtr(-b))
    return float(ndtr(b) - ndtr(a))


def estimate_min_entropy(
    model: NoiseModel, quant: QuantizerSpec, k_sigma: float = DEFAULT_K_SIGMA
) -> EntropyEstimate:
    """Worst-case min-entropy of one ADC sample given the classical noise.

    The sample is ``Q + E`` with ``Q ~ N(0, sigma_q^2)`` unknown to everyone and
    ``E`` known to the adversary and confined to ``|E| <= k_sigma*sigma_e``.
    The guessing probability is maximised over every code and every admissible
    shift; the two edge codes include the clipped tails.

    Each interior bin has the same width, and its mass is unimodal in the
    shift with the peak at the bin centre, so the best interior bin is the
    one whose centre lies closest to the admissible shift interval. Edge
    bins are maximised at the matching end of the interval.
    """
    if k_sigma < 0 or not math.isfinite(k_sigma):
        raise ValueError(f"k_sigma must be finite and >= 0, got {k_sigma!r}")
    delta = quant.bin_width
    if not delta > 0:
        raise ValueError("degenerate quantizer: bin width is not positive")
    sigma = model.sigma_q
    shift = k_sigma * model.sigma_e

    # Interior centres sit at odd multiples of delta/2, so +-delta/2 are always
    # interior once there are at least four codes.
    dist = max(0.0, delta / 2 - shift)
    p_interior = _gauss_mass(dist - delta / 2, dist + delta / 2, sigma)

    # Top code collects [R - delta, inf) with the mean pushed to +shift.
    edge_lo = quant.range_r - delta - shift
    p_edge = float(ndtr(-edge_lo / sigma))

    p_max = max(p_interior, p_edge)
    if not (math.isfinite(p_max) and p_max > 0):
        raise ValueError(f"non-finite guessing probability {p_max!r}")
    h_min = min(-math.log2(p_max), float(quant.n_bits))
    if h_min < 0:
        h_min = 0.0
    return EntropyEstimate(h_min=h_min, worst_case_shift=shift, p_max=p_max)


def optimize_range(
    model: NoiseModel,
    quant_template: QuantizerSpec,
    r_grid: Sequence[float],
    k_sigma: float = DEFAULT_K_SIGMA,
) -> tuple[float, EntropyEstimate]:
    """Pick the ADC half-range from ``r_grid`` that maximises min-entropy.

    Ties go to the smaller range.
    """
    grid = sorted(float(r) for r in r_grid)
    if not grid:
        raise ValueError("r_grid is empty")
    if grid[0] <= 0:
        raise ValueError(f"r_grid values must be positive, got {grid[0]!r}")
    best_r, best = None, None
    for r in grid:
        est = estimate_min_entropy(model, quant_template.with_range(r), k_sigma)
        if best is None or est.h_min > best.h_min:
            best_r, best = r, est
    return best_r, best


def _lhl_budget(h_min: float, n_samples: int, epsilon: float) -> float:
    return n_samples * h_min - 2.0 * math.log2(1.0 / epsilon)


def plan_extraction(h_min: float, n_in: int, n_bits: int, epsilon: float) -> ExtractionPlan:
    """Size a Toeplitz extractor: ``n_out = floor(N*h_min - log2(1/eps^2))``."""
    if not 0 < h_min <= n_bits:
        raise ValueError(f"h_min must lie in (0, {n_bits}], got {h_min!r}")
    if n_in <= 0 or n_in % n_bits:
        raise ValueError(f"n_in={n_in} must be a positive multiple of n_bits={n_bits}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    n_samples = n_in // n_bits
    budget = _lhl_budget(h_min, n_samples, epsilon)
    n_out = math.floor(budget)
    if n_out < 1:
        deficit = 1.0 - budget
        raise EntropyBudgetError(
            f"entropy budget {budget:.3f} bits for a {n_in}-bit block is below 1 bit "
            f"(deficit {deficit:.3f} bits): use longer blocks or a larger epsilon",
            deficit,
        )
    return ExtractionPlan(n_in=n_in, n_out=n_out, n_bits=n_bits, epsilon=epsilon, h_min=h_min)


def max_rate(h_min: float, quant: QuantizerSpec, w_bw: float) -> float:
    """Nyquist-limited extractable rate ``(h_min/n)*n*2*W`` in bits/s."""
    if not w_bw > 0:
        raise ValueError(f"w_bw must be positive, got {w_bw!r}")
    per_bit = h_min / quant.n_bits
    return per_bit * quant.n_bits * 2.0 * w_bw


def real_time_rate(f_s: float, n_bits: int, plan: ExtractionPlan) -> Fraction:
    """Output bit rate of one channel as an exact rational."""
    if not f_s > 0:
        raise ValueError(f"f_s must be positive, got {f_s!r}")
    return Fraction(f_s) * n_bits * plan.ratio


def rate_model(h_min: float, quant: QuantizerSpec, w_bw: float, plan: ExtractionPlan) -> RateModel:
    f_s = 2.0 * w_bw
    return RateModel(
        w_bw=w_bw,
        f_s=f_s,
        c_max=max_rate(h_min, quant, w_bw),
        real_time_rate=real_time_rate(f_s, quant.n_bits, plan),
        n_bits=quant.n_bits,
    )


def format_gbps(rate: Fraction | float, places: int = 2) -> str:
    """Rate in Gbit/s rounded half-up at ``places`` decimals."""
    scaled = Fraction(rate) / 10**9 * 10**places
    rounded = math.floor(scaled + Fraction(1, 2))
    return f"{rounded / 10**places:.{places}f}"


def cumulative_reported_gbps(rates: Sequence[Fraction | float], places: int = 2) -> str:
    """Sum of per-channel rates after each is rounded for presentation.

    This is how a table of rounded channel rates adds up, which can differ in
    the last place from ``format_gbps(sum(rates))``.
    """
    total = sum(Fraction(format_gbps(r, places)) for r in rates)
    return f"{float(total):.{places}f}"
