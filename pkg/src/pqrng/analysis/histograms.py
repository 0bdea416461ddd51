"""Code histograms, empirical min-entropy and byte uniformity."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as chi2_dist

from ..bitstream import BitStream
from ..source_sim import RawSampleBlock

__all__ = ["Histogram", "code_histogram", "byte_histogram", "empirical_min_entropy"]

MIN_ENTROPY_SAMPLES = 100_000


@dataclass
class Histogram:
    counts: np.ndarray
    chi2: float
    p_value: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def passes(self, alpha: float = 0.01) -> bool:
        return self.p_value >= alpha

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            fh.write("value,count\n")
            for v in np.flatnonzero(self.counts):
                fh.write(f"{v},{self.counts[v]}\n")


def code_histogram(codes, n_codes: int | None = None) -> Histogram:
    """Counts per code value and a chi-square test against a flat distribution."""
    if isinstance(codes, RawSampleBlock):
        n_codes = n_codes or 1 << codes.n_bits
        codes = codes.codes
    codes = np.asarray(codes).ravel()
    if codes.size == 0:
        raise ValueError("empty input")
    n_codes = n_codes or int(codes.max()) + 1
    counts = np.bincount(codes.astype(np.int64), minlength=n_codes)
    expected = codes.size / n_codes
    stat = float(np.sum((counts - expected) ** 2) / expected)
    p = float(chi2_dist.sf(stat, n_codes - 1))
    return Histogram(counts=counts, chi2=stat, p_value=p)


def byte_histogram(stream: BitStream) -> Histogram:
    """Histogram of the complete bytes of an extracted stream over 256 values."""
    whole = stream.n_bits // 8
    return code_histogram(stream.data[:whole], 256)


def empirical_min_entropy(codes, min_samples: int = MIN_ENTROPY_SAMPLES) -> float:
    """``-log2`` of the most frequent code's relative frequency, in bits per sample."""
    if isinstance(codes, RawSampleBlock):
        codes = codes.codes
    codes = np.asarray(codes).ravel()
    if codes.size == 0:
        raise ValueError("empty input")
    if codes.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {codes.size}")
    counts = np.bincount(codes.astype(np.int64))
    return -math.log2(counts.max() / codes.size)
