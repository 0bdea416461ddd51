"""Statistical validation of raw samples and extracted bit streams."""

from .bitmaps import BitmapImage, bitmap, read_pbm, xor_bitmap
from .histograms import Histogram, byte_histogram, code_histogram, empirical_min_entropy
from .independence import (
    CorrelationReport,
    correlation_report,
    cross_correlation,
    mi_bias,
    mi_threshold,
    mutual_information,
    rho_threshold,
)
from .sts import STSParams, TestReport, TestResult, nist_subset, proportion_interval

__all__ = [
    "BitmapImage",
    "bitmap",
    "read_pbm",
    "xor_bitmap",
    "Histogram",
    "byte_histogram",
    "code_histogram",
    "empirical_min_entropy",
    "CorrelationReport",
    "correlation_report",
    "cross_correlation",
    "mi_bias",
    "mi_threshold",
    "mutual_information",
    "rho_threshold",
    "STSParams",
    "TestReport",
    "TestResult",
    "nist_subset",
    "proportion_interval",
]
