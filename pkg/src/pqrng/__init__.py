"""Parallel vacuum-noise random number generation: simulation, entropy budgeting,
Toeplitz extraction and statistical validation."""

__version__ = "0.1.0"

from .bitstream import BitStream
from .entropy_model import (
    EntropyBudgetError,
    EntropyEstimate,
    ExtractionPlan,
    InfiniteQCNR,
    NoiseModel,
    QuantizerSpec,
    RateModel,
    estimate_min_entropy,
    optimize_range,
    plan_extraction,
    rate_model,
    real_time_rate,
)
from .extractor import ToeplitzExtractor, ToeplitzSpec, build_toeplitz, multiply, multiply_naive
from .source_sim import ChannelSpec, FilterSpec, RawSampleBlock, downconvert, quantize, simulate_channel

__all__ = [
    "__version__",
    "BitStream",
    "ChannelSpec",
    "EntropyBudgetError",
    "EntropyEstimate",
    "ExtractionPlan",
    "FilterSpec",
    "InfiniteQCNR",
    "NoiseModel",
    "QuantizerSpec",
    "RateModel",
    "RawSampleBlock",
    "ToeplitzExtractor",
    "ToeplitzSpec",
    "build_toeplitz",
    "downconvert",
    "estimate_min_entropy",
    "multiply",
    "multiply_naive",
    "optimize_range",
    "plan_extraction",
    "quantize",
    "rate_model",
    "real_time_rate",
    "simulate_channel",
]
