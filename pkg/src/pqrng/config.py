"""Run configuration: TOML loading, defaults and invariant checks."""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from typing import Any

import numpy as np

from . import prng
from .entropy_model import (
    DEFAULT_K_SIGMA,
    NoiseModel,
    QuantizerSpec,
    estimate_min_entropy,
    optimize_range,
)
from .source_sim import ChannelSpec, FilterSpec, adc_referred_model, unit_noise_gain

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "ChannelConfig", "RunConfig", "load_config", "sample_config_text"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class ChannelConfig:
    spec: ChannelSpec
    noise: NoiseModel
    quant: QuantizerSpec
    filt: FilterSpec
    h_min: float | None = None  # planning override; None means use the model estimate
    seed_file: str | None = None

    @property
    def channel_id(self) -> int:
        return self.spec.channel_id

    @property
    def adc_noise(self) -> NoiseModel:
        return adc_referred_model(self.noise, self.spec, self.filt)

    def model_estimate(self, k_sigma: float):
        return estimate_min_entropy(self.adc_noise, self.quant, k_sigma)

    def planning_h_min(self, k_sigma: float) -> float:
        return self.h_min if self.h_min is not None else self.model_estimate(k_sigma).h_min


@dataclass(frozen=True)
class RunConfig:
    channels: tuple[ChannelConfig, ...]
    seed: int
    epsilon: float = 2.0**-50
    k_sigma: float = DEFAULT_K_SIGMA
    block_bits: int = 768
    n_samples: int = 10_000_000
    chunk_samples: int = 1 << 18
    chunk_bits: int = 8
    reproducible: bool = True
    max_lag: int = 100
    corr_bits: int = 10_000_000
    sts_block_len: int = 100_000
    sts_n_blocks: int = 100
    alpha: float = 0.01
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        validate(self)

    def select(self, ids) -> RunConfig:
        ids = list(ids)
        chosen = tuple(c for c in self.channels if c.channel_id in ids)
        missing = set(ids) - {c.channel_id for c in chosen}
        if missing:
            raise ConfigError(f"--channels: no channel with id {sorted(missing)}")
        return replace(self, channels=chosen)

    def resolved(self) -> dict[str, Any]:
        """Plain-data view of every effective setting, for manifests."""
        chans = []
        for c in self.channels:
            d = {
                "id": c.channel_id,
                "spec": asdict(c.spec),
                "noise": asdict(c.noise),
                "quantizer": asdict(c.quant),
                "filter": asdict(c.filt),
                "h_min": c.h_min,
                "seed_file": c.seed_file,
            }
            chans.append(d)
        out = {k: v for k, v in asdict(self).items() if k not in ("channels", "source")}
        out["epsilon_log2"] = math.log2(self.epsilon)
        out["channels"] = chans
        out["prng"] = prng.GENERATOR_NAME
        return out


def validate(cfg: RunConfig) -> None:
    if not cfg.channels:
        raise ConfigError("channel: at least one channel is required")
    ids = [c.channel_id for c in cfg.channels]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"channel.id: duplicate channel ids {ids}")
    bands = sorted(
        (c.spec.center_freq - c.spec.lpf_cutoff, c.spec.center_freq + c.spec.lpf_cutoff, c.channel_id)
        for c in cfg.channels
    )
    for (lo1, hi1, a), (lo2, hi2, b) in zip(bands, bands[1:]):
        if lo2 < hi1:
            raise ConfigError(
                f"channel.center_freq: bands of channels {a} [{lo1 / 1e6:g}, {hi1 / 1e6:g}] MHz and "
                f"{b} [{lo2 / 1e6:g}, {hi2 / 1e6:g}] MHz overlap"
            )
    if not 0 < cfg.epsilon < 1:
        raise ConfigError(f"run.epsilon: must lie in (0, 1), got {cfg.epsilon}")
    if cfg.k_sigma < 0:
        raise ConfigError("run.k_sigma: must be non-negative")
    for c in cfg.channels:
        if cfg.block_bits % c.quant.n_bits:
            raise ConfigError(
                f"run.block_bits: {cfg.block_bits} is not a multiple of channel {c.channel_id} "
                f"n_bits={c.quant.n_bits}"
            )
        if c.h_min is not None and not 0 < c.h_min <= c.quant.n_bits:
            raise ConfigError(f"channel {c.channel_id} h_min: must lie in (0, {c.quant.n_bits}]")
    if cfg.n_samples <= 0:
        raise ConfigError("run.n_samples: must be positive")
    if cfg.sts_block_len < 100:
        raise ConfigError("analysis.sts_block_len: must be at least 100")


# loading

_RUN_KEYS = {
    "seed",
    "epsilon",
    "epsilon_log2",
    "k_sigma",
    "block_bits",
    "n_samples",
    "chunk_samples",
    "chunk_bits",
    "reproducible",
}
_ANALYSIS_KEYS = {"max_lag", "corr_bits", "sts_block_len", "sts_n_blocks", "alpha"}
_CHANNEL_KEYS = {
    "id",
    "center_freq",
    "rf_freq",
    "lpf_cutoff",
    "f_s_out",
    "internal_rate",
    "gain",
    "sigma_q",
    "sigma_e",
    "n_bits",
    "range_r",
    "range_grid",
    "h_min",
    "filter_taps",
    "stopband_atten",
    "seed_file",
}


def _unknown(section: str, got: dict, allowed: set) -> None:
    extra = set(got) - allowed
    if extra:
        raise ConfigError(f"{section}: unknown key(s) {sorted(extra)}")


def _channel(raw: dict, k_sigma: float) -> ChannelConfig:
    _unknown(f"channel {raw.get('id', '?')}", raw, _CHANNEL_KEYS)
    cid = raw.get("id")
    where = f"channel {cid}"
    try:
        cutoff = float(raw.get("lpf_cutoff", 120e6))
        base = ChannelSpec(
            channel_id=int(cid),
            center_freq=float(raw["center_freq"]),
            lpf_cutoff=cutoff,
            f_s_out=float(raw.get("f_s_out", 2 * cutoff)),
            internal_rate=raw.get("internal_rate"),
            rf_freq=raw.get("rf_freq"),
        )
        filt = FilterSpec(
            tap_count=int(raw.get("filter_taps", 127)),
            cutoff=cutoff,
            stopband_atten=float(raw.get("stopband_atten", 60.0)),
        )
        gain = raw.get("gain", "auto")
        gain = unit_noise_gain(base, filt) if gain == "auto" else float(gain)
        spec = replace(base, gain=gain)
        noise = NoiseModel(float(raw["sigma_q"]), float(raw.get("sigma_e", 0.0)))
        n_bits = int(raw.get("n_bits", 16))
        range_r = raw.get("range_r", "auto")
        if range_r == "auto":
            adc = adc_referred_model(noise, spec, filt)
            lo, hi, step = raw.get("range_grid", [3.0, 12.0, 0.01])
            grid = adc.sigma_total * np.round(np.arange(lo, hi + step / 2, step), 6)
            range_r, _ = optimize_range(adc, QuantizerSpec(n_bits, 1.0), grid, k_sigma)
        quant = QuantizerSpec(n_bits, float(range_r))
    except KeyError as exc:
        raise ConfigError(f"{where}: missing required key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    h_min = raw.get("h_min")
    return ChannelConfig(
        spec=spec,
        noise=noise,
        quant=quant,
        filt=filt,
        h_min=None if h_min is None else float(h_min),
        seed_file=raw.get("seed_file"),
    )


def config_from_dict(doc: dict, scale: str = "desk", seed_override: int | None = None) -> RunConfig:
    if scale not in ("desk", "paper"):
        raise ConfigError(f"scale must be 'desk' or 'paper', got {scale!r}")
    run = dict(doc.get("run", {}))
    analysis = dict(doc.get("analysis", {}))
    _unknown("run", run, _RUN_KEYS)
    _unknown("analysis", analysis, _ANALYSIS_KEYS)
    if scale == "paper":
        overrides = doc.get("paper_scale", {})
        _unknown("paper_scale", overrides, _RUN_KEYS | _ANALYSIS_KEYS)
        for key, value in overrides.items():
            (run if key in _RUN_KEYS else analysis)[key] = value

    reproducible = bool(run.get("reproducible", True))
    try:
        if seed_override is not None:
            seed = seed_override
        elif "seed" in run:
            seed = prng.parse_seed(run["seed"])
        elif not reproducible:
            seed = prng.fresh_seed()
        else:
            raise ConfigError("run.seed: required in reproducible mode")
    except ValueError as exc:
        raise ConfigError(f"run.seed: {exc}") from None

    if "epsilon_log2" in run and "epsilon" in run:
        raise ConfigError("run: give epsilon or epsilon_log2, not both")
    epsilon = 2.0 ** float(run["epsilon_log2"]) if "epsilon_log2" in run else float(run.get("epsilon", 2.0**-50))
    k_sigma = float(run.get("k_sigma", DEFAULT_K_SIGMA))

    raw_channels = doc.get("channel", [])
    if not isinstance(raw_channels, list):
        raise ConfigError("channel: expected an array of [[channel]] tables")
    channels = tuple(_channel(c, k_sigma) for c in raw_channels)

    kwargs = {
        "seed": seed,
        "epsilon": epsilon,
        "k_sigma": k_sigma,
        "reproducible": reproducible,
        "source": doc,
    }
    for key in ("block_bits", "n_samples", "chunk_samples", "chunk_bits"):
        if key in run:
            kwargs[key] = int(run[key])
    for key in ("max_lag", "corr_bits", "sts_block_len", "sts_n_blocks"):
        if key in analysis:
            kwargs[key] = int(analysis[key])
    if "alpha" in analysis:
        kwargs["alpha"] = float(analysis["alpha"])
    return RunConfig(channels=channels, **kwargs)


def load_config(path: str | None = None, scale: str = "desk", seed_override: int | None = None) -> RunConfig:
    """Read a TOML config; ``None`` loads the bundled sample with the reference settings."""
    text = sample_config_text() if path is None else open(path, encoding="utf-8").read()
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path or 'sample config'}: {exc}") from None
    return config_from_dict(doc, scale, seed_override)


def sample_config_text() -> str:
    return resources.files("pqrng").joinpath("data/sample_config.toml").read_text(encoding="utf-8")
