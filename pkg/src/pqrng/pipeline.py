"""Per-channel simulate-and-extract jobs, the cumulative interleave, and run manifests."""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bitstream import BitStream
from .config import ChannelConfig, RunConfig
from .entropy_model import (
    EntropyBudgetError,
    ExtractionPlan,
    format_gbps,
    plan_extraction,
    real_time_rate,
)
from .extractor import ToeplitzExtractor, ToeplitzSpec, seeded_spec_from_config
from .source_sim import (
    RawSampleBlock,
    _code_dtype,
    baseband_chunks,
    expected_off_scale_fraction,
    quantize_codes,
    write_raw,
)

__all__ = [
    "ChannelPlan",
    "ChannelResult",
    "RunResult",
    "plan_channel",
    "plan_run",
    "run_channel",
    "run_pipeline",
    "interleave",
    "deinterleave",
    "output_name",
]

MANIFEST_NAME = "manifest.json"
TIMING_NAME = "timing.json"


@dataclass(frozen=True)
class ChannelPlan:
    channel: ChannelConfig
    plan: ExtractionPlan
    model_h_min: float

    @property
    def rate(self):
        return real_time_rate(self.channel.spec.f_s_out, self.channel.quant.n_bits, self.plan)

    def row(self) -> dict:
        c = self.channel
        return {
            "channel": c.channel_id,
            "center_freq_mhz": c.spec.center_freq / 1e6,
            "range_r": c.quant.range_r,
            "h_min": self.plan.h_min,
            "model_h_min": self.model_h_min,
            "n_in": self.plan.n_in,
            "n_out": self.plan.n_out,
            "ratio": float(self.plan.ratio),
            "rate_gbps": float(self.rate) / 1e9,
            "rate_gbps_rounded": format_gbps(self.rate),
        }


def plan_channel(ch: ChannelConfig, cfg: RunConfig) -> ChannelPlan:
    """Size the extractor for one channel.

    A configured ``h_min`` above the model's worst-case estimate would
    overdraw the entropy budget and is refused.
    """
    est = ch.model_estimate(cfg.k_sigma).h_min
    h = ch.planning_h_min(cfg.k_sigma)
    if h > est + 1e-12:
        raise EntropyBudgetError(
            f"channel {ch.channel_id} h_min: configured {h} exceeds the model estimate {est:.6f} bits",
            deficit=h - est,
        )
    plan = plan_extraction(h, cfg.block_bits, ch.quant.n_bits, cfg.epsilon)
    return ChannelPlan(ch, plan, est)


def plan_run(cfg: RunConfig) -> list[ChannelPlan]:
    return [plan_channel(ch, cfg) for ch in cfg.channels]


def toeplitz_spec(cp: ChannelPlan, cfg: RunConfig) -> ToeplitzSpec:
    ch = cp.channel
    source = {"file": ch.seed_file} if ch.seed_file else {"prng_seed": cfg.seed, "channel": ch.channel_id}
    return seeded_spec_from_config(source, cp.plan.n_out, cp.plan.n_in)


@dataclass
class ChannelResult:
    channel_id: int
    plan: ExtractionPlan
    output: BitStream
    raw: RawSampleBlock | None
    samples: int
    off_scale: int
    blocks: int
    dropped_bits: int
    seconds: float
    seed_source: str

    def counters(self, cfg: RunConfig, ch: ChannelConfig) -> dict:
        return {
            "samples": self.samples,
            "off_scale": self.off_scale,
            "off_scale_fraction": self.off_scale / self.samples,
            "off_scale_expected": expected_off_scale_fraction(ch.adc_noise.sigma_total, ch.quant.range_r),
            "blocks": self.blocks,
            "n_in": self.plan.n_in,
            "n_out": self.plan.n_out,
            "bits_out": self.output.n_bits,
            "dropped_input_bits": self.dropped_bits,
            "toeplitz_seed": self.seed_source,
        }


def run_channel(cp: ChannelPlan, cfg: RunConfig, keep_raw: bool = True) -> ChannelResult:
    """Simulate one channel and extract it in streaming chunks."""
    t0 = time.perf_counter()
    ch = cp.channel
    spec = toeplitz_spec(cp, cfg)
    ex = ToeplitzExtractor(spec, cfg.chunk_bits)
    codes = np.empty(cfg.n_samples, dtype=_code_dtype(ch.quant.n_bits)) if keep_raw else None
    outputs = []
    pos = off = 0
    for y in baseband_chunks(ch.spec, ch.noise, cfg.n_samples, cfg.seed, ch.filt, cfg.chunk_samples):
        c, o = quantize_codes(y, ch.quant)
        if codes is not None:
            codes[pos : pos + c.size] = c
        pos += c.size
        off += o
        outputs.append(ex.feed(BitStream.from_codes(c, ch.quant.n_bits)))
    dropped = ex.finish()
    raw = None
    if codes is not None:
        raw = RawSampleBlock(
            codes=codes,
            off_scale_count=off,
            channel_id=ch.channel_id,
            seed=cfg.seed,
            n_bits=ch.quant.n_bits,
            f_s_out=ch.spec.f_s_out,
        )
    return ChannelResult(
        channel_id=ch.channel_id,
        plan=cp.plan,
        output=BitStream.concat(outputs),
        raw=raw,
        samples=pos,
        off_scale=off,
        blocks=ex.blocks,
        dropped_bits=dropped,
        seconds=time.perf_counter() - t0,
        seed_source=f"file:{ch.seed_file}" if ch.seed_file else f"prng:{cfg.seed:016x}/channel {ch.channel_id}",
    )


# cumulative stream


def interleave(streams: list[BitStream], block_sizes: list[int]) -> BitStream:
    """Round-robin merge, one output block per channel per round, in list order.

    Channels that run out of blocks are skipped in later rounds.
    """
    if len(streams) != len(block_sizes):
        raise ValueError("one block size per stream required")
    mats = []
    for s, m in zip(streams, block_sizes):
        if s.n_bits % m:
            raise ValueError(f"stream of {s.n_bits} bits is not a whole number of {m}-bit blocks")
        mats.append(s.to_bits().reshape(-1, m))
    if not mats:
        return BitStream.empty()
    common = min(a.shape[0] for a in mats)
    parts = [np.hstack([a[:common] for a in mats]).ravel()]
    for r in range(common, max(a.shape[0] for a in mats)):
        parts.extend(a[r] for a in mats if r < a.shape[0])
    return BitStream.from_bits(np.concatenate(parts))


def deinterleave(stream: BitStream, block_sizes: list[int], block_counts: list[int]) -> list[BitStream]:
    """Inverse of :func:`interleave` given each channel's block size and count."""
    bits = stream.to_bits()
    if bits.size != sum(m * b for m, b in zip(block_sizes, block_counts)):
        raise ValueError("stream length does not match block sizes and counts")
    common = min(block_counts) if block_counts else 0
    width = sum(block_sizes)
    head = bits[: common * width].reshape(common, width)
    out, col = [], 0
    for m in block_sizes:
        out.append([head[:, col : col + m].ravel()])
        col += m
    pos = common * width
    for r in range(common, max(block_counts, default=0)):
        for i, (m, b) in enumerate(zip(block_sizes, block_counts)):
            if r < b:
                out[i].append(bits[pos : pos + m])
                pos += m
    return [BitStream.from_bits(np.concatenate(p)) for p in out]


# runs


def output_name(channel_id: int | str, fmt: str = "bin") -> str:
    ext = "bin" if fmt == "bin" else "txt"
    return f"ch{channel_id}.{ext}" if isinstance(channel_id, int) else f"{channel_id}.{ext}"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    import numba
    import scipy

    return {"pqrng": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


@dataclass
class RunResult:
    out_dir: Path
    channels: list[ChannelResult]
    cumulative: BitStream
    manifest: dict
    timing: dict = field(default_factory=dict)


def run_pipeline(
    cfg: RunConfig,
    out_dir: str | os.PathLike,
    fmt: str = "bin",
    concurrent: bool = True,
    keep_raw: bool = True,
) -> RunResult:
    """Simulate and extract every channel, then write outputs and the manifest.

    Channels run one per worker thread. Results are gathered in channel order,
    so output bytes do not depend on scheduling.
    """
    if fmt not in ("bin", "ascii"):
        raise ValueError(f"unknown format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plans = plan_run(cfg)
    t0 = time.perf_counter()
    if concurrent and len(plans) > 1:
        with ThreadPoolExecutor(max_workers=len(plans)) as pool:
            futures = [pool.submit(run_channel, cp, cfg, keep_raw) for cp in plans]
            results = [f.result() for f in futures]
    else:
        results = [run_channel(cp, cfg, keep_raw) for cp in plans]
    elapsed = time.perf_counter() - t0

    sizes = [r.plan.n_out for r in results]
    cumulative = interleave([r.output for r in results], sizes)

    files = {}
    for cp, r in zip(plans, results):
        name = output_name(r.channel_id, fmt)
        r.output.write(out / name, fmt)
        files[name] = _sha256(out / name)
        if r.raw is not None:
            raw_name = f"ch{r.channel_id}.qraw"
            write_raw(out / raw_name, r.raw)
            files[raw_name] = _sha256(out / raw_name)
    cum_name = output_name("cumulative", fmt)
    cumulative.write(out / cum_name, fmt)
    files[cum_name] = _sha256(out / cum_name)

    manifest = {
        "format_version": 1,
        "versions": _versions(),
        "seed": f"{cfg.seed:016x}",
        "reproducible": cfg.reproducible,
        "output_format": fmt,
        "config": cfg.resolved(),
        "plans": [cp.row() for cp in plans],
        "channels": {str(r.channel_id): r.counters(cfg, cp.channel) for cp, r in zip(plans, results)},
        "cumulative": {
            "order": [r.channel_id for r in results],
            "block_sizes": sizes,
            "block_counts": [r.blocks for r in results],
            "bits": cumulative.n_bits,
        },
        "files": files,
    }
    with open(out / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    timing = {
        "started_unix": time.time() - elapsed,
        "wall_seconds": elapsed,
        "concurrent": concurrent,
        "channels": {
            str(r.channel_id): {
                "seconds": r.seconds,
                "input_bits_per_s": r.samples * r.plan.n_bits / r.seconds,
                "output_bits_per_s": r.output.n_bits / r.seconds,
            }
            for r in results
        },
    }
    with open(out / TIMING_NAME, "w") as fh:
        json.dump(timing, fh, indent=2)
        fh.write("\n")
    return RunResult(out, results, cumulative, manifest, timing)
