"""Throughput measurements for the extraction kernel and the end-to-end channel path."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import prng
from .extractor import ToeplitzKernel, ToeplitzSpec, _naive_blocks
from .config import RunConfig

__all__ = ["Timing", "BenchReport", "bench_kernel", "bench_naive", "scaling", "run_bench"]


@dataclass
class Timing:
    label: str
    input_bits: int
    seconds: list[float]  # one entry per run

    @property
    def best(self) -> float:
        return min(self.seconds)

    @property
    def bits_per_s(self) -> float:
        return self.input_bits / self.best

    @property
    def spread(self) -> float:
        """Relative spread of per-run rates, ``max/min - 1``."""
        return max(self.seconds) / min(self.seconds) - 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(best_seconds=self.best, bits_per_s=self.bits_per_s, spread=self.spread)
        return d


def _random_spec(m: int, n: int, seed: int) -> ToeplitzSpec:
    gen = prng.stream(seed, 0, prng.TEST)
    return ToeplitzSpec(m, n, gen.integers(0, 2, m + n - 1, dtype=np.uint8))


def _random_bytes(n_bytes: int, seed: int) -> np.ndarray:
    return prng.stream(seed, 1, prng.TEST).integers(0, 256, n_bytes, dtype=np.uint8)


def _time_runs(fn, runs: int, best_of: int = 1) -> list[float]:
    """Per-run wall times; each run is the fastest of ``best_of`` calls.

    Repetitions are interleaved across runs so slow drifts in host speed
    land on every run alike instead of on whichever run was in progress.
    """
    reps = [[] for _ in range(runs)]
    for _ in range(best_of):
        for r in range(runs):
            t0 = time.perf_counter()
            fn()
            reps[r].append(time.perf_counter() - t0)
    return [min(x) for x in reps]


def bench_kernel(
    m: int = 581,
    n: int = 768,
    input_bits: int = 10**8,
    runs: int = 3,
    chunk_bits: int = 8,
    seed: int = 1,
    best_of: int = 10,
) -> Timing:
    """Time the table-lookup kernel alone on packed input (tables built beforehand)."""
    kernel = ToeplitzKernel(_random_spec(m, n, seed), chunk_bits)
    n_blocks = input_bits // n
    data = _random_bytes(-(-n_blocks * n // 8), seed)
    kernel.multiply_packed(data, n_blocks)  # compile, fault in pages, warm caches
    secs = _time_runs(lambda: kernel.multiply_packed(data, n_blocks), runs, best_of)
    return Timing(f"chunked k={chunk_bits} {m}x{n}", n_blocks * n, secs)


def bench_naive(m: int = 581, n: int = 768, input_bits: int = 2 * 10**6, runs: int = 3, seed: int = 1) -> Timing:
    """Time the bit-by-bit reference kernel, compiled, on a smaller input."""
    spec = _random_spec(m, n, seed)
    n_blocks = max(1, input_bits // n)
    x = np.unpackbits(_random_bytes(n_blocks * n // 8 + 1, seed))[: n_blocks * n].reshape(n_blocks, n)
    out = np.empty((n_blocks, m), dtype=np.uint8)
    _naive_blocks(spec.seed, m, n, x[:1], out[:1])
    secs = _time_runs(lambda: _naive_blocks(spec.seed, m, n, x, out), runs)
    return Timing(f"naive {m}x{n}", n_blocks * n, secs)


def scaling(m: int = 581, n: int = 768, input_bits: int = 5 * 10**7, best_of: int = 10, seed: int = 1) -> dict:
    """Kernel time at twice ``input_bits`` relative to the time at ``input_bits``.

    The doubled call is paired with two back-to-back single-size calls, so
    both measurements span windows of similar length. Comparing a short call
    with a long one directly lets bursts of host speed favour the short one.
    """
    kernel = ToeplitzKernel(_random_spec(m, n, seed))
    small = input_bits // n
    data = _random_bytes(-(-2 * small * n // 8), seed)
    kernel.multiply_packed(data, 2 * small)

    def twice_small():
        kernel.multiply_packed(data, small)
        kernel.multiply_packed(data, small)

    pair, large = _time_pairs(twice_small, lambda: kernel.multiply_packed(data, 2 * small), best_of)
    return {
        "small_bits": small * n,
        "large_bits": 2 * small * n,
        "small_seconds": pair / 2,
        "large_seconds": large,
        "time_ratio": large / (pair / 2),
    }


def _time_pairs(fa, fb, best_of: int) -> tuple[float, float]:
    ta, tb = [], []
    for _ in range(best_of):
        for fn, acc in ((fa, ta), (fb, tb)):
            t0 = time.perf_counter()
            fn()
            acc.append(time.perf_counter() - t0)
    return min(ta), min(tb)


@dataclass
class BenchReport:
    kernel: dict[int, Timing]
    naive: dict[int, Timing]
    end_to_end: dict[int, Timing] = field(default_factory=dict)
    scaling: dict | None = None

    def speedup(self, channel: int) -> float:
        return self.kernel[channel].bits_per_s / self.naive[channel].bits_per_s

    def to_dict(self) -> dict:
        return {
            "kernel": {str(k): t.to_dict() for k, t in self.kernel.items()},
            "naive": {str(k): t.to_dict() for k, t in self.naive.items()},
            "speedup": {str(k): self.speedup(k) for k in self.kernel},
            "end_to_end": {str(k): t.to_dict() for k, t in self.end_to_end.items()},
            "scaling": self.scaling,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lines = [f"{'channel':>7}  {'m x n':>9}  {'kernel Mbit/s':>13}  {'spread':>6}  {'naive Mbit/s':>12}  {'speedup':>7}"]
        for k, t in self.kernel.items():
            nv = self.naive[k]
            shape = t.label.split()[-1]
            lines.append(
                f"{k:>7}  {shape:>9}  {t.bits_per_s / 1e6:13.1f}  {t.spread:6.1%}  "
                f"{nv.bits_per_s / 1e6:12.2f}  {self.speedup(k):6.0f}x"
            )
        for k, t in self.end_to_end.items():
            lines.append(f"end-to-end channel {k}: {t.bits_per_s / 1e6:.1f} Mbit/s of ADC bits (simulation included)")
        if self.scaling:
            lines.append(f"kernel time ratio for doubled input: {self.scaling['time_ratio']:.3f}")
        return "\n".join(lines)


def run_bench(
    cfg: RunConfig,
    input_bits: int = 10**8,
    naive_bits: int = 2 * 10**6,
    runs: int = 3,
    end_to_end_samples: int = 10**6,
    with_scaling: bool = True,
) -> BenchReport:
    from .pipeline import plan_run, run_channel

    plans = plan_run(cfg)
    kernel, naive, e2e = {}, {}, {}
    for cp in plans:
        cid, m, n = cp.channel.channel_id, cp.plan.n_out, cp.plan.n_in
        kernel[cid] = bench_kernel(m, n, input_bits, runs, cfg.chunk_bits)
        naive[cid] = bench_naive(m, n, naive_bits, runs)
        if end_to_end_samples:
            small = replace(cfg, n_samples=end_to_end_samples)
            secs = [run_channel(cp, small, keep_raw=False).seconds for _ in range(runs)]
            e2e[cid] = Timing(f"end-to-end {m}x{n}", end_to_end_samples * cp.plan.n_bits, secs)
    sc = None
    if with_scaling and plans:
        first = plans[0].plan
        sc = scaling(first.n_out, first.n_in, input_bits // 2)
    return BenchReport(kernel, naive, e2e, sc)
