"""Software front end for one sideband channel.

Wideband Gaussian noise is synthesised at ``internal_rate``, mixed down by
the channel's RF frequency, low-pass filtered, decimated to ``f_s_out``,
scaled by the path gain and digitised. Long runs are processed in fixed
chunks with a ``tap_count - 1`` sample overlap so memory stays bounded and
the output does not depend on the chunk size.
"""

from __future__ import annotations

import functools
import math
import os
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np
from scipy.signal import firwin, freqz, upfirdn

from . import prng
from .entropy_model import NoiseModel, QuantizerSpec

__all__ = [
    "ChannelSpec",
    "FilterSpec",
    "RawSampleBlock",
    "WidebandSamples",
    "WidebandSource",
    "RawFormatError",
    "synth_wideband",
    "downconvert",
    "quantize",
    "simulate_channel",
    "baseband_chunks",
    "adc_referred_model",
    "unit_noise_gain",
    "expected_off_scale_fraction",
    "write_raw",
    "read_raw",
]

INTERNAL_OVERSAMPLE = 10
DEFAULT_CHUNK = 1 << 18


@dataclass(frozen=True)
class ChannelSpec:
    channel_id: int
    center_freq: float
    lpf_cutoff: float = 120e6
    f_s_out: float = 240e6
    internal_rate: float | None = None
    rf_freq: float | None = None
    gain: float = 1.0

    def __post_init__(self):
        if self.internal_rate is None:
            object.__setattr__(self, "internal_rate", INTERNAL_OVERSAMPLE * self.f_s_out)
        if self.rf_freq is None:
            object.__setattr__(self, "rf_freq", self.center_freq)
        where = f"channel {self.channel_id}"
        if not self.center_freq > 0 or not self.lpf_cutoff > 0:
            raise ValueError(f"{where}: center_freq and lpf_cutoff must be positive")
        if not math.isclose(self.f_s_out, 2 * self.lpf_cutoff, rel_tol=1e-12):
            raise ValueError(
                f"{where}: f_s_out={self.f_s_out:g} must equal 2*lpf_cutoff={2 * self.lpf_cutoff:g}"
            )
        ratio = self.internal_rate / self.f_s_out
        if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                f"{where}: internal_rate={self.internal_rate:g} is not an integer multiple "
                f"of f_s_out={self.f_s_out:g}"
            )
        if not self.internal_rate > 2 * (self.center_freq + self.lpf_cutoff):
            raise ValueError(
                f"{where}: internal_rate={self.internal_rate:g} must exceed "
                f"2*(center_freq + lpf_cutoff)={2 * (self.center_freq + self.lpf_cutoff):g}"
            )
        if not self.gain > 0:
            raise ValueError(f"{where}: gain must be positive")

    @property
    def decimation(self) -> int:
        return int(round(self.internal_rate / self.f_s_out))


@dataclass(frozen=True)
class FilterSpec:
    """Windowed-sinc low-pass FIR."""

    tap_count: int = 127
    cutoff: float = 120e6
    stopband_atten: float = 60.0
    window: str = "blackman"

    def __post_init__(self):
        if self.tap_count < 31 or self.tap_count % 2 == 0:
            raise ValueError(f"tap_count must be odd and >= 31, got {self.tap_count}")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")

    def taps(self, fs: float) -> np.ndarray:
        return _design(self, float(fs)).copy()

    def response(self, freqs, fs: float) -> np.ndarray:
        """Complex frequency response at ``freqs`` (Hz)."""
        _, h = freqz(_design(self, float(fs)), 1, worN=np.atleast_1d(np.asarray(freqs, float)), fs=fs)
        return h

    def stopband_attenuation(self, fs: float, points: int = 8192) -> float:
        """Smallest attenuation in dB from 1.5x cutoff to Nyquist."""
        return _stopband_atten(_design(self, float(fs)), self.cutoff, float(fs), points)

    def noise_gain(self, fs: float) -> float:
        """Sum of squared taps: output/input variance ratio for white input."""
        h = _design(self, float(fs))
        return float(np.dot(h, h))


def _stopband_atten(h: np.ndarray, cutoff: float, fs: float, points: int = 8192) -> float:
    freqs = np.linspace(1.5 * cutoff, fs / 2, points)
    _, resp = freqz(h, 1, worN=freqs, fs=fs)
    return float(-20 * np.log10(np.max(np.abs(resp))))


@functools.lru_cache(maxsize=32)
def _design(spec: FilterSpec, fs: float) -> np.ndarray:
    if not 1.5 * spec.cutoff < fs / 2:
        raise ValueError(f"cutoff {spec.cutoff:g} Hz leaves no stopband below Nyquist at fs={fs:g}")
    h = firwin(spec.tap_count, spec.cutoff, window=spec.window, fs=fs)
    atten = _stopband_atten(h, spec.cutoff, fs)
    if atten < spec.stopband_atten:
        raise ValueError(
            f"{spec.tap_count}-tap {spec.window} design reaches {atten:.1f} dB, "
            f"below the {spec.stopband_atten:.1f} dB stopband target"
        )
    h.setflags(write=False)
    return h


def unit_noise_gain(spec: ChannelSpec, filt: FilterSpec) -> float:
    """Path gain that makes baseband variance equal wideband input variance.

    Mixing with a cosine halves white-noise power and the FIR scales it by
    the sum of squared taps.
    """
    return 1.0 / math.sqrt(0.5 * filt.noise_gain(spec.internal_rate))


def adc_referred_model(model: NoiseModel, spec: ChannelSpec, filt: FilterSpec) -> NoiseModel:
    """Noise amplitudes as seen at the ADC input for this channel."""
    return model.scaled(spec.gain * math.sqrt(0.5 * filt.noise_gain(spec.internal_rate)))


# wideband synthesis


@dataclass
class WidebandSamples:
    quantum: np.ndarray
    classical: np.ndarray
    internal_rate: float

    @property
    def total(self) -> np.ndarray:
        return self.quantum + self.classical


class WidebandSource:
    """Sequential draws from the per-channel quantum and classical streams."""

    def __init__(self, model: NoiseModel, prng_seed: int, channel: int = 0):
        self.model = model
        self._q = prng.stream(prng_seed, channel, prng.QUANTUM)
        self._e = prng.stream(prng_seed, channel, prng.CLASSICAL)

    def draw(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        q = self._q.standard_normal(n)
        q *= self.model.sigma_q
        e = self._e.standard_normal(n)
        e *= self.model.sigma_e
        return q, e


def synth_wideband(
    model: NoiseModel, duration_samples: int, internal_rate: float, prng_seed: int, channel: int = 0
) -> WidebandSamples:
    if duration_samples <= 0:
        raise ValueError("duration_samples must be positive")
    q, e = WidebandSource(model, prng_seed, channel).draw(duration_samples)
    return WidebandSamples(q, e, internal_rate)


# downconversion


class _Carrier:
    """cos(2*pi*f*i/fs) for absolute sample index i, exact when f/fs is rational."""

    def __init__(self, freq: float, fs: float):
        self._table = None
        if float(freq).is_integer() and float(fs).is_integer():
            ratio = Fraction(int(freq), int(fs))
            if ratio.denominator <= 1 << 20:
                self._p, self._q = ratio.numerator, ratio.denominator
                self._table = np.cos(2 * np.pi * np.arange(self._q) / self._q)
        self._ratio = freq / fs

    def __call__(self, start: int, n: int) -> np.ndarray:
        idx = np.arange(start, start + n, dtype=np.int64)
        if self._table is not None:
            return self._table[(idx * self._p) % self._q]
        return np.cos(2 * np.pi * np.mod(idx * self._ratio, 1.0))


def _filter_decimate(x: np.ndarray, h: np.ndarray, decim: int) -> np.ndarray:
    """Valid-mode FIR then keep every ``decim``-th output, first at full overlap."""
    taps = h.size
    n_out = (x.size - taps + 1) // decim if x.size >= taps else 0
    if n_out <= 0:
        return np.zeros(0)
    # Left-pad so upfirdn's decimation phase lands on index taps-1 of x.
    pad = (-(taps - 1)) % decim
    y = upfirdn(h, np.concatenate([np.zeros(pad), x]), up=1, down=decim)
    first = (taps - 1 + pad) // decim
    return y[first : first + n_out]


def downconvert(
    samples: np.ndarray, spec: ChannelSpec, filt: FilterSpec | None = None, start_index: int = 0
) -> np.ndarray:
    """Mix by cos(2*pi*rf*t), FIR low-pass, decimate, apply gain.

    ``start_index`` is the absolute sample index of ``samples[0]`` and sets
    the carrier phase. Output length is ``floor((len - taps + 1)/decim)``.
    """
    filt = filt or FilterSpec(cutoff=spec.lpf_cutoff)
    x = np.asarray(samples, dtype=float)
    if x.size < filt.tap_count:
        raise ValueError(f"input of {x.size} samples is shorter than the {filt.tap_count}-tap filter")
    mixed = x * _Carrier(spec.rf_freq, spec.internal_rate)(start_index, x.size)
    y = _filter_decimate(mixed, _design(filt, float(spec.internal_rate)), spec.decimation)
    y *= spec.gain
    return y


# quantisation


@dataclass
class RawSampleBlock:
    codes: np.ndarray
    off_scale_count: int
    channel_id: int = 0
    seed: int | None = None
    n_bits: int = 16
    f_s_out: float = 240e6
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.codes.size and int(self.codes.max()) >= 1 << self.n_bits:
            raise ValueError(f"code exceeds {self.n_bits}-bit range")
        if not 0 <= self.off_scale_count <= self.codes.size:
            raise ValueError("off_scale_count out of range")

    def __len__(self) -> int:
        return int(self.codes.size)

    @property
    def off_scale_fraction(self) -> float:
        return self.off_scale_count / max(1, self.codes.size)


def _code_dtype(n_bits: int):
    return np.uint16 if n_bits <= 16 else np.uint32


def quantize_codes(samples: np.ndarray, quant: QuantizerSpec) -> tuple[np.ndarray, int]:
    v = np.asarray(samples, dtype=float)
    if not np.all(np.isfinite(v)):
        bad = int(np.flatnonzero(~np.isfinite(v))[0])
        raise ValueError(f"non-finite sample at index {bad}")
    r = quant.range_r
    top = quant.n_codes - 1
    scaled = np.floor((v + r) * (quant.n_codes / (2 * r)))
    codes = np.clip(scaled, 0, top).astype(_code_dtype(quant.n_bits))
    off = int(np.count_nonzero(v <= -r) + np.count_nonzero(v >= r))
    return codes, off


def quantize(samples: np.ndarray, quant: QuantizerSpec) -> RawSampleBlock:
    codes, off = quantize_codes(samples, quant)
    return RawSampleBlock(codes=codes, off_scale_count=off, n_bits=quant.n_bits)


def expected_off_scale_fraction(sigma_total: float, range_r: float) -> float:
    """Gaussian mass outside [-R, R]."""
    return float(math.erfc(range_r / (sigma_total * math.sqrt(2))))


def off_scale_tolerance(sigma_total: float, range_r: float, n: int, k: float = 3.0) -> tuple[float, float]:
    """Expected off-scale fraction and its ``k``-binomial-sd half width."""
    p = expected_off_scale_fraction(sigma_total, range_r)
    return p, k * math.sqrt(p * (1 - p) / n)


# end-to-end channel


def baseband_chunks(
    spec: ChannelSpec,
    model: NoiseModel,
    n_samples: int,
    prng_seed: int,
    filt: FilterSpec | None = None,
    chunk: int = DEFAULT_CHUNK,
    tracks: bool = False,
) -> Iterator[np.ndarray] | Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield baseband samples in chunks until ``n_samples`` have been produced.

    With ``tracks=True`` each item is ``(quantum, classical)`` downconverted
    separately; their sum equals the ``tracks=False`` output.
    """
    filt = filt or FilterSpec(cutoff=spec.lpf_cutoff)
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    decim = spec.decimation
    taps = filt.tap_count
    source = WidebandSource(model, prng_seed, spec.channel_id)
    q_carry = np.zeros(0)
    e_carry = np.zeros(0)
    start = 0  # absolute index of the first carried sample
    done = 0
    while done < n_samples:
        n_out = min(chunk, n_samples - done)
        need = n_out * decim + taps - 1 - q_carry.size
        q_new, e_new = source.draw(need)
        q = np.concatenate([q_carry, q_new])
        e = np.concatenate([e_carry, e_new])
        if tracks:
            yield downconvert(q, spec, filt, start), downconvert(e, spec, filt, start)
        else:
            yield downconvert(q + e, spec, filt, start)
        advance = n_out * decim
        q_carry, e_carry = q[advance:], e[advance:]
        start += advance
        done += n_out


def simulate_channel(
    spec: ChannelSpec,
    model: NoiseModel,
    quant: QuantizerSpec,
    n_samples: int,
    prng_seed: int,
    filt: FilterSpec | None = None,
    chunk: int = DEFAULT_CHUNK,
) -> RawSampleBlock:
    codes = np.empty(n_samples, dtype=_code_dtype(quant.n_bits))
    off = 0
    pos = 0
    for y in baseband_chunks(spec, model, n_samples, prng_seed, filt, chunk):
        c, o = quantize_codes(y, quant)
        codes[pos : pos + c.size] = c
        pos += c.size
        off += o
    return RawSampleBlock(
        codes=codes,
        off_scale_count=off,
        channel_id=spec.channel_id,
        seed=prng_seed,
        n_bits=quant.n_bits,
        f_s_out=spec.f_s_out,
    )


# raw sample files

RAW_MAGIC = b"QRAW"
RAW_VERSION = 1
_RAW_HEADER = struct.Struct("<4sHBBdIQQQI")  # 48 bytes


class RawFormatError(ValueError):
    pass


def write_raw(path: str | os.PathLike, block: RawSampleBlock) -> None:
    width = np.dtype(_code_dtype(block.n_bits)).itemsize
    header = _RAW_HEADER.pack(
        RAW_MAGIC,
        RAW_VERSION,
        block.n_bits,
        width,
        float(block.f_s_out),
        block.channel_id,
        block.codes.size,
        block.off_scale_count,
        0 if block.seed is None else block.seed,
        0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(block.codes.astype("<u%d" % width).tobytes())


def read_raw(path: str | os.PathLike) -> RawSampleBlock:
    with open(path, "rb") as fh:
        head = fh.read(_RAW_HEADER.size)
        if len(head) < _RAW_HEADER.size:
            raise RawFormatError(f"{path}: truncated header ({len(head)} of {_RAW_HEADER.size} bytes)")
        magic, version, n_bits, width, f_s, ch, count, off, seed, _ = _RAW_HEADER.unpack(head)
        if magic != RAW_MAGIC:
            raise RawFormatError(f"{path}: bad magic {magic!r} at offset 0")
        if version != RAW_VERSION:
            raise RawFormatError(f"{path}: unsupported version {version} at offset 4")
        if not 2 <= n_bits <= 24:
            raise RawFormatError(f"{path}: invalid n_bits {n_bits} at offset 6")
        if width != np.dtype(_code_dtype(n_bits)).itemsize:
            raise RawFormatError(f"{path}: code width {width} inconsistent with n_bits at offset 7")
        body = fh.read()
    if len(body) != count * width:
        raise RawFormatError(
            f"{path}: header at offset 20 declares {count} codes, payload holds {len(body) // width}"
        )
    codes = np.frombuffer(body, dtype="<u%d" % width).astype(_code_dtype(n_bits))
    if off > count:
        raise RawFormatError(f"{path}: off-scale count {off} exceeds sample count at offset 28")
    return RawSampleBlock(codes=codes, off_scale_count=off, channel_id=ch, seed=seed, n_bits=n_bits, f_s_out=f_s)
