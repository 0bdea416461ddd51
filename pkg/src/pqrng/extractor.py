"""Toeplitz-hashing extraction over GF(2).

The matrix is never materialised. ``T[i][j] = seed[(n-1) + i - j]``, so
column ``j`` is the contiguous seed slice ``seed[n-1-j : n-1-j+m]``.

The fast kernel mirrors a three-stage hardware pipeline:

1. build: split the ``n`` input columns into chunks of ``chunk_bits``
   columns and tabulate, for each chunk, the XOR of its columns for every
   possible chunk value (the submatrix times every chunk vector);
2. multiply: each input chunk value selects one precomputed partial
   product, packed into 64-bit words;
3. accumulate: partial products are XORed into an output register.

Output bit ``i`` of a block lives in word ``i // 64`` at little-endian bit
position ``i % 64`` of the byte view; conversion back to a ``BitStream``
restores plain MSB-first order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numba
import numpy as np

from . import prng
from .bitstream import BitStream

__all__ = [
    "ToeplitzSpec",
    "ToeplitzKernel",
    "ToeplitzExtractor",
    "build_toeplitz",
    "multiply",
    "multiply_naive",
    "seeded_spec_from_config",
    "read_seed_file",
    "write_seed_file",
]

DEFAULT_CHUNK_BITS = 8


@dataclass(frozen=True, eq=False)
class ToeplitzSpec:
    m: int
    n: int
    seed: np.ndarray

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"matrix dimensions must be positive, got {self.m}x{self.n}")
        seed = np.asarray(self.seed, dtype=np.uint8).ravel()
        if seed.size != self.m + self.n - 1:
            raise ValueError(
                f"seed has {seed.size} bits, expected m + n - 1 = {self.m + self.n - 1}"
            )
        if seed.size and seed.max() > 1:
            raise ValueError("seed entries must be 0 or 1")
        seed = seed.copy()
        seed.setflags(write=False)
        object.__setattr__(self, "seed", seed)

    def entry(self, i: int, j: int) -> int:
        return int(self.seed[self.n - 1 + i - j])

    def column(self, j: int) -> np.ndarray:
        start = self.n - 1 - j
        return self.seed[start : start + self.m]

    def dense(self) -> np.ndarray:
        """Materialised m x n matrix; meant for small sizes and inspection."""
        i = np.arange(self.m)[:, None]
        j = np.arange(self.n)[None, :]
        return self.seed[self.n - 1 + i - j]


def build_toeplitz(seed, m: int, n: int) -> ToeplitzSpec:
    return ToeplitzSpec(m=m, n=n, seed=np.asarray(seed, dtype=np.uint8))


# kernels


@numba.njit(cache=True, nogil=True)
def _lookup_accumulate(idx, tables, out):
    n_blocks, n_chunks = idx.shape
    n_words = tables.shape[2]
    acc = np.zeros(n_words, dtype=np.uint64)
    for b in range(n_blocks):
        acc[:] = 0
        for c in range(n_chunks):
            row = tables[c, idx[b, c]]
            for w in range(n_words):
                acc[w] ^= row[w]
        out[b, :] = acc


@numba.njit(cache=True, nogil=True)
def _naive_blocks(seed, m, n, x, out):
    # Bit-by-bit double loop straight from the entry definition.
    n_blocks = x.shape[0]
    for b in range(n_blocks):
        for i in range(m):
            s = 0
            for j in range(n):
                s ^= seed[n - 1 + i - j] & x[b, j]
            out[b, i] = s


class ToeplitzKernel:
    """Precomputed lookup tables for one spec (pipeline stage 1)."""

    def __init__(self, spec: ToeplitzSpec, chunk_bits: int = DEFAULT_CHUNK_BITS):
        if not 1 <= chunk_bits <= 16:
            raise ValueError(f"chunk_bits must lie in [1, 16], got {chunk_bits}")
        self.spec = spec
        self.chunk_bits = k = chunk_bits
        self.n_chunks = -(-spec.n // k)
        self.n_words = -(-spec.m // 64)
        m, n = spec.m, spec.n

        # columns[j] holds column j packed into n_words words; padded columns are zero
        cols = np.zeros((self.n_chunks * k, self.n_words * 64), dtype=np.uint8)
        starts = n - 1 - np.arange(n)
        cols[:n, :m] = spec.seed[starts[:, None] + np.arange(m)[None, :]]
        packed = np.packbits(cols, axis=1, bitorder="little").view(np.uint64)
        packed = packed.reshape(self.n_chunks, k, self.n_words)

        # table[c, v]: XOR of columns c*k + t over set bits of v, bit (k-1-t) <-> column t
        tables = np.zeros((self.n_chunks, 1 << k, self.n_words), dtype=np.uint64)
        for b in range(k):
            t = k - 1 - b
            lo = 1 << b
            tables[:, lo : 2 * lo] = tables[:, :lo] ^ packed[:, t][:, None, :]
        self.tables = tables

    def _indices(self, blocks: np.ndarray) -> np.ndarray:
        """Chunk values per block from unpacked (n_blocks, n) bits."""
        k = self.chunk_bits
        pad = self.n_chunks * k - self.spec.n
        if pad:
            blocks = np.pad(blocks, ((0, 0), (0, pad)))
        weights = (1 << np.arange(k - 1, -1, -1)).astype(np.uint16)
        return (blocks.reshape(blocks.shape[0], self.n_chunks, k).astype(np.uint16) * weights).sum(
            axis=2, dtype=np.uint16
        )

    def multiply_packed(self, data: np.ndarray, n_blocks: int) -> np.ndarray:
        """Hash ``n_blocks`` consecutive byte-aligned blocks of packed input.

        Returns the raw (n_blocks, n_words) accumulator words.
        """
        n = self.spec.n
        out = np.empty((n_blocks, self.n_words), dtype=np.uint64)
        if n_blocks == 0:
            return out
        if self.chunk_bits == 8 and n % 8 == 0:
            idx = np.asarray(data[: n_blocks * (n // 8)], dtype=np.uint8).reshape(n_blocks, n // 8)
        else:
            bits = np.unpackbits(np.asarray(data, dtype=np.uint8), count=n_blocks * n)
            idx = self._indices(bits.reshape(n_blocks, n))
        _lookup_accumulate(idx, self.tables, out)
        return out

    def words_to_bits(self, words: np.ndarray) -> np.ndarray:
        """Accumulator words to an (n_blocks, m) array of 0/1."""
        raw = np.ascontiguousarray(words).view(np.uint8)
        return np.unpackbits(raw, axis=1, bitorder="little")[:, : self.spec.m]

    def hash_blocks(self, bits: np.ndarray) -> np.ndarray:
        """(n_blocks, n) 0/1 array in, (n_blocks, m) 0/1 array out."""
        bits = np.asarray(bits, dtype=np.uint8)
        out = np.empty((bits.shape[0], self.n_words), dtype=np.uint64)
        _lookup_accumulate(self._indices(bits), self.tables, out)
        return self.words_to_bits(out)

    def hash_stream(self, stream: BitStream) -> BitStream:
        """Hash every complete block of ``stream``; a partial tail is ignored."""
        n_blocks = stream.n_bits // self.spec.n
        if self.spec.n % 8 == 0:
            words = self.multiply_packed(stream.data, n_blocks)
        else:
            bits = stream.to_bits()[: n_blocks * self.spec.n].reshape(n_blocks, self.spec.n)
            out = np.empty((n_blocks, self.n_words), dtype=np.uint64)
            _lookup_accumulate(self._indices(bits), self.tables, out)
            words = out
        return BitStream.from_bits(self.words_to_bits(words).ravel())


def multiply(spec: ToeplitzSpec, x, chunk_bits: int = DEFAULT_CHUNK_BITS) -> np.ndarray:
    """``T x`` over GF(2) using the chunked table kernel."""
    x = np.asarray(x, dtype=np.uint8).ravel()
    if x.size != spec.n:
        raise ValueError(f"input has {x.size} bits, matrix has {spec.n} columns")
    return ToeplitzKernel(spec, chunk_bits).hash_blocks(x[None, :])[0]


def multiply_naive(spec: ToeplitzSpec, x) -> np.ndarray:
    """Bit-serial ``T x``; the reference the chunked kernel is measured against."""
    x = np.asarray(x, dtype=np.uint8)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != spec.n:
        raise ValueError(f"input has {x.shape[1]} bits, matrix has {spec.n} columns")
    out = np.empty((x.shape[0], spec.m), dtype=np.uint8)
    _naive_blocks(spec.seed, spec.m, spec.n, np.ascontiguousarray(x), out)
    return out[0] if single else out


# streaming


@dataclass
class ToeplitzExtractor:
    """Streaming extractor: complete ``n``-bit blocks in, ``m`` bits out per block.

    A partial trailing block waits in the buffer for the next ``feed``;
    ``finish`` drops it and reports how many bits were discarded.
    """

    spec: ToeplitzSpec
    chunk_bits: int = DEFAULT_CHUNK_BITS
    blocks: int = 0
    bits_in: int = 0
    bits_out: int = 0
    _buffer: BitStream = field(default_factory=BitStream.empty, repr=False)

    def __post_init__(self):
        self.kernel = ToeplitzKernel(self.spec, self.chunk_bits)

    @property
    def buffered(self) -> int:
        return self._buffer.n_bits

    def feed(self, data: BitStream) -> BitStream:
        self.bits_in += data.n_bits
        pending = BitStream.concat([self._buffer, data])
        n = self.spec.n
        n_blocks = pending.n_bits // n
        out = self.kernel.hash_stream(pending)
        self._buffer = pending.slice(n_blocks * n, pending.n_bits)
        self.blocks += n_blocks
        self.bits_out += out.n_bits
        return out

    def finish(self) -> int:
        dropped = self._buffer.n_bits
        self._buffer = BitStream.empty()
        return dropped


def extract_stream(state: ToeplitzExtractor, data: BitStream) -> BitStream:
    return state.feed(data)


# seeds


def read_seed_file(path: str | os.PathLike, n_bits: int) -> np.ndarray:
    """First ``n_bits`` bits (MSB-first) of a flat binary seed file."""
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size * 8 < n_bits:
        raise ValueError(f"{path}: seed file holds {raw.size * 8} bits, {n_bits} required")
    return np.unpackbits(raw, count=n_bits)


def write_seed_file(path: str | os.PathLike, seed_bits: np.ndarray) -> None:
    BitStream.from_bits(seed_bits).write(path)


def seeded_spec_from_config(source: dict, m: int, n: int) -> ToeplitzSpec:
    """Build a spec from ``{"file": path}`` or ``{"prng_seed": int, "channel": id}``."""
    need = m + n - 1
    if "file" in source:
        seed = read_seed_file(source["file"], need)
    elif "prng_seed" in source:
        gen = prng.stream(int(source["prng_seed"]), int(source.get("channel", 0)), prng.TOEPLITZ_SEED)
        seed = gen.integers(0, 2, size=need, dtype=np.uint8)
    else:
        raise ValueError("seed source needs either 'file' or 'prng_seed'")
    return ToeplitzSpec(m=m, n=n, seed=seed)
