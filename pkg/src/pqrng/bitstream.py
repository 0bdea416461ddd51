"""Packed bit sequences with an exact bit length.

Bits are stored MSB-first inside bytes. ADC samples are serialised as
``n_bits`` bits each, MSB-first, in time order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = ["BitStream", "codes_to_bits"]


def codes_to_bits(codes: np.ndarray, n_bits: int) -> np.ndarray:
    """Unpacked 0/1 array, ``n_bits`` per code, MSB-first."""
    codes = np.asarray(codes)
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.uint32)
    return ((codes.astype(np.uint32)[:, None] >> shifts) & 1).astype(np.uint8).ravel()


@dataclass(frozen=True, eq=False)
class BitStream:
    data: np.ndarray
    n_bits: int

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if data.ndim != 1:
            raise ValueError("packed data must be one-dimensional")
        if not 0 <= self.n_bits <= 8 * data.size:
            raise ValueError(f"n_bits={self.n_bits} does not fit in {data.size} bytes")
        nbytes = (self.n_bits + 7) // 8
        data = data[:nbytes]
        tail = self.n_bits % 8
        if tail and data[-1] & (0xFF >> tail):
            # Keep padding bits zero so equal streams have equal bytes.
            data = data.copy()
            data[-1] &= (0xFF << (8 - tail)) & 0xFF
        object.__setattr__(self, "data", data)

    # construction

    @classmethod
    def empty(cls) -> BitStream:
        return cls(np.zeros(0, np.uint8), 0)

    @classmethod
    def from_bits(cls, bits) -> BitStream:
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(np.packbits(bits), int(bits.size))

    @classmethod
    def from_bytes(cls, raw: bytes | np.ndarray, n_bits: int | None = None) -> BitStream:
        arr = np.frombuffer(raw, dtype=np.uint8) if isinstance(raw, (bytes, bytearray)) else raw
        return cls(arr, 8 * len(arr) if n_bits is None else n_bits)

    @classmethod
    def from_codes(cls, codes: np.ndarray, n_bits: int) -> BitStream:
        codes = np.asarray(codes)
        if n_bits == 16:
            return cls(np.frombuffer(codes.astype(">u2").tobytes(), np.uint8), 16 * codes.size)
        if n_bits == 8:
            return cls(codes.astype(np.uint8), 8 * codes.size)
        return cls.from_bits(codes_to_bits(codes, n_bits))

    @classmethod
    def from_ascii(cls, text: str) -> BitStream:
        chars = np.frombuffer("".join(text.split()).encode("ascii"), np.uint8)
        if np.any((chars != ord("0")) & (chars != ord("1"))):
            raise ValueError("ASCII bit text may contain only '0', '1' and whitespace")
        return cls.from_bits(chars - ord("0"))

    @classmethod
    def concat(cls, streams: Iterable[BitStream]) -> BitStream:
        streams = [s for s in streams if s.n_bits]
        if not streams:
            return cls.empty()
        if all(s.n_bits % 8 == 0 for s in streams[:-1]):
            return cls(np.concatenate([s.data for s in streams]), sum(s.n_bits for s in streams))
        return cls.from_bits(np.concatenate([s.to_bits() for s in streams]))

    # access

    def __len__(self) -> int:
        return self.n_bits

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return self.n_bits == other.n_bits and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return f"BitStream(n_bits={self.n_bits})"

    def to_bits(self) -> np.ndarray:
        return np.unpackbits(self.data, count=self.n_bits)

    def slice(self, start: int, stop: int) -> BitStream:
        start, stop = max(0, start), min(self.n_bits, stop)
        if stop <= start:
            return BitStream.empty()
        if start % 8 == 0:
            return BitStream(self.data[start // 8 : (stop + 7) // 8], stop - start)
        first, last = start // 8, (stop + 7) // 8
        bits = np.unpackbits(self.data[first:last])
        return BitStream.from_bits(bits[start - 8 * first : stop - 8 * first])

    def to_ascii(self) -> str:
        return (self.to_bits() + ord("0")).tobytes().decode("ascii")

    # files

    def write(self, path: str | os.PathLike, fmt: str = "bin") -> None:
        """Flat MSB-first binary (last byte zero-padded) or ASCII '0'/'1'."""
        if fmt == "bin":
            with open(path, "wb") as fh:
                fh.write(self.data.tobytes())
        elif fmt == "ascii":
            with open(path, "w", encoding="ascii") as fh:
                fh.write(self.to_ascii())
        else:
            raise ValueError(f"unknown bit file format {fmt!r}")

    @classmethod
    def read(cls, path: str | os.PathLike, fmt: str = "bin", n_bits: int | None = None) -> BitStream:
        if fmt == "ascii":
            with open(path, encoding="ascii") as fh:
                stream = cls.from_ascii(fh.read())
        elif fmt == "bin":
            stream = cls.from_bytes(np.fromfile(path, dtype=np.uint8))
        else:
            raise ValueError(f"unknown bit file format {fmt!r}")
        if n_bits is not None:
            if n_bits > stream.n_bits:
                raise ValueError(f"{path}: holds {stream.n_bits} bits, {n_bits} requested")
            stream = stream.slice(0, n_bits)
        return stream
