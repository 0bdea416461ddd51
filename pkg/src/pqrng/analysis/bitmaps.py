"""Bit streams as black-and-white images, and their pixelwise XOR."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from ..bitstream import BitStream

__all__ = ["BitmapImage", "bitmap", "xor_bitmap", "read_pbm"]


@dataclass(frozen=True, eq=False)
class BitmapImage:
    width: int
    height: int
    bits: np.ndarray  # (height, width), row-major, 1 = black

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).reshape(self.height, self.width)
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitmapImage):
            return NotImplemented
        return self.bits.shape == other.bits.shape and np.array_equal(self.bits, other.bits)

    def to_pbm(self, binary: bool = True) -> bytes:
        """P4 (packed) or P1 (ASCII) portable bitmap."""
        if binary:
            head = f"P4\n{self.width} {self.height}\n".encode()
            return head + np.packbits(self.bits, axis=1).tobytes()
        rows = "\n".join(" ".join(str(int(b)) for b in row) for row in self.bits)
        return f"P1\n{self.width} {self.height}\n{rows}\n".encode()

    def write(self, path: str | os.PathLike, binary: bool = True) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_pbm(binary))


def bitmap(bits, width: int = 64, height: int = 64) -> BitmapImage:
    """First ``width*height`` bits laid out row by row."""
    arr = bits.to_bits() if isinstance(bits, BitStream) else np.asarray(bits, dtype=np.uint8).ravel()
    need = width * height
    if arr.size < need:
        raise ValueError(f"need {need} bits for a {width}x{height} bitmap, got {arr.size}")
    return BitmapImage(width, height, arr[:need].copy())


def xor_bitmap(a: BitmapImage, b: BitmapImage) -> BitmapImage:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(f"bitmap sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")
    return BitmapImage(a.width, a.height, a.bits ^ b.bits)


def read_pbm(path: str | os.PathLike) -> BitmapImage:
    with open(path, "rb") as fh:
        data = fh.read()
    head = re.match(rb"(P[14])\s+(\d+)\s+(\d+)\s", data)
    if head is None:
        raise ValueError(f"{path}: not a PBM file")
    magic, width, height = head.group(1), int(head.group(2)), int(head.group(3))
    payload = data[head.end() :]
    if magic == b"P4":
        row_bytes = (width + 7) // 8
        raw = np.frombuffer(payload[: row_bytes * height], np.uint8).reshape(height, row_bytes)
        bits = np.unpackbits(raw, axis=1)[:, :width]
    else:
        digits = [c - 48 for c in payload if c in (48, 49)]
        bits = np.array(digits[: width * height], dtype=np.uint8)
    return BitmapImage(width, height, bits)
