"""Lagged cross-correlation and mutual information between two bit streams.

For every lag the overlap length, the two partial sums and the count of
coincident ones are computed once; correlation and the 2x2 joint table are
both derived from those counts. Lag ``k`` pairs ``x[t]`` with ``y[t+k]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from ..bitstream import BitStream

__all__ = [
    "CorrelationReport",
    "cross_correlation",
    "mutual_information",
    "correlation_report",
    "rho_threshold",
    "mi_bias",
    "mi_threshold",
]


def rho_threshold(n: int, z: float = 5.0) -> float:
    return z / math.sqrt(n)


def mi_bias(n: int) -> float:
    """Plug-in MI bias for independent binary variables: ``1/(2 n ln 2)`` bits."""
    return 1.0 / (2.0 * n * math.log(2))


def mi_threshold(n: int, z: float = 5.0) -> float:
    """Bias plus ``z`` standard errors of the plug-in MI under independence.

    Under independence ``2 n ln2 * I`` is asymptotically chi-square with one
    degree of freedom, so the estimate has mean ``bias`` and standard error
    ``sqrt(2) * bias``.
    """
    b = mi_bias(n)
    return b + z * math.sqrt(2.0) * b


def _as_bits(s) -> np.ndarray:
    if isinstance(s, BitStream):
        return s.to_bits()
    return np.asarray(s, dtype=np.uint8).ravel()


def _check_pair(x: np.ndarray, y: np.ndarray, max_lag: int) -> None:
    if x.size != y.size:
        raise ValueError(f"stream lengths differ: {x.size} vs {y.size}")
    if x.size < 10 * max(max_lag, 1):
        raise ValueError(f"need at least {10 * max(max_lag, 1)} bits for max_lag={max_lag}")
    for name, s in (("x", x), ("y", y)):
        ones = int(np.count_nonzero(s))
        if ones in (0, s.size):
            raise ValueError(f"stream {name} is constant")


@dataclass
class _LagCounts:
    lags: np.ndarray
    overlap: np.ndarray
    n11: np.ndarray
    sx: np.ndarray
    sy: np.ndarray


def _lag_counts(x: np.ndarray, y: np.ndarray, lags) -> _LagCounts:
    n = x.size
    xf = x.astype(np.float64)
    yf = y.astype(np.float64)
    cx = np.concatenate([[0], np.cumsum(x, dtype=np.int64)])
    cy = np.concatenate([[0], np.cumsum(y, dtype=np.int64)])
    lags = np.asarray(list(lags), dtype=np.int64)
    overlap = n - np.abs(lags)
    n11 = np.empty(lags.size, dtype=np.int64)
    sx = np.empty(lags.size, dtype=np.int64)
    sy = np.empty(lags.size, dtype=np.int64)
    for i, k in enumerate(lags):
        if k >= 0:
            xs, ys = slice(0, n - k), slice(k, n)
        else:
            xs, ys = slice(-k, n), slice(0, n + k)
        n11[i] = int(round(float(np.dot(xf[xs], yf[ys]))))
        sx[i] = cx[xs.stop] - cx[xs.start]
        sy[i] = cy[ys.stop] - cy[ys.start]
    return _LagCounts(lags, overlap, n11, sx, sy)


def _rho_from_counts(c: _LagCounts, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # x' = 2x - 1 standardised with whole-stream mean and sd
    n = x.size
    px = np.count_nonzero(x) / n
    py = np.count_nonzero(y) / n
    mx, my = 2 * px - 1, 2 * py - 1
    sdx, sdy = 2 * math.sqrt(px * (1 - px)), 2 * math.sqrt(py * (1 - py))
    ax, ay = 1 + mx, 1 + my
    # sum (2x - ax)(2y - ay) over the overlap
    raw = 4.0 * c.n11 - 2.0 * ay * c.sx - 2.0 * ax * c.sy + c.overlap * ax * ay
    return np.abs(raw) / (sdx * sdy) / c.overlap


def _mi_from_counts(n11: int, sx: int, sy: int, total: int) -> float:
    n10 = sx - n11
    n01 = sy - n11
    n00 = total - n11 - n10 - n01
    table = np.array([[n00, n01], [n10, n11]], dtype=float) / total
    pa = table.sum(axis=1)
    pb = table.sum(axis=0)
    if np.any(pa == 0) or np.any(pb == 0):
        raise ValueError("degenerate marginal distribution")
    nz = table > 0
    ratio = table[nz] / np.outer(pa, pb)[nz]
    return max(0.0, float(np.sum(table[nz] * np.log2(ratio))))


def cross_correlation(x, y, max_lag: int) -> dict[int, float]:
    """Absolute normalised correlation of the +-1 sequences for |k| <= max_lag."""
    xb, yb = _as_bits(x), _as_bits(y)
    _check_pair(xb, yb, max_lag)
    c = _lag_counts(xb, yb, range(-max_lag, max_lag + 1))
    rho = _rho_from_counts(c, xb, yb)
    return {int(k): float(min(1.0, r)) for k, r in zip(c.lags, rho)}


def mutual_information(x, y, lag: int = 0) -> float:
    """Plug-in mutual information (bits) of the joint table of (x[t], y[t+lag])."""
    xb, yb = _as_bits(x), _as_bits(y)
    _check_pair(xb, yb, abs(lag))
    c = _lag_counts(xb, yb, [lag])
    return _mi_from_counts(int(c.n11[0]), int(c.sx[0]), int(c.sy[0]), int(c.overlap[0]))


@dataclass
class CorrelationReport:
    pair: tuple[str, str]
    n_bits_used: int
    rho: dict[int, float]
    mi: dict[int, float]
    rho_threshold: float
    mi_threshold: float
    expected_dependent: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def max_rho(self) -> float:
        return max(self.rho.values())

    @property
    def max_mi(self) -> float:
        return max(self.mi.values())

    @property
    def rho_exceedances(self) -> list[int]:
        return [k for k, r in self.rho.items() if not r < self.rho_threshold]

    @property
    def mi_exceedances(self) -> list[int]:
        return [k for k, v in self.mi.items() if not v < self.mi_threshold]

    @property
    def independent(self) -> bool:
        return not self.rho_exceedances and not self.mi_exceedances

    @property
    def mi_familywise_p(self) -> float:
        """Chance that the largest MI over all lags is at least this large under independence.

        Uses ``2 n ln2 * I ~ chi2(1)`` per lag with a Sidak correction over
        the number of lags. Diagnostic only; the gate is ``mi_threshold``.
        """
        n = self.n_bits_used - max(abs(k) for k in self.mi)
        p_min = float(chi2.sf(2.0 * n * math.log(2) * self.max_mi, 1))
        return float(-np.expm1(len(self.mi) * np.log1p(-p_min)))

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "n_bits_used": self.n_bits_used,
            "rho_threshold": self.rho_threshold,
            "mi_threshold": self.mi_threshold,
            "max_rho": self.max_rho,
            "max_mi": self.max_mi,
            "rho_exceedances": self.rho_exceedances,
            "mi_exceedances": self.mi_exceedances,
            "independent": self.independent,
            "mi_familywise_p": self.mi_familywise_p,
            "expected_dependent": self.expected_dependent,
            "rho": {str(k): v for k, v in self.rho.items()},
            "mi": {str(k): v for k, v in self.mi.items()},
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary(self) -> str:
        a, b = self.pair
        verdict = "independent" if self.independent else "DEPENDENT"
        if self.expected_dependent:
            verdict += " (expected: same source)"
        return (
            f"{a} vs {b}: N={self.n_bits_used}  max rho={self.max_rho:.3e} "
            f"(< {self.rho_threshold:.3e})  max MI={self.max_mi:.3e} bits "
            f"(< {self.mi_threshold:.3e}, family-wise p={self.mi_familywise_p:.3f})  -> {verdict}"
        )


def correlation_report(
    x, y, max_lag: int = 100, pair: tuple[str, str] = ("x", "y"), expected_dependent: bool = False
) -> CorrelationReport:
    xb, yb = _as_bits(x), _as_bits(y)
    _check_pair(xb, yb, max_lag)
    c = _lag_counts(xb, yb, range(-max_lag, max_lag + 1))
    rho = _rho_from_counts(c, xb, yb)
    mi = [
        _mi_from_counts(int(c.n11[i]), int(c.sx[i]), int(c.sy[i]), int(c.overlap[i]))
        for i in range(c.lags.size)
    ]
    n = xb.size
    return CorrelationReport(
        pair=pair,
        n_bits_used=n,
        rho={int(k): float(min(1.0, r)) for k, r in zip(c.lags, rho)},
        mi={int(k): v for k, v in zip(c.lags, mi)},
        rho_threshold=rho_threshold(n),
        mi_threshold=mi_threshold(n - max_lag),
        expected_dependent=expected_dependent,
    )
