"""Slow, independent reference computations used only by the tests.

None of these import the package under test.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _gauss_integral(lo: np.ndarray, hi: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    """Integral of the N(mu, sigma^2) density over [lo, hi] by composite Gauss-Legendre.

    Each interval is cut into pieces no wider than sigma/4 so the quadrature
    is exact to rounding for the smooth Gaussian integrand.
    """
    lo = np.maximum(lo, mu - 40 * sigma)
    hi = np.minimum(hi, mu + 40 * sigma)
    out = np.zeros(lo.shape)
    ok = hi > lo
    if not ok.any():
        return out
    lo, hi = lo[ok], hi[ok]
    pieces = int(np.max(np.ceil((hi - lo) / (sigma / 4))))
    pieces = max(pieces, 1)
    t = np.linspace(0.0, 1.0, pieces + 1)
    a = lo[:, None] + (hi - lo)[:, None] * t[None, :-1]
    b = lo[:, None] + (hi - lo)[:, None] * t[None, 1:]
    mid, half = (a + b) / 2, (b - a) / 2
    x = mid[..., None] + half[..., None] * _GL_X
    f = np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    out[ok] = np.sum(f * _GL_W * half[..., None], axis=(1, 2))
    return out


def code_masses(mu: float, sigma: float, n_bits: int, range_r: float) -> np.ndarray:
    """Probability of every code for a Gaussian sample; edge codes hold the clipped tails."""
    n = 1 << n_bits
    delta = 2 * range_r / n
    edges = -range_r + delta * np.arange(n + 1)
    out = np.empty(n)
    # interior codes share one width, so one subdivision fits them all
    out[1:-1] = _gauss_integral(edges[1:-2], edges[2:-1], mu, sigma)
    out[0] = _gauss_integral(np.array([-np.inf]), edges[1:2], mu, sigma)[0]
    out[-1] = _gauss_integral(edges[-2:-1], np.array([np.inf]), mu, sigma)[0]
    return out


def min_entropy_oracle(
    sigma_q: float, sigma_e: float, n_bits: int, range_r: float, k_sigma: float = 5.0, grid: int = 201
) -> float:
    """Worst case over codes and over every mean shift in [-k*sigma_e, k*sigma_e]."""
    s = k_sigma * sigma_e

    def p_max(mu: float) -> float:
        return float(code_masses(mu, sigma_q, n_bits, range_r).max())

    if s == 0:
        return -math.log2(p_max(0.0))
    mus = np.linspace(-s, s, grid)
    vals = np.array([p_max(m) for m in mus])
    best = float(vals.max())
    for i in np.argsort(vals)[-4:]:
        lo, hi = mus[max(i - 1, 0)], mus[min(i + 1, grid - 1)]
        r = minimize_scalar(lambda m: -p_max(m), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(r.fun))
    return -math.log2(best)


def toeplitz_dense(seed, m: int, n: int) -> np.ndarray:
    """T[i][j] = seed[n-1+i-j], via scipy's first-column / first-row constructor."""
    from scipy.linalg import toeplitz

    seed = np.asarray(seed, dtype=np.uint8)
    col = seed[n - 1 : n - 1 + m]
    row = seed[n - 1 :: -1][:n]
    return toeplitz(col, row).astype(np.uint8)


def gf2_matvec(t: np.ndarray, x) -> np.ndarray:
    return (t.astype(np.int64) @ np.asarray(x, dtype=np.int64)) % 2


def _run_cdf(m: int, limit: int) -> float:
    """P(longest run of ones in ``m`` fair bits <= limit), by dynamic programming."""
    # state[j]: probability of ending in a run of j ones with no run above limit
    state = np.zeros(limit + 1)
    state[0] = 1.0
    for _ in range(m):
        nxt = np.empty(limit + 1)
        nxt[0] = state.sum() * 0.5
        nxt[1:] = state[:-1] * 0.5
        state = nxt
    return float(state.sum())


def longest_run_probs(m: int) -> np.ndarray:
    """P(longest run of ones in ``m`` fair bits == k) for k = 0..m."""
    cdf = np.array([_run_cdf(m, j) for j in range(m + 1)])
    return np.diff(np.concatenate([[0.0], cdf]))


def longest_run_categories(m: int, lo: int, hi: int) -> np.ndarray:
    """Category probabilities ``<= lo``, ``lo+1 .. hi-1`` one each, ``>= hi``."""
    cdf = np.array([_run_cdf(m, j) for j in range(lo, hi)])
    return np.diff(np.concatenate([[0.0], cdf, [1.0]]))


def dft_statistic(bits) -> tuple[int, float]:
    """Peak count below threshold from an explicit O(n^2) DFT of the +-1 sequence."""
    x = 2.0 * np.asarray(bits, dtype=float) - 1.0
    n = x.size
    k = np.arange(n // 2)[:, None]
    t = np.arange(n)[None, :]
    mag = np.abs(np.sum(x * np.exp(-2j * np.pi * k * t / n), axis=1))
    thr = math.sqrt(math.log(1 / 0.05) * n)
    n1 = int(np.sum(mag < thr))
    n0 = 0.95 * n / 2
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4)
    return n1, math.erfc(abs(d) / math.sqrt(2))
