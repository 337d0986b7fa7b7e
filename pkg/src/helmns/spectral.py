"""FFT plumbing shared by the spectral backends.

Real fields are transformed with ``rfftn`` over the three spatial axes, so the
z axis of a spectrum holds ``nz // 2 + 1`` modes.
"""
from __future__ import annotations

import os
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .grid import Grid3


def workers() -> int:
    """Worker cap from ``HELMNS_THREADS``; defaults to the machine's CPU count."""
    env = os.environ.get("HELMNS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def forward(values: np.ndarray) -> np.ndarray:
    return sfft.rfftn(values, axes=(-3, -2, -1), workers=workers())


def inverse(spectrum: np.ndarray, grid: Grid3) -> np.ndarray:
    return sfft.irfftn(spectrum, s=grid.shape, axes=(-3, -2, -1), workers=workers())


@lru_cache(maxsize=32)
def _tables(grid: Grid3):
    nx, ny, nz = grid.n
    mx = sfft.fftfreq(nx, 1.0 / nx)
    my = sfft.fftfreq(ny, 1.0 / ny)
    mz = sfft.rfftfreq(nz, 1.0 / nz)
    k = [2 * np.pi / L * m for L, m in zip(grid.length, (mx, my, mz))]
    # derivative wavenumbers: Nyquist zeroed on even axes
    kd = []
    for kk, m, n in zip(k, (mx, my, mz), grid.n):
        kk = kk.copy()
        if n % 2 == 0:
            kk[np.abs(m) == n // 2] = 0.0
        kd.append(kk)
    shapes = [(-1, 1, 1), (1, -1, 1), (1, 1, -1)]
    k = tuple(a.reshape(s) for a, s in zip(k, shapes))
    kd = tuple(a.reshape(s) for a, s in zip(kd, shapes))
    ksq = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
    kdsq = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
    keep = [np.abs(m) < n / 3.0 for m, n in zip((mx, my, mz), grid.n)]
    mask = keep[0][:, None, None] & keep[1][None, :, None] & keep[2][None, None, :]
    for arr in (*k, *kd, ksq, kdsq, mask):
        arr.flags.writeable = False
    return k, kd, ksq, kdsq, mask


def wavenumbers(grid: Grid3):
    """Full wavenumbers ``(kx, ky, kz)`` broadcastable against a spectrum."""
    return _tables(grid)[0]


def derivative_wavenumbers(grid: Grid3):
    """Wavenumbers for odd derivatives (Nyquist mode zeroed)."""
    return _tables(grid)[1]


def ksquared(grid: Grid3) -> np.ndarray:
    return _tables(grid)[2]


def derivative_ksquared(grid: Grid3) -> np.ndarray:
    """|k|^2 built from the derivative wavenumbers, the symbol of div(grad)."""
    return _tables(grid)[3]


def dealias_mask(grid: Grid3) -> np.ndarray:
    """2/3 rule: keep modes with |m_i| < n_i / 3 on every axis."""
    return _tables(grid)[4]


def dealias(values: np.ndarray, grid: Grid3) -> np.ndarray:
    return inverse(forward(values) * dealias_mask(grid), grid)


def safe_inverse_ksq(kdsq: np.ndarray) -> np.ndarray:
    """1/|k|^2 with unrepresentable modes (|k| = 0) mapped to 0."""
    out = np.zeros_like(kdsq)
    nz = kdsq > 0
    out[nz] = 1.0 / kdsq[nz]
    return out
