"""Discrete vector calculus: grad, div, curl, Laplacian, iterated curl, advection.

Two backends.  :data:`SPECTRAL` differentiates in Fourier space and is only
valid on periodic grids; :class:`FiniteDifference` uses centred stencils of
order 2 or 4, wrapping on periodic grids and switching to one-sided stencils
of the same order at the faces of a truncated window.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from . import spectral as sp
from .grid import Grid3, ScalarField, VectorField


class BackendError(ValueError):
    """Backend incompatible with the grid it was asked to work on."""


@dataclass(frozen=True)
class Spectral:
    pass


@dataclass(frozen=True)
class FiniteDifference:
    order: int = 4

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError(f"finite-difference order must be 2 or 4, got {self.order}")


SPECTRAL = Spectral()
FD2 = FiniteDifference(2)
FD4 = FiniteDifference(4)


def default_backend(grid: Grid3):
    return SPECTRAL if grid.periodic else FD4


def _resolve(backend, grid: Grid3):
    if backend is None:
        return default_backend(grid)
    if isinstance(backend, Spectral) and not grid.periodic:
        raise BackendError("the spectral backend needs a periodic grid")
    if not isinstance(backend, (Spectral, FiniteDifference)):
        raise TypeError(f"unknown differentiation backend {backend!r}")
    return backend


# --- finite-difference stencils -------------------------------------------------

@lru_cache(maxsize=None)
def stencil_weights(offsets: tuple[int, ...], deriv: int) -> np.ndarray:
    """Weights w with  sum_j w_j f(x + o_j h) = h^deriv f^(deriv)(x) + O(h^(len-deriv))."""
    offs = np.asarray(offsets, dtype=np.float64)
    npts = len(offs)
    A = np.vander(offs, npts, increasing=True).T
    rhs = np.zeros(npts)
    rhs[deriv] = factorial(deriv)
    w = np.linalg.solve(A, rhs)
    w.flags.writeable = False
    return w


def _fd_axis(a: np.ndarray, axis: int, h: float, deriv: int, order: int, periodic: bool) -> np.ndarray:
    half = order // 2
    centred = tuple(range(-half, half + 1))
    w = stencil_weights(centred, deriv)
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    out = np.zeros_like(a)
    if periodic:
        for o, wj in zip(centred, w):
            if wj != 0.0:
                out += wj * np.roll(a, -o, axis=0)
    else:
        for o, wj in zip(centred, w):
            if wj != 0.0:
                out[half:n - half] += wj * a[half + o:n - half + o]
        width = order + deriv  # one-sided stencils keep the interior order
        for i in range(half):
            left = tuple(range(-i, -i + width))
            wl = stencil_weights(left, deriv)
            out[i] = sum(wj * a[i + o] for o, wj in zip(left, wl))
            j = n - 1 - i
            right = tuple(-o for o in left)
            wr = stencil_weights(right, deriv)
            out[j] = sum(wj * a[j + o] for o, wj in zip(right, wr))
    return np.moveaxis(out / h**deriv, 0, axis)


# --- primitive partial derivatives on raw arrays -------------------------------

def _partials(values: np.ndarray, grid: Grid3, backend) -> list[np.ndarray]:
    """First partials (d/dx, d/dy, d/dz) of one scalar array."""
    if isinstance(backend, Spectral):
        fh = sp.forward(values)
        kd = sp.derivative_wavenumbers(grid)
        return [sp.inverse(1j * k * fh, grid) for k in kd]
    return [_fd_axis(values, ax, h, 1, backend.order, grid.periodic) for ax, h in enumerate(grid.spacing)]


def _laplacian_array(values: np.ndarray, grid: Grid3, backend) -> np.ndarray:
    if isinstance(backend, Spectral):
        return sp.inverse(-sp.ksquared(grid) * sp.forward(values), grid)
    return sum(_fd_axis(values, ax, h, 2, backend.order, grid.periodic) for ax, h in enumerate(grid.spacing))


def _curl_array(F: np.ndarray, grid: Grid3, backend) -> np.ndarray:
    if isinstance(backend, Spectral):
        Fh = sp.forward(F)
        kx, ky, kz = sp.derivative_wavenumbers(grid)
        ch = np.stack([
            1j * (ky * Fh[2] - kz * Fh[1]),
            1j * (kz * Fh[0] - kx * Fh[2]),
            1j * (kx * Fh[1] - ky * Fh[0]),
        ])
        return sp.inverse(ch, grid)
    d = [_partials(c, grid, backend) for c in F]  # d[i][j] = d F_i / d x_j
    return np.stack([d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]])


# --- public operators ---------------------------------------------------------

def grad(f: ScalarField, backend=None) -> VectorField:
    backend = _resolve(backend, f.grid)
    return VectorField(f.grid, _partials(f.values, f.grid, backend))


def div(F: VectorField, backend=None) -> ScalarField:
    backend = _resolve(backend, F.grid)
    grid = F.grid
    if isinstance(backend, Spectral):
        Fh = sp.forward(F.values)
        kd = sp.derivative_wavenumbers(grid)
        return ScalarField(grid, sp.inverse(1j * (kd[0] * Fh[0] + kd[1] * Fh[1] + kd[2] * Fh[2]), grid))
    total = sum(_fd_axis(F.values[i], i, grid.spacing[i], 1, backend.order, grid.periodic) for i in range(3))
    return ScalarField(grid, total)


def curl(F: VectorField, backend=None) -> VectorField:
    backend = _resolve(backend, F.grid)
    return VectorField(F.grid, _curl_array(F.values, F.grid, backend))


def laplacian(f, backend=None):
    backend = _resolve(backend, f.grid)
    if isinstance(f, VectorField):
        return VectorField(f.grid, [_laplacian_array(c, f.grid, backend) for c in f.values])
    return ScalarField(f.grid, _laplacian_array(f.values, f.grid, backend))


def curl_k(F: VectorField, k: int, backend=None) -> VectorField:
    """k-fold curl, applied literally one curl at a time."""
    if int(k) != k or k < 1:
        raise ValueError(f"curl power must be a positive integer, got {k!r}")
    backend = _resolve(backend, F.grid)
    out = F.values
    for _ in range(int(k)):
        out = _curl_array(out, F.grid, backend)
    return VectorField(F.grid, out)


def gradient_tensor(u: VectorField, backend=None) -> np.ndarray:
    """Array ``G`` of shape (3, 3, nx, ny, nz) with ``G[i, j] = d u_i / d x_j``."""
    backend = _resolve(backend, u.grid)
    return np.stack([np.stack(_partials(c, u.grid, backend)) for c in u.values])


def advect(u: VectorField, F: VectorField, backend=None) -> VectorField:
    """(u . grad) F;  spectral products are truncated with the 2/3 rule."""
    if u.grid != F.grid:
        raise ValueError("fields live on different grids")
    backend = _resolve(backend, u.grid)
    G = gradient_tensor(F, backend)
    out = np.einsum("j...,ij...->i...", u.values, G)
    if isinstance(backend, Spectral):
        out = sp.dealias(out, u.grid)
    return VectorField(u.grid, out)


def nonlinear_term(u: VectorField, nu: float, backend=None) -> VectorField:
    """(u . grad) u - nu * Laplacian(u)."""
    backend = _resolve(backend, u.grid)
    return advect(u, u, backend) - nu * laplacian(u, backend)
