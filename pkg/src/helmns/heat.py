"""Heat kernel, heat-semigroup propagation, and the Gamma / xi constructions.

Propagation solves ``dw/dt = nu * lap(w)`` up to time ``t``: the Gaussian
kernel is evaluated at diffusion time ``nu * t``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import calculus as calc
from . import spectral as sp
from .grid import Grid3, ScalarField, VectorField


class HeatBackend(enum.Enum):
    SPECTRAL = "spectral"
    DIRECT = "direct"


@dataclass(frozen=True)
class HeatParams:
    nu: float
    t: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got nu={self.nu}")
        if not self.t >= 0:
            raise ValueError(f"time must be non-negative, got t={self.t}")


def kernel_alpha(x, t: float):
    """Heat kernel (4 pi t)^(-3/2) exp(-|x|^2 / 4t).  ``x`` has trailing axis of length 3."""
    if not t > 0:
        raise ValueError(f"heat kernel needs t > 0, got t={t}")
    x = np.asarray(x, dtype=np.float64)
    r2 = np.sum(x * x, axis=-1)
    return (4 * np.pi * t) ** -1.5 * np.exp(-r2 / (4 * t))


def _resolve(backend, grid: Grid3) -> HeatBackend:
    if backend is None:
        return HeatBackend.SPECTRAL if grid.periodic else HeatBackend.DIRECT
    backend = HeatBackend(backend)
    if backend is HeatBackend.SPECTRAL and not grid.periodic:
        raise calc.BackendError("spectral heat propagation needs a periodic grid")
    if backend is HeatBackend.DIRECT and grid.periodic:
        raise calc.BackendError("direct heat quadrature needs a truncated-window grid")
    return backend


def _direct_matrices(grid: Grid3, s: float):
    # alpha factorises into 1-D Gaussians, so the 3-D midpoint sum is three 1-D sums
    mats = []
    for x, h in zip(grid.axes(), grid.spacing):
        d = x[:, None] - x[None, :]
        mats.append(h * (4 * np.pi * s) ** -0.5 * np.exp(-d * d / (4 * s)))
    return mats


def _propagate_array(values: np.ndarray, grid: Grid3, s: float, backend: HeatBackend) -> np.ndarray:
    """Propagate arrays whose last three axes are spatial, to diffusion time ``s = nu * t``."""
    if s == 0:
        return np.array(values, copy=True)
    if backend is HeatBackend.SPECTRAL:
        return sp.inverse(sp.forward(values) * np.exp(-sp.ksquared(grid) * s), grid)
    mx, my, mz = _direct_matrices(grid, s)
    out = np.einsum("ai,...ijk->...ajk", mx, values)
    out = np.einsum("bj,...ajk->...abk", my, out)
    return np.einsum("ck,...abk->...abc", mz, out)


def heat_propagate(f0, params: HeatParams, backend=None):
    backend = _resolve(backend, f0.grid)
    out = _propagate_array(f0.values, f0.grid, params.nu * params.t, backend)
    return type(f0)(f0.grid, out)


def gamma(pressure0: ScalarField, phi0: ScalarField, rho: float, params: HeatParams, backend=None) -> ScalarField:
    """Heat propagation of ``p(., 0) - rho * phi(., 0)``.

    ``phi0`` is the scalar potential of the nonlinear term at t = 0 in the
    integral convention of :mod:`helmns.helmholtz`.
    """
    if pressure0.grid != phi0.grid:
        raise ValueError("pressure and potential live on different grids")
    if not rho > 0:
        raise ValueError(f"density must be positive, got rho={rho}")
    return heat_propagate(pressure0 - rho * phi0, params, backend)


def xi(u0: VectorField, k: int, params: HeatParams, backend=None) -> VectorField:
    """Heat propagation, componentwise, of curl^k(u0)."""
    diff = calc.SPECTRAL if u0.grid.periodic else calc.FD4
    return heat_propagate(calc.curl_k(u0, k, diff), params, backend)
