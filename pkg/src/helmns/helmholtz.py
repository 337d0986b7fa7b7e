"""Helmholtz decomposition, the solenoidal projection H and its iterates.

Potentials follow the explicit integral representation

    phi(x) = 1/(4 pi) * Int div f(x') / |x - x'| dV'
    Psi(x) = 1/(4 pi) * Int curl f(x') / |x - x'| dV'

so that ``f = -grad(phi) + curl(Psi)``.  ``grad_part`` always stores the
irrotational piece itself (``-grad(phi)``), ``curl_part`` the solenoidal one.

Backends
--------
SPECTRAL_POISSON
    Periodic grids.  The potentials solve ``lap(phi) = -div f`` and
    ``lap(Psi) = -curl f`` mode by mode, with zero-mean gauge.  Modes that
    neither part can represent (the mean, and Nyquist-only modes whose
    derivative wavenumber vanishes) are returned as ``remainder``.
DIRECT_QUADRATURE
    Truncated-window grids.  The integrals above are evaluated by the midpoint
    rule over the window with the singular self-cell dropped.  Derivatives use
    fourth-order finite differences.
"""
from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft
from scipy.spatial.distance import cdist

from . import calculus as calc
from . import spectral as sp
from .grid import Grid3, ScalarField, VectorField, norms
from .report import CheckReport

DECAY_RATIO = 0.05


class HelmholtzBackend(enum.Enum):
    SPECTRAL_POISSON = "spectral"
    DIRECT_QUADRATURE = "quadrature"


class DecayWarning(UserWarning):
    """Field does not decay toward the edges of the quadrature window."""


@dataclass(frozen=True)
class HelmholtzParts:
    phi: ScalarField
    psi: VectorField
    grad_part: VectorField
    curl_part: VectorField
    remainder: VectorField
    decay_warning: bool = False

    def reconstruct(self) -> VectorField:
        return self.grad_part + self.curl_part + self.remainder


def _check_backend(grid: Grid3, backend: HelmholtzBackend) -> HelmholtzBackend:
    backend = HelmholtzBackend(backend)
    if backend is HelmholtzBackend.SPECTRAL_POISSON and not grid.periodic:
        raise calc.BackendError("SpectralPoisson needs a periodic grid")
    if backend is HelmholtzBackend.DIRECT_QUADRATURE and grid.periodic:
        raise calc.BackendError("DirectQuadrature needs a truncated-window grid")
    return backend


def _default(grid: Grid3) -> HelmholtzBackend:
    return HelmholtzBackend.SPECTRAL_POISSON if grid.periodic else HelmholtzBackend.DIRECT_QUADRATURE


# --- Newton potential on a window -------------------------------------------------

def _newton_kernel(grid: Grid3) -> np.ndarray:
    """h^3 / (4 pi r) on the doubled offset lattice, zero at r = 0 (dropped self-cell)."""
    axes = []
    for n, h in zip(grid.n, grid.spacing):
        off = np.arange(2 * n, dtype=np.float64)
        off[off >= n] -= 2 * n
        axes.append(off * h)
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(X * X + Y * Y + Z * Z)
    kern = np.zeros_like(r)
    kern[r > 0] = grid.cell_volume / (4 * np.pi * r[r > 0])
    return kern


def newton_potential(sources: np.ndarray, grid: Grid3, method: str = "fft") -> np.ndarray:
    """Midpoint sum  sum_{x' != x} s(x') h^3 / (4 pi |x - x'|)  for each leading-axis slice.

    ``method="fft"`` evaluates the sum as a zero-padded discrete convolution
    (the same finite sum, reordered); ``method="direct"`` sweeps output points
    in fixed-size chunks, each point's sum taken in the same source order.
    """
    src = np.asarray(sources, dtype=np.float64)
    squeeze = src.ndim == 3
    if squeeze:
        src = src[None]
    if method == "fft":
        kern_h = sfft.rfftn(_newton_kernel(grid), workers=sp.workers())
        pad = [(0, 0)] + [(0, n) for n in grid.n]
        src_h = sfft.rfftn(np.pad(src, pad), axes=(-3, -2, -1), workers=sp.workers())
        full = sfft.irfftn(src_h * kern_h, s=tuple(2 * n for n in grid.n), axes=(-3, -2, -1), workers=sp.workers())
        out = full[:, :grid.n[0], :grid.n[1], :grid.n[2]]
    elif method == "direct":
        pts = np.stack([a.ravel() for a in grid.mesh()], axis=1)
        flat = src.reshape(src.shape[0], -1).T
        out = np.empty_like(flat)
        chunk = 2048
        for start in range(0, len(pts), chunk):
            r = cdist(pts[start:start + chunk], pts)
            with np.errstate(divide="ignore"):
                w = np.where(r > 0, 1.0 / r, 0.0)
            out[start:start + chunk] = w @ flat
        out = (out * grid.cell_volume / (4 * np.pi)).T.reshape(src.shape)
    else:
        raise ValueError(f"unknown quadrature method {method!r}")
    return out[0] if squeeze else np.ascontiguousarray(out)


def decays_on_window(f: VectorField, shell: int = 1) -> bool:
    """True when the boundary-shell sup is at most 5 % of the interior sup."""
    mag = np.sqrt(np.sum(f.values**2, axis=0))
    inner = mag[shell:-shell, shell:-shell, shell:-shell]
    edge = mag.copy()
    edge[shell:-shell, shell:-shell, shell:-shell] = 0.0
    interior = float(inner.max()) if inner.size else 0.0
    return float(edge.max()) <= DECAY_RATIO * interior or float(edge.max()) == 0.0


# --- decomposition -------------------------------------------------------------------

def _spectral_parts(f: VectorField) -> HelmholtzParts:
    grid = f.grid
    fh = sp.forward(f.values)
    kd = sp.derivative_wavenumbers(grid)
    inv = sp.safe_inverse_ksq(sp.derivative_ksquared(grid))
    kdotf = kd[0] * fh[0] + kd[1] * fh[1] + kd[2] * fh[2]
    phi_h = 1j * kdotf * inv
    kxf = np.stack([kd[1] * fh[2] - kd[2] * fh[1], kd[2] * fh[0] - kd[0] * fh[2], kd[0] * fh[1] - kd[1] * fh[0]])
    psi_h = 1j * kxf * inv
    grad_h = np.stack([k * kdotf * inv for k in kd])
    curl_h = np.stack([
        1j * (kd[1] * psi_h[2] - kd[2] * psi_h[1]),
        1j * (kd[2] * psi_h[0] - kd[0] * psi_h[2]),
        1j * (kd[0] * psi_h[1] - kd[1] * psi_h[0]),
    ])
    rem_h = fh * (inv == 0)
    return HelmholtzParts(
        phi=ScalarField(grid, sp.inverse(phi_h, grid)),
        psi=VectorField(grid, sp.inverse(psi_h, grid)),
        grad_part=VectorField(grid, sp.inverse(grad_h, grid)),
        curl_part=VectorField(grid, sp.inverse(curl_h, grid)),
        remainder=VectorField(grid, sp.inverse(rem_h, grid)),
    )


def _quadrature_parts(f: VectorField, method: str) -> HelmholtzParts:
    grid = f.grid
    ok = decays_on_window(f)
    if not ok:
        warnings.warn("field does not decay toward the window edges; quadrature is truncated", DecayWarning,
                      stacklevel=3)
    d = calc.div(f, calc.FD4).values
    c = calc.curl(f, calc.FD4).values
    pots = newton_potential(np.concatenate([d[None], c]), grid, method)
    phi = ScalarField(grid, pots[0])
    psi = VectorField(grid, pots[1:])
    return HelmholtzParts(
        phi=phi,
        psi=psi,
        grad_part=-calc.grad(phi, calc.FD4),
        curl_part=calc.curl(psi, calc.FD4),
        remainder=VectorField.zeros(grid),
        decay_warning=not ok,
    )


def decompose(f: VectorField, backend=None, method: str = "fft") -> HelmholtzParts:
    backend = _check_backend(f.grid, backend or _default(f.grid))
    if backend is HelmholtzBackend.SPECTRAL_POISSON:
        return _spectral_parts(f)
    return _quadrature_parts(f, method)


def h_operator(v: VectorField, backend=None, method: str = "fft") -> VectorField:
    """Curl of the vector potential of ``v``: the solenoidal projection."""
    backend = _check_backend(v.grid, backend or _default(v.grid))
    grid = v.grid
    if backend is HelmholtzBackend.SPECTRAL_POISSON:
        vh = sp.forward(v.values)
        kd = sp.derivative_wavenumbers(grid)
        inv = sp.safe_inverse_ksq(sp.derivative_ksquared(grid))
        kdotv = kd[0] * vh[0] + kd[1] * vh[1] + kd[2] * vh[2]
        proj = np.stack([(vh[i] - kd[i] * kdotv * inv) * (inv > 0) for i in range(3)])
        return VectorField(grid, sp.inverse(proj, grid))
    if not decays_on_window(v):
        warnings.warn("field does not decay toward the window edges; quadrature is truncated", DecayWarning,
                      stacklevel=2)
    psi = newton_potential(calc.curl(v, calc.FD4).values, grid, method)
    return calc.curl(VectorField(grid, psi), calc.FD4)


def h_k(v: VectorField, k: int, backend=None, method: str = "fft") -> VectorField:
    if int(k) != k or k < 1:
        raise ValueError(f"H power must be a positive integer, got {k!r}")
    out = v
    for _ in range(int(k)):
        out = h_operator(out, backend, method)
    return out


def vector_potential(v: VectorField, backend=None, method: str = "fft") -> VectorField:
    """``1/(4 pi) Int curl v(x') / |x - x'| dV'`` with no outer curl.

    For a solenoidal, zero-mean ``v = curl(u)`` this returns the solenoidal
    part of ``u``; it inverts the curl.
    """
    backend = _check_backend(v.grid, backend or _default(v.grid))
    grid = v.grid
    if backend is HelmholtzBackend.SPECTRAL_POISSON:
        return _spectral_parts(v).psi
    return VectorField(grid, newton_potential(calc.curl(v, calc.FD4).values, grid, method))


def vector_potential_k(v: VectorField, k: int, backend=None, method: str = "fft") -> VectorField:
    if int(k) != k or k < 1:
        raise ValueError(f"power must be a positive integer, got {k!r}")
    out = v
    for _ in range(int(k)):
        out = vector_potential(out, backend, method)
    return out


# --- backend cross-validation ---------------------------------------------------------

def _half_cell_shift(values: np.ndarray, grid: Grid3) -> np.ndarray:
    """Trigonometric interpolation of periodic samples to the cell centres."""
    k = sp.wavenumbers(grid)
    kd = sp.derivative_wavenumbers(grid)
    h = grid.spacing
    phase = np.exp(1j * (k[0] * h[0] + k[1] * h[1] + k[2] * h[2]) / 2)
    # a half-cell shift of a Nyquist mode is not real-valued; drop those modes
    phase = phase * ((k[0] == kd[0]) & (k[1] == kd[1]) & (k[2] == kd[2]))
    return sp.inverse(sp.forward(values) * phase, grid)


@dataclass
class BackendComparison:
    report: CheckReport
    discrepancy: float
    runtime_spectral: float
    runtime_quadrature: float
    decay_warning: bool
    extras: dict = field(default_factory=dict)


def quadrature_vs_spectral_report(field_fn: Callable[[Grid3], VectorField], window_grid: Grid3,
                                  periodic_grid: Grid3, interior_fraction: float = 0.5,
                                  method: str = "fft") -> BackendComparison:
    """Run H on both backends for the same continuous field and compare in the interior.

    ``field_fn(grid)`` samples the field on a grid.  Both grids must share
    ``n`` and ``length``; the spectral result is shifted half a cell onto the
    window's cell centres before comparing.  The discrepancy is the interior
    sup difference relative to the interior sup of the window samples.
    """
    if window_grid.periodic or not periodic_grid.periodic:
        raise calc.BackendError("need one truncated-window grid and one periodic grid")
    if window_grid.n != periodic_grid.n or window_grid.length != periodic_grid.length:
        raise ValueError("window and periodic grids must share resolution and box size")
    fw = field_fn(window_grid)
    fp = field_fn(periodic_grid)
    t0 = time.perf_counter()
    hp = h_operator(fp, HelmholtzBackend.SPECTRAL_POISSON)
    t1 = time.perf_counter()
    warned = not decays_on_window(fw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DecayWarning)
        hq = h_operator(fw, HelmholtzBackend.DIRECT_QUADRATURE, method)
    t2 = time.perf_counter()
    hp_c = _half_cell_shift(hp.values, periodic_grid)
    n = np.array(window_grid.n)
    lo = np.floor(n * (1 - interior_fraction) / 2).astype(int)
    hi = n - lo
    sl = (slice(None),) + tuple(slice(a, b) for a, b in zip(lo, hi))
    diff = np.sqrt(np.sum((hp_c[sl] - hq.values[sl]) ** 2, axis=0))
    ref = float(np.max(np.sqrt(np.sum(fw.values[sl] ** 2, axis=0))))
    sup = float(diff.max()) / ref if ref > 0 else float(diff.max())
    l2 = float(np.sqrt(np.mean(diff**2))) / ref if ref > 0 else float(np.sqrt(np.mean(diff**2)))
    report = CheckReport(
        name="quadrature_vs_spectral",
        tolerance=float("inf"),
        informational=True,
        notes=(f"interior fraction {interior_fraction}; n={window_grid.n}; L={window_grid.length}"
               + ("; decay warning: field does not vanish at window edges" if warned else "")),
    )
    report.add(0.0, sup, l2)
    report.passed = True
    return BackendComparison(report, sup, t1 - t0, t2 - t1, warned,
                             {"sup_field": norms(fw).sup})
