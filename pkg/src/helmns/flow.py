"""Pseudo-spectral incompressible Navier-Stokes stepper and bundled initial conditions.

The scheme is the classical integrating-factor RK4: viscous decay is applied
exactly as ``exp(-nu |k|^2 dt)`` per mode, and the Leray-projected, 2/3-rule
dealiased advection term is advanced explicitly.  Pressure is not part of the
state; it is recovered from the velocity by :func:`pressure_solve`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import helmholtz
from . import spectral as sp
from .grid import Grid3, ScalarField, VectorField, make_grid, norms

log = logging.getLogger(__name__)

CFL_LIMIT = 0.5


class SimulationError(RuntimeError):
    """Stepping aborted (CFL violation or non-finite state)."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class CFLError(SimulationError):
    pass


def periodic_box(n: int = 32, length: float = 2 * np.pi) -> Grid3:
    return make_grid((n, n, n), (length, length, length), "periodic")


# --- initial conditions -------------------------------------------------------

def ic_taylor_green(grid: Grid3) -> VectorField:
    x, y, _ = grid.mesh()
    return VectorField(grid, [np.cos(x) * np.sin(y), -np.sin(x) * np.cos(y), np.zeros(grid.shape)])


def ic_abc(grid: Grid3, A: float = 1.0, B: float = 1.0, C: float = 1.0) -> VectorField:
    x, y, z = grid.mesh()
    return VectorField(grid, [
        A * np.sin(z) + C * np.cos(y),
        B * np.sin(x) + A * np.cos(z),
        C * np.sin(y) + B * np.cos(x),
    ])


def ic_gaussian_vortex(grid: Grid3, center: Optional[Sequence[float]] = None, scale: float = 0.5,
                       strength: float = 1.0, project: Optional[bool] = None) -> VectorField:
    """u = curl(psi e_z) with psi = strength * scale * exp(-|x - c|^2 / (2 scale^2)).

    The curl is taken analytically.  On periodic grids the samples are
    Leray-projected by default so the field is discretely solenoidal despite
    the Gaussian not being periodic.
    """
    if not scale > 0:
        raise ValueError(f"vortex scale must be positive, got {scale}")
    if center is None:
        center = [L / 2 for L in grid.length]
    x, y, z = grid.mesh()
    dx, dy, dz = x - center[0], y - center[1], z - center[2]
    psi = strength * scale * np.exp(-(dx * dx + dy * dy + dz * dz) / (2 * scale * scale))
    u = VectorField(grid, [-dy / scale**2 * psi, dx / scale**2 * psi, np.zeros(grid.shape)])
    if project is None:
        project = grid.periodic
    if project:
        u = helmholtz.h_operator(u)
    return u


def ic_random_solenoidal(grid: Grid3, seed: int = 0, kmax: int = 4, amplitude: float = 1.0) -> VectorField:
    """Seeded band-limited solenoidal field, zero mean, scaled to sup-norm ``amplitude``.

    Modes with any |m_i| > kmax are removed, as are modes outside the 2/3
    dealiasing band, so products of two such fields are computed alias-free.
    """
    if not grid.periodic:
        raise ValueError("random solenoidal fields are defined on periodic grids")
    if int(kmax) < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3,) + grid.shape)
    nh = sp.forward(noise)
    k = sp.wavenumbers(grid)
    keep = sp.dealias_mask(grid).copy()
    for kk, L in zip(k, grid.length):
        keep &= np.abs(kk * L / (2 * np.pi)) <= kmax + 1e-9
    u = VectorField(grid, sp.inverse(nh * keep, grid))
    u = helmholtz.h_operator(u)
    return u * (amplitude / norms(u).sup)


INITIAL_CONDITIONS = {
    "taylor_green": ic_taylor_green,
    "abc": ic_abc,
    "gaussian_vortex": ic_gaussian_vortex,
    "random_solenoidal": ic_random_solenoidal,
}


# --- state types ---------------------------------------------------------------

@dataclass(frozen=True)
class FlowState:
    u: VectorField
    p: ScalarField
    t: float


@dataclass(frozen=True)
class SimParams:
    nu: float = 0.1
    rho: float = 1.0
    dt: float = 5e-3
    steps: int = 0
    dealias: bool = True

    def __post_init__(self):
        if not self.nu > 0 or not self.rho > 0 or not self.dt > 0:
            raise ValueError(f"nu, rho and dt must be positive (nu={self.nu}, rho={self.rho}, dt={self.dt})")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a non-negative integer, got {self.steps}")


@dataclass(frozen=True)
class Trajectory:
    params: SimParams
    states: tuple[FlowState, ...]
    snapshot_every: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> Grid3:
        return self.states[0].u.grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def __len__(self):
        return len(self.states)


# --- solver --------------------------------------------------------------------

def _advect_hat(uh: np.ndarray, grid: Grid3, dealias: bool) -> np.ndarray:
    """Spectrum of (u . grad) u from the velocity spectrum."""
    kd = sp.derivative_wavenumbers(grid)
    u = sp.inverse(uh, grid)
    grads = sp.inverse(1j * np.stack([np.stack([k * uh[i] for k in kd]) for i in range(3)]), grid)
    prod = np.einsum("j...,ij...->i...", u, grads)
    ph = sp.forward(prod)
    if dealias:
        ph = ph * sp.dealias_mask(grid)
    return ph


def _leray(fh: np.ndarray, grid: Grid3) -> np.ndarray:
    kd = sp.derivative_wavenumbers(grid)
    inv = sp.safe_inverse_ksq(sp.derivative_ksquared(grid))
    kdotf = kd[0] * fh[0] + kd[1] * fh[1] + kd[2] * fh[2]
    return np.stack([(fh[i] - kd[i] * kdotf * inv) * (inv > 0) for i in range(3)])


def pressure_solve(u: VectorField, rho: float = 1.0, dealias: bool = True) -> ScalarField:
    """Zero-mean solution of lap(p) = -rho * div((u . grad) u)."""
    grid = u.grid
    if not grid.periodic:
        raise ValueError("pressure_solve works on periodic grids")
    ah = _advect_hat(sp.forward(u.values), grid, dealias)
    kd = sp.derivative_wavenumbers(grid)
    inv = sp.safe_inverse_ksq(sp.derivative_ksquared(grid))
    ph = rho * 1j * (kd[0] * ah[0] + kd[1] * ah[1] + kd[2] * ah[2]) * inv
    return ScalarField(grid, sp.inverse(ph, grid))


def cfl_number(u: VectorField, dt: float) -> float:
    return dt * norms(u).sup / min(u.grid.spacing)


def _rhs(uh, grid, dealias):
    # P[(u.grad)u] = -P[u x curl u]: the gradient of |u|^2/2 is projected out
    kx, ky, kz = sp.derivative_wavenumbers(grid)
    wh = 1j * np.stack([ky * uh[2] - kz * uh[1], kz * uh[0] - kx * uh[2], kx * uh[1] - ky * uh[0]])
    both = sp.inverse(np.concatenate([uh, wh]), grid)
    u, w = both[:3], both[3:]
    lamb = np.stack([u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]])
    lh = sp.forward(lamb)
    if dealias:
        lh = lh * sp.dealias_mask(grid)
    return _leray(lh, grid)


def _rk4_step(uh: np.ndarray, grid: Grid3, params: SimParams) -> np.ndarray:
    dt = params.dt
    ksq = sp.ksquared(grid)
    E = np.exp(-params.nu * ksq * dt)
    E2 = np.exp(-params.nu * ksq * dt / 2)
    k1 = _rhs(uh, grid, params.dealias)
    k2 = _rhs(E2 * (uh + 0.5 * dt * k1), grid, params.dealias)
    k3 = _rhs(E2 * uh + 0.5 * dt * k2, grid, params.dealias)
    k4 = _rhs(E * uh + dt * E2 * k3, grid, params.dealias)
    return E * uh + dt / 6 * (E * k1 + 2 * E2 * (k2 + k3) + k4)


def _check_cfl(u_values: np.ndarray, grid: Grid3, dt: float, step: int) -> None:
    speed = float(np.sqrt(np.max(np.sum(u_values**2, axis=0))))
    c = dt * speed / min(grid.spacing)
    if c > CFL_LIMIT:
        raise CFLError(f"CFL number {c:.3g} exceeds {CFL_LIMIT} at step {step}", step)


def step(state: FlowState, params: SimParams) -> FlowState:
    """Advance one time step; pressure is recomputed at the new time."""
    grid = state.u.grid
    _check_cfl(state.u.values, grid, params.dt, 0)
    u = _advance(sp.forward(state.u.values), grid, params, 0)
    return FlowState(u, pressure_solve(u, params.rho, params.dealias), state.t + params.dt)


def _advance(uh, grid, params, index) -> VectorField:
    new = sp.inverse(_rk4_step(uh, grid, params), grid)
    if not np.all(np.isfinite(new)):
        raise SimulationError(f"non-finite velocity after step {index}", index)
    return VectorField(grid, new)


def simulate(u0: VectorField, params: SimParams, snapshot_every: int = 1) -> Trajectory:
    """Run ``params.steps`` steps, recording t = 0, every ``snapshot_every``-th step, and the end."""
    if not u0.grid.periodic:
        raise ValueError("the flow solver runs on periodic grids")
    if snapshot_every < 1:
        raise ValueError(f"snapshot_every must be >= 1, got {snapshot_every}")
    grid = u0.grid
    states = [FlowState(u0, pressure_solve(u0, params.rho, params.dealias), 0.0)]
    u = u0
    for n in range(params.steps):
        _check_cfl(u.values, grid, params.dt, n)
        u = _advance(sp.forward(u.values), grid, params, n)
        if (n + 1) % snapshot_every == 0 or n + 1 == params.steps:
            t = (n + 1) * params.dt
            states.append(FlowState(u, pressure_solve(u, params.rho, params.dealias), t))
            log.debug("step %d t=%.4f energy=%.6e", n + 1, t, norms(u).energy)
    return Trajectory(params, tuple(states), snapshot_every)


def with_steps(params: SimParams, t_end: float) -> SimParams:
    return replace(params, steps=int(round(t_end / params.dt)))
