"""Named checks of the identities, representations and inequalities on trajectories.

Every check is a pure function of its inputs and returns a
:class:`~helmns.report.CheckReport`.  Residuals are recorded per frame as
``(t, sup, l2)``; unless stated otherwise they are relative to the natural
magnitude of the quantity being checked.

Sign conventions
----------------
``phi`` is the integral potential of :mod:`helmns.helmholtz`, so the nonlinear
term is ``-grad(phi) + curl(Psi)`` and ``p - rho*phi`` is the combination that
is harmonic for solutions.  The curl of the advection term is checked in the
form that holds for solenoidal ``u``::

    curl((u . grad) u) = (u . grad) v - (v . grad) u,    v = curl(u)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import calculus as calc
from . import helmholtz as hh
from . import heat
from . import spectral as sp
from .flow import FlowState, Trajectory
from .grid import ScalarField, VectorField, norms
from .report import CheckReport

_TINY = 1e-300


def _require_periodic(traj: Trajectory) -> None:
    if not traj.grid.periodic:
        raise calc.BackendError("trajectory checks run on periodic grids")


def _rel(num: float, ref: float) -> float:
    return num / ref if ref > 0 else num


def _sup(a: np.ndarray) -> float:
    """Sup of the Euclidean point norm over the leading component axis (or |a| for scalars)."""
    if a.ndim == 4:
        return float(np.sqrt(np.max(np.sum(a * a, axis=0))))
    return float(np.max(np.abs(a)))


def _l2(a: np.ndarray, cell: float) -> float:
    return float(np.sqrt(np.sum(a * a) * cell))


def _time_derivative(frames: np.ndarray, times: np.ndarray) -> np.ndarray:
    """d/dt along axis 0: second-order centred inside, one-sided at the ends."""
    if len(times) < 2:
        return np.zeros_like(frames)
    edge = 2 if len(times) >= 3 else 1
    return np.gradient(frames, times, axis=0, edge_order=edge)


@dataclass(frozen=True)
class VorticityState:
    v: np.ndarray      # (F, 3, nx, ny, nz)
    dvdt: np.ndarray   # same shape, centred frame differences
    lapv: np.ndarray   # same shape
    times: np.ndarray


def vorticity_state(traj: Trajectory) -> VorticityState:
    _require_periodic(traj)
    v = np.stack([calc.curl(s.u, calc.SPECTRAL).values for s in traj.states])
    lapv = np.stack([calc.laplacian(VectorField(traj.grid, vv), calc.SPECTRAL).values for vv in v])
    times = traj.times
    return VorticityState(v, _time_derivative(v, times), lapv, times)


def _pressure_potential(state: FlowState, nu: float):
    f = calc.nonlinear_term(state.u, nu, calc.SPECTRAL)
    return f, hh.decompose(f, hh.HelmholtzBackend.SPECTRAL_POISSON)


# --- Helmholtz reconstruction -------------------------------------------------------------

def reconstruction_residuals(f: VectorField, parts: hh.HelmholtzParts) -> tuple[float, float]:
    """(sup, l2) of the worst of: reconstruction error, div(curl part), curl(grad part); relative to f."""
    ref_sup, ref_l2 = norms(f).sup, norms(f).l2
    rec = f.values - parts.reconstruct().values
    dv = calc.div(parts.curl_part).values
    cg = calc.curl(parts.grad_part).values
    cell = f.grid.cell_volume
    sup = max(_rel(_sup(rec), ref_sup), _rel(_sup(dv), ref_sup), _rel(_sup(cg), ref_sup))
    l2 = max(_rel(_l2(rec, cell), ref_l2), _rel(_l2(dv, cell), ref_l2), _rel(_l2(cg, cell), ref_l2))
    return sup, l2


def check_reconstruction(traj: Trajectory, tolerance: float = 1e-9) -> CheckReport:
    _require_periodic(traj)
    rep = CheckReport("check_reconstruction", tolerance)
    for s in traj.states:
        f, parts = _pressure_potential(s, traj.params.nu)
        rep.add(s.t, *reconstruction_residuals(f, parts))
    return rep.finalize()


# --- pressure / potential -----------------------------------------------------------------

def check_pressure_harmonic(traj: Trajectory, tolerance: float = 1e-6) -> CheckReport:
    """sup |lap(p - rho*phi)| relative to sup |lap p| at every frame."""
    _require_periodic(traj)
    rho = traj.params.rho
    rep = CheckReport("check_pressure_harmonic", tolerance)
    worst_spread = 0.0
    for s in traj.states:
        _, parts = _pressure_potential(s, traj.params.nu)
        q = s.p - rho * parts.phi
        lap_q = calc.laplacian(q).values
        lap_p = calc.laplacian(s.p).values
        rep.add(s.t, _rel(_sup(lap_q), _sup(lap_p)), _rel(_l2(lap_q, 1.0), _l2(lap_p, 1.0)))
        worst_spread = max(worst_spread, _rel(_sup(q.values - q.mean()), _sup(s.p.values)))
    rep.extras["worst_constant_spread"] = worst_spread
    rep.note(f"p - rho*phi spatial spread relative to sup|p|: {worst_spread:.3e}")
    return rep.finalize()


def check_gamma_consistency(traj: Trajectory, tolerance: float = 1e-6) -> CheckReport:
    """Compare Gamma(., t), built from t = 0 data, against p(., t) - rho*phi(., t).  Informational."""
    _require_periodic(traj)
    nu, rho = traj.params.nu, traj.params.rho
    s0 = traj.states[0]
    _, parts0 = _pressure_potential(s0, nu)
    ref = max(_sup(s0.p.values), _sup(rho * parts0.phi.values))
    rep = CheckReport("check_gamma_consistency", tolerance, informational=True)
    for s in traj.states:
        _, parts = _pressure_potential(s, nu)
        q = s.p - rho * parts.phi
        g = heat.gamma(s0.p, parts0.phi, rho, heat.HeatParams(nu, s.t))
        d = (g - q).values
        rep.add(s.t, _rel(_sup(d), ref), _rel(_l2(d, s.u.grid.cell_volume), ref))
    rep.finalize()
    rep.note("informational: the heat-semigroup evolution of p - rho*phi is the claim under test")
    return rep


# --- vorticity transport ------------------------------------------------------------------

def check_vorticity_transport(traj: Trajectory, tolerance_factor: float = 10.0) -> CheckReport:
    """dv/dt + curl((u.grad)u) - nu*lap(v) at interior frames, relative to max sup|v|.

    The tolerance is ``tolerance_factor * dT^2`` with dT the largest frame
    spacing, the size of the centred-difference error.
    """
    _require_periodic(traj)
    nu = traj.params.nu
    vs = vorticity_state(traj)
    spacing = float(np.max(np.diff(vs.times))) if len(vs.times) > 1 else traj.params.dt
    vscale = max(_sup(v) for v in vs.v)
    rep = CheckReport("check_vorticity_transport", tolerance_factor * spacing**2)
    if len(traj) < 3:
        rep.note("fewer than three frames: no centred time derivative available")
    for n in range(1, len(traj) - 1):
        u = traj.states[n].u
        c_adv = calc.curl(calc.advect(u, u, calc.SPECTRAL), calc.SPECTRAL).values
        r = vs.dvdt[n] + c_adv - nu * vs.lapv[n]
        rep.add(vs.times[n], _rel(_sup(r), vscale), _rel(_l2(r, u.grid.cell_volume), vscale))
    return rep.finalize()


# --- curl of the advection term -----------------------------------------------------------

def lemma1_sides(u: VectorField):
    """Return (curl((u.grad)u), (u.grad)v - (v.grad)u, natural scale)."""
    v = calc.curl(u, calc.SPECTRAL)
    lhs = calc.curl(calc.advect(u, u, calc.SPECTRAL), calc.SPECTRAL)
    uv = calc.advect(u, v, calc.SPECTRAL)
    vu = calc.advect(v, u, calc.SPECTRAL)
    gu = _sup(calc.gradient_tensor(u, calc.SPECTRAL).reshape((9,) + u.grid.shape))
    gv = _sup(calc.gradient_tensor(v, calc.SPECTRAL).reshape((9,) + u.grid.shape))
    scale = norms(u).sup * gv + norms(v).sup * gu
    return lhs, uv - vu, scale


def check_lemma1_identity(u: VectorField, tolerance: float = 1e-9, t: float = 0.0) -> CheckReport:
    if not u.grid.periodic:
        raise calc.BackendError("the curl-of-advection identity check is spectral and needs a periodic grid")
    rep = CheckReport("check_lemma1_identity", tolerance)
    lhs, rhs, scale = lemma1_sides(u)
    d = (lhs - rhs).values
    cell = u.grid.cell_volume
    rep.add(t, _rel(_sup(d), scale), _rel(_l2(d, cell), scale * math.sqrt(u.grid.volume)))
    flipped = _rel(_sup((lhs + rhs).values), scale)
    rep.extras["printed_sign_residual"] = flipped
    rep.note(f"residual with the opposite sign, (v.grad)u - (u.grad)v: {flipped:.3e}")
    return rep.finalize()


def check_lemma1_trajectory(traj: Trajectory, tolerance: float = 1e-9) -> CheckReport:
    rep = CheckReport("check_lemma1_identity", tolerance)
    worst_flip = 0.0
    for s in traj.states:
        r = check_lemma1_identity(s.u, tolerance, s.t)
        rep.residuals.extend(r.residuals)
        rep.masked.extend(r.masked)
        worst_flip = max(worst_flip, r.extras["printed_sign_residual"])
    rep.extras["printed_sign_residual"] = worst_flip
    rep.note(f"worst residual with the opposite sign: {worst_flip:.3e}")
    return rep.finalize()


# --- velocity representation and its degenerate limit -------------------------------------

def _gamma_series(traj: Trajectory) -> list[ScalarField]:
    nu, rho = traj.params.nu, traj.params.rho
    s0 = traj.states[0]
    _, parts0 = _pressure_potential(s0, nu)
    return [heat.gamma(s0.p, parts0.phi, rho, heat.HeatParams(nu, s.t)) for s in traj.states]


def _integrated_grad_gamma(traj: Trajectory) -> list[np.ndarray]:
    """Trapezoid-rule running integral of grad(Gamma) over the recorded frames."""
    grads = [calc.grad(g, calc.SPECTRAL).values for g in _gamma_series(traj)]
    out = [np.zeros_like(grads[0])]
    times = traj.times
    for n in range(1, len(grads)):
        out.append(out[-1] + 0.5 * (times[n] - times[n - 1]) * (grads[n] + grads[n - 1]))
    return out


def check_theorem1(traj: Trajectory, tolerance: float = 1e-6) -> CheckReport:
    """u - H(u) + (1/rho) Int_0^t grad(Gamma) ds  relative to sup|u(0)|."""
    _require_periodic(traj)
    rho = traj.params.rho
    ref = norms(traj.states[0].u).sup
    rep = CheckReport("check_theorem1", tolerance)
    igrad = _integrated_grad_gamma(traj)
    proj_part = 0.0
    for s, ig in zip(traj.states, igrad):
        hu = hh.h_operator(s.u, hh.HelmholtzBackend.SPECTRAL_POISSON)
        r = s.u.values - hu.values + ig / rho
        rep.add(s.t, _rel(_sup(r), ref), _rel(_l2(r, s.u.grid.cell_volume), ref * math.sqrt(s.u.grid.volume)))
        proj_part = max(proj_part, _rel(_sup(s.u.values - hu.values), ref))
    rep.extras["worst_u_minus_Hu"] = proj_part
    return rep.finalize()


def poincare_constant(grid) -> float:
    """C with sup|u| <= C sup|curl u| for zero-mean solenoidal fields on the grid.

    sup <= sqrt(N) rms,  rms(u) <= rms(curl u) / k_min,  rms <= sup.
    """
    kmin = min(2 * np.pi / L for L in grid.length)
    return math.sqrt(grid.size) / kmin


def check_corollary1(traj: Trajectory, eps: float = 1e-8) -> CheckReport:
    """Degenerate form on a periodic box: once curl u is below eps, u and the gradient form vanish."""
    _require_periodic(traj)
    grid = traj.grid
    C = poincare_constant(grid)
    rho = traj.params.rho
    rep = CheckReport("check_corollary1", eps * C)
    curl_sup = [norms(calc.curl(s.u, calc.SPECTRAL)).sup for s in traj.states]
    start = next((n for n, c in enumerate(curl_sup) if c <= eps), None)
    rep.extras["curl_sup"] = curl_sup
    if start is None:
        rep.applicable = False
        rep.passed = True
        rep.note(f"not applicable: sup|curl u| never drops below {eps:g} (min {min(curl_sup):.3e})")
        return rep
    igrad = _integrated_grad_gamma(traj)
    worst_form = 0.0
    for n in range(start, len(traj)):
        s = traj.states[n]
        form = -igrad[n] / rho
        worst_form = max(worst_form, _sup(form))
        rep.add(s.t, max(norms(s.u).sup, _sup(form)), _l2(s.u.values - form, grid.cell_volume))
    rep.extras["worst_gradient_form"] = worst_form
    rep.note(f"applicable from t={traj.states[start].t:g}; bound eps*C with C={C:.4g}")
    return rep.finalize()


# --- heat-propagated vorticity ------------------------------------------------------------

def check_theorem2(traj: Trajectory, k: int = 1, tolerance: float = 1e-6, gate_tolerance: float = 1e-8) -> CheckReport:
    """Gate on curl^k((u.grad)u) = 0, then check (a) curl^k u = xi and (b) u = H^k(xi).

    For (b), H acts as the vector potential ``1/(4 pi) Int curl(w)/|x-x'|``
    with no outer curl (an inverse curl on solenoidal fields), so ``k``
    applications carry ``xi ~ curl^k u`` back to ``u``.  The solenoidal-projection
    reading (outer curl) and the ``k + 1`` exponent are evaluated alongside and
    reported in ``extras``.
    """
    _require_periodic(traj)
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    nu, rho = traj.params.nu, traj.params.rho
    rep = CheckReport(f"check_theorem2", tolerance)
    rep.extras["k"] = k
    gate = []
    for s in traj.states:
        adv = calc.advect(s.u, s.u, calc.SPECTRAL)
        q = norms(calc.curl_k(adv, k, calc.SPECTRAL)).sup
        scale = norms(s.u).sup * norms(calc.curl_k(s.u, k, calc.SPECTRAL)).sup
        gate.append(_rel(q, scale))
    rep.extras["gate_series"] = gate
    rep.note("gate uses curl^k((u.grad)u) only; the viscous term's curl is not part of the gate")

    u0 = traj.states[0].u
    vk0 = calc.curl_k(u0, k, calc.SPECTRAL)
    ref_v = max(norms(vk0).sup, _TINY)
    ref_u = max(norms(u0).sup, _TINY)
    igrad = _integrated_grad_gamma(traj)
    sub_a, sub_b, proj_b, over_b = [], [], [], []
    for s, ig in zip(traj.states, igrad):
        params = heat.HeatParams(nu, s.t)
        xi = heat.xi(u0, k, params, heat.HeatBackend.SPECTRAL)
        vk = calc.curl_k(s.u, k, calc.SPECTRAL)
        sub_a.append(_rel(norms(vk - xi).sup, ref_v) if ref_v > _TINY else norms(vk - xi).sup)
        rep_u = hh.vector_potential_k(xi, k).values - ig / rho
        sub_b.append(_rel(_sup(s.u.values - rep_u), ref_u) if ref_u > _TINY else _sup(s.u.values - rep_u))
        proj_b.append(_rel(_sup(s.u.values - hh.h_k(xi, k).values), ref_u) if ref_u > _TINY else 0.0)
        over_b.append(_rel(_sup(s.u.values - hh.vector_potential_k(xi, k + 1).values), ref_u)
                      if ref_u > _TINY else 0.0)
    rep.extras["vorticity_vs_xi"] = sub_a
    rep.extras["u_vs_H_xi"] = sub_b
    rep.extras["u_vs_projection_H_xi"] = proj_b
    rep.extras["u_vs_H_k_plus_1_xi"] = over_b

    if max(gate) > gate_tolerance:
        rep.applicable = False
        rep.passed = True
        rep.note(f"not applicable: gate quantity {max(gate):.3e} exceeds {gate_tolerance:g}")
        return rep
    for s, a, b in zip(traj.states, sub_a, sub_b):
        rep.add(s.t, max(a, b), b)
    rep.note(f"(a) worst {max(sub_a):.3e}; (b) worst {max(sub_b):.3e}; "
             f"projection reading worst {max(proj_b):.3e}; H^(k+1) worst {max(over_b):.3e}")
    return rep.finalize()


# --- pointwise vorticity growth bounds ----------------------------------------------------

@dataclass(frozen=True)
class Theorem34Frame:
    violations: int
    worst_margin: float       # max over points of L - R (negative when satisfied)
    worst_excess: float       # max over points of L - R - tol, clipped at 0
    worst_index: tuple
    checked: int


def theorem34_frame(u: np.ndarray, v: np.ndarray, grad_u: np.ndarray, grad_v: np.ndarray, dvdt: np.ndarray,
                    lapv: np.ndarray, nu: float, time_err: np.ndarray | float = 0.0,
                    rel_tol: float = 1e-8) -> Theorem34Frame:
    """Pointwise test of  (1/4) dv_i/dt <= |v|^2 + |grad v_i|^2 + |u|^2 + |grad u_i|^2 [+ nu lap v_i if >= 0].

    ``grad_u[i, j] = d u_i / d x_j`` (same for ``grad_v``).  Arrays are per-frame.
    """
    usq = np.sum(u * u, axis=0)
    vsq = np.sum(v * v, axis=0)
    L = 0.25 * dvdt
    R = vsq[None] + np.sum(grad_v**2, axis=1) + usq[None] + np.sum(grad_u**2, axis=1)
    nl = nu * lapv
    R = R + np.where(nl >= 0, nl, 0.0)
    tol = rel_tol * (1 + np.abs(R)) + time_err
    margin = L - R
    excess = margin - tol
    bad = excess > 0
    idx = np.unravel_index(int(np.argmax(margin)), margin.shape)
    return Theorem34Frame(int(bad.sum()), float(margin.max()), float(max(excess.max(), 0.0)),
                          tuple(int(i) for i in idx), int(margin.size))


def monitor_theorem34(traj: Trajectory, rel_tol: float = 1e-8) -> CheckReport:
    """Monitor the growth bounds (with the Laplacian term where nu lap v_i >= 0, without it where < 0) at interior frames."""
    _require_periodic(traj)
    nu = traj.params.nu
    vs = vorticity_state(traj)
    rep = CheckReport("monitor_theorem34", 0.0)
    total = 0
    worst_margin = -math.inf
    locations = []
    for n in range(1, len(traj) - 1):
        u = traj.states[n].u
        v = VectorField(u.grid, vs.v[n])
        gu = calc.gradient_tensor(u, calc.SPECTRAL)
        gv = calc.gradient_tensor(v, calc.SPECTRAL)
        dt_lo = vs.times[n] - vs.times[n - 1]
        dt_hi = vs.times[n + 1] - vs.times[n]
        # second difference bounds the centred-difference error at this spacing
        second = np.abs(vs.v[n + 1] - 2 * vs.v[n] + vs.v[n - 1]) / max(dt_lo, dt_hi)
        fr = theorem34_frame(u.values, vs.v[n], gu, gv, vs.dvdt[n], vs.lapv[n], nu, 0.25 * second, rel_tol)
        total += fr.violations
        worst_margin = max(worst_margin, fr.worst_margin)
        if fr.violations:
            locations.append((float(vs.times[n]), fr.worst_index, fr.worst_margin))
        rep.add(vs.times[n], fr.worst_excess, max(fr.worst_margin, 0.0), masked=0)
    rep.extras.update(violations=total, worst_margin=worst_margin, locations=locations)
    rep.passed = total == 0
    rep.note(f"violations: {total}; worst margin L - R: {worst_margin:.3e}")
    if len(traj) < 3:
        rep.note("fewer than three frames: nothing monitored")
    return rep


# --- delta diagnostic and the lambda comparison -------------------------------------------

def delta_fields(u: VectorField, nu: float, eps_lap: float) -> dict[str, np.ndarray]:
    """g1..g4, delta and the validity mask, each shaped (3, nx, ny, nz) (one slab per component i).

    Points with |nu lap v_i| <= eps_lap are masked (mask False) and carry NaN.
    """
    v = calc.curl(u, calc.SPECTRAL)
    lap = nu * calc.laplacian(v, calc.SPECTRAL).values
    gu = calc.gradient_tensor(u, calc.SPECTRAL)
    gv = calc.gradient_tensor(v, calc.SPECTRAL)
    valid = np.abs(lap) > eps_lap
    denom = np.where(valid, lap, np.nan)
    nums = {
        "g1": np.broadcast_to(np.sum(v.values**2, axis=0), lap.shape),
        "g2": np.sum(gv**2, axis=1),
        "g3": np.broadcast_to(np.sum(u.values**2, axis=0), lap.shape),
        "g4": np.sum(gu**2, axis=1),
    }
    out = {name: num / denom for name, num in nums.items()}
    out["delta"] = out["g1"] + out["g2"] + out["g3"] + out["g4"] + 1.0
    out["mask"] = valid
    out["lap"] = lap
    return out


QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def _stats(a: np.ndarray) -> dict:
    if a.size == 0:
        return {"count": 0}
    q = np.quantile(a, QUANTILES)
    return {"count": int(a.size), "sup": float(np.max(np.abs(a))), "min": float(a.min()), "max": float(a.max()),
            "median": float(q[2]), "quantiles": dict(zip([str(x) for x in QUANTILES], map(float, q)))}


def delta_diagnostic(traj: Trajectory, eps_lap: float = 1e-6) -> CheckReport:
    """Time series of g_j and delta statistics; informational."""
    _require_periodic(traj)
    nu = traj.params.nu
    rep = CheckReport("delta_diagnostic", math.inf, informational=True)
    series = []
    trend = []
    for s in traj.states:
        d = delta_fields(s.u, nu, eps_lap)
        m = d["mask"]
        masked = int(m.size - m.sum())
        entry = {"t": s.t, "masked": masked}
        for name in ("g1", "g2", "g3", "g4", "delta"):
            entry[name] = _stats(d[name][m])
        pos = m & (d["lap"] > 0)
        entry["delta_positive_laplacian"] = _stats(d["delta"][pos])
        dist = np.abs(d["delta"][pos] - 1.0)
        trend.append(float(np.median(dist)) if dist.size else math.nan)
        series.append(entry)
        if m.any():
            rep.add(s.t, float(np.max(np.abs(d["delta"][m]))), float(np.median(d["delta"][m])), masked)
        else:
            rep.add(s.t, 0.0, 0.0, masked)
    rep.extras["series"] = series
    rep.extras["median_distance_to_one"] = trend
    finite = [(s["t"], x) for s, x in zip(series, trend) if np.isfinite(x) and x > 0]
    if len(finite) >= 2:
        t_arr, x_arr = np.array(finite).T
        slope = float(np.polyfit(t_arr, np.log(x_arr), 1)[0])
        rep.extras["log_distance_slope"] = slope
        rep.note(f"median |delta - 1| on positive-Laplacian points: log-slope {slope:.3e} per unit time")
    rep.passed = True
    rep.note("informational: no pass/fail criterion")
    return rep


def integrate_lambda(lam0: np.ndarray, delta_frames: list[np.ndarray], times: np.ndarray, grid,
                     dt_max: Optional[float] = None, dealias: bool = True,
                     stability: float = 1.9) -> tuple[list[np.ndarray], list[int]]:
    """Heun (RK2) integration of d(lambda)/dt = delta * lap(lambda), delta frozen on each frame interval.

    ``delta_frames[n]`` applies on ``[times[n], times[n+1])``.  Substeps are
    chosen for RK2 stability on the spectral Laplacian's largest eigenvalue
    and, when given, to respect ``dt_max``.  Returns lambda at every frame and
    the substep count used on each interval.
    """
    ksq = sp.ksquared(grid)
    mask = sp.dealias_mask(grid) if dealias else np.ones(ksq.shape, bool)
    lam_max = float(np.max(ksq[mask]))
    lam = np.array(lam0, dtype=np.float64)
    out = [lam.copy()]
    subs = []

    # lambda is carried as its spectrum: two FFTs per stage
    def rhs(xh, dfield):
        prod = sp.forward(dfield * sp.inverse(-ksq * xh, grid))
        return prod * mask if dealias else prod

    lam_h = sp.forward(lam)
    for n in range(len(times) - 1):
        span = times[n + 1] - times[n]
        dfield = delta_frames[n]
        dmax = float(np.max(dfield))
        nsub = max(1, math.ceil(span * dmax * lam_max / stability))
        if dt_max:
            nsub = max(nsub, math.ceil(span / dt_max))
        h = span / nsub
        for _ in range(nsub):
            k1 = rhs(lam_h, dfield)
            k2 = rhs(lam_h + h * k1, dfield)
            lam_h = lam_h + 0.5 * h * (k1 + k2)
        out.append(sp.inverse(lam_h, grid))
        subs.append(nsub)
    return out, subs


def lambda_compare(traj: Trajectory, eps_lap: float = 1e-6, clip: tuple[float, float] = (0.0, 1e3),
                   force_delta: Optional[float] = None, dt_max: Optional[float] = None) -> CheckReport:
    """Integrate the comparison PDE from lambda(., 0) = v(., 0) and compare with v; informational."""
    _require_periodic(traj)
    nu = traj.params.nu
    grid = traj.grid
    v = [calc.curl(s.u, calc.SPECTRAL).values for s in traj.states]
    deltas = []
    for s in traj.states[:-1]:
        if force_delta is not None:
            deltas.append(np.full((3,) + grid.shape, float(force_delta)))
            continue
        d = delta_fields(s.u, nu, eps_lap)
        dd = np.where(d["mask"], d["delta"], 1.0)
        deltas.append(np.clip(dd, clip[0], clip[1]))
    lam, subs = integrate_lambda(v[0], deltas, traj.times, grid, dt_max)
    rep = CheckReport("lambda_compare", math.inf, informational=True)
    above = 0
    pairs = 0
    worst = -math.inf
    for t, ln, vn in zip(traj.times, lam, v):
        deficit = vn - ln
        above += int(np.sum(ln >= vn))
        pairs += ln.size
        worst = max(worst, float(deficit.max()))
        rep.add(t, max(float(deficit.max()), 0.0), _l2(np.maximum(deficit, 0.0), grid.cell_volume))
    rep.extras.update(fraction_lambda_ge_v=above / pairs, worst_deficit=worst, substeps=subs,
                      clip=list(clip), lambda_final=lam[-1])
    rep.passed = True
    rep.note(f"fraction of (point, frame) pairs with lambda >= v: {above / pairs:.4f}; "
             f"worst deficit {worst:.3e}; delta clipped to [{clip[0]:g}, {clip[1]:g}], masked points use 1")
    if force_delta is not None:
        rep.note(f"delta forced to {force_delta:g}")
    return rep


# --- registry -----------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckSpec:
    name: str
    anchor: str
    informational: bool
    run: Callable[..., CheckReport]


REGISTRY: dict[str, CheckSpec] = {c.name: c for c in [
    CheckSpec("check_reconstruction", "Eq. 5", False, check_reconstruction),
    CheckSpec("check_pressure_harmonic", "Eq. 8", False, check_pressure_harmonic),
    CheckSpec("check_gamma_consistency", "Eq. 9", True, check_gamma_consistency),
    CheckSpec("check_vorticity_transport", "Eq. 12", False, check_vorticity_transport),
    CheckSpec("check_lemma1_identity", "Lemma 1", False, check_lemma1_trajectory),
    CheckSpec("check_theorem1", "Eq. 14", False, check_theorem1),
    CheckSpec("check_corollary1", "Corollary 1", False, check_corollary1),
    CheckSpec("check_theorem2", "Eq. 16–19", False, check_theorem2),
    CheckSpec("monitor_theorem34", "Eq. 25/28", False, monitor_theorem34),
    CheckSpec("delta_diagnostic", "Eq. 29–33", True, delta_diagnostic),
    CheckSpec("lambda_compare", "Eq. 31", True, lambda_compare),
]}
