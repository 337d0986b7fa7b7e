import math

import numpy as np
import pytest
import sympy as sym

from helmns import calculus as calc
from helmns import flow
from helmns.grid import VectorField, make_grid, norms

from oracles import ABC, TG, X, Y, on_grid, s_advect, s_div


def sup(a):
    return float(np.max(np.abs(a)))


@pytest.mark.parametrize("name", sorted(flow.INITIAL_CONDITIONS))
def test_initial_conditions_solenoidal(box16, name):
    u = flow.INITIAL_CONDITIONS[name](box16)
    assert sup(calc.div(u).values) <= 1e-12 * max(norms(u).sup, 1)


def test_taylor_green_matches_symbolic(box16):
    assert sup(flow.ic_taylor_green(box16).values - on_grid(TG, box16)) <= 1e-15
    assert sym.simplify(s_div(ABC)) == 0


def test_random_solenoidal_deterministic(box16):
    a = flow.ic_random_solenoidal(box16, seed=5)
    b = flow.ic_random_solenoidal(box16, seed=5)
    c = flow.ic_random_solenoidal(box16, seed=6)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert norms(a).sup == pytest.approx(1.0, rel=1e-14)


def test_gaussian_vortex_rejects_bad_scale(box16):
    with pytest.raises(ValueError):
        flow.ic_gaussian_vortex(box16, scale=0.0)


def test_pressure_taylor_green(box16):
    u = flow.ic_taylor_green(box16)
    p = flow.pressure_solve(u, rho=2.0)
    ref = on_grid(-2 * (sym.cos(2 * X) + sym.cos(2 * Y)) / 4, box16)
    assert sup(p.values - ref) <= 1e-10
    assert sup(flow.pressure_solve(VectorField.zeros(box16)).values) == 0


def test_pressure_abc_residual(box16):
    u = flow.ic_abc(box16)
    p = flow.pressure_solve(u)
    rhs = -calc.div(calc.advect(u, u)).values
    assert sup(calc.laplacian(p).values - rhs) <= 1e-9


def test_one_step_taylor_green(box16):
    u0 = flow.ic_taylor_green(box16)
    params = flow.SimParams(nu=0.1, dt=0.01)
    s = flow.step(flow.FlowState(u0, flow.pressure_solve(u0), 0.0), params)
    assert sup(s.u.values - math.exp(-0.2 * 0.01) * u0.values) <= 1e-10 * norms(u0).sup
    assert s.t == pytest.approx(0.01)


def test_zero_flow_fixed_point(box16):
    z = VectorField.zeros(box16)
    traj = flow.simulate(z, flow.SimParams(steps=3))
    assert all(sup(s.u.values) == 0 for s in traj.states)


def test_steps_zero(box16):
    u0 = flow.ic_taylor_green(box16)
    traj = flow.simulate(u0, flow.SimParams(steps=0))
    assert len(traj) == 1
    assert np.array_equal(traj.states[0].u.values, u0.values)
    assert sup(traj.states[0].p.values - flow.pressure_solve(u0).values) == 0


def test_snapshot_schedule(box16):
    traj = flow.simulate(flow.ic_taylor_green(box16), flow.SimParams(dt=0.01, steps=7), snapshot_every=3)
    assert list(np.round(traj.times, 12)) == [0.0, 0.03, 0.06, 0.07]


def test_random_stays_solenoidal_and_dissipates(box16):
    u0 = flow.ic_random_solenoidal(box16, seed=2, kmax=3)
    traj = flow.simulate(u0, flow.SimParams(nu=0.05, dt=0.01, steps=30), snapshot_every=1)
    energy = [norms(s.u).energy for s in traj.states]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(energy, energy[1:]))
    assert max(sup(calc.div(s.u).values) for s in traj.states) <= 1e-10


def test_cfl_violation_aborts_at_step_zero(box16):
    u0 = flow.ic_taylor_green(box16) * 10.0
    with pytest.raises(flow.CFLError) as info:
        flow.simulate(u0, flow.SimParams(dt=0.1, steps=5))
    assert info.value.step == 0


def test_simulation_deterministic(box16):
    u0 = flow.ic_random_solenoidal(box16, seed=9)
    p = flow.SimParams(steps=10)
    a = flow.simulate(u0, p, 5)
    b = flow.simulate(u0, p, 5)
    assert all(np.array_equal(x.u.values, y.u.values) for x, y in zip(a.states, b.states))


def test_window_grid_rejected():
    g = make_grid((8,) * 3, (1,) * 3, "window")
    with pytest.raises(ValueError):
        flow.simulate(VectorField.zeros(g), flow.SimParams())


def test_rk4_fourth_order(box16):
    # TG is integrated exactly by the integrating factor, so use a random field
    u0 = flow.ic_random_solenoidal(box16, seed=3, kmax=3)
    T = 0.4

    def final(dt):
        tr = flow.simulate(u0, flow.SimParams(nu=0.1, dt=dt, steps=round(T / dt)), 10**6)
        return tr.states[-1].u.values

    ref = final(T / 512)
    errs = [sup(final(dt) - ref) for dt in (0.1, 0.05, 0.025)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(rates - 4) <= 0.5)
