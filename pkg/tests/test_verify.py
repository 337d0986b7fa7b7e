import math

import numpy as np
import pytest
import sympy as sym
from hypothesis import given, settings, strategies as st

from helmns import calculus as calc
from helmns import flow
from helmns import verify
from helmns.flow import FlowState, Trajectory
from helmns.grid import ScalarField, VectorField, norms

from oracles import TG, X, Y, Z, NU, T, on_grid, s_curl, s_jacobian, s_lap


def sup(a):
    return float(np.max(np.abs(a)))


@pytest.fixture(scope="module")
def zero_traj(box16):
    return flow.simulate(VectorField.zeros(box16), flow.SimParams(steps=4), 1)


@pytest.fixture(scope="module")
def abc_traj(box16):
    return flow.simulate(flow.ic_abc(box16), flow.SimParams(steps=20), 5)


def polluted(traj, amplitude=0.1):
    g = traj.grid
    x, y, _ = g.mesh()
    bump = VectorField(g, [amplitude * np.cos(x + y), amplitude * np.cos(x + y), np.zeros(g.shape)])
    states = tuple(FlowState(s.u + bump, s.p, s.t) for s in traj.states)
    return Trajectory(traj.params, states, traj.snapshot_every)


@pytest.mark.parametrize("name", [n for n in verify.REGISTRY if n != "lambda_compare"])
def test_every_check_passes_on_zero_flow(zero_traj, name):
    rep = verify.REGISTRY[name].run(zero_traj)
    assert rep.passed
    assert rep.worst_sup == 0.0 or rep.informational


def test_zero_flow_degenerate_limit_applies(zero_traj):
    rep = verify.check_corollary1(zero_traj)
    assert rep.applicable and rep.passed


def test_taylor_green_checks(tg16_traj):
    for name in ("check_reconstruction", "check_pressure_harmonic", "check_vorticity_transport",
                 "check_lemma1_identity", "check_theorem1", "check_theorem2", "monitor_theorem34"):
        rep = verify.REGISTRY[name].run(tg16_traj)
        assert rep.passed, (name, rep.notes)
    cor = verify.check_corollary1(tg16_traj)
    assert not cor.applicable


def test_pressure_minus_potential_constant_on_taylor_green(tg16_traj):
    rep = verify.check_pressure_harmonic(tg16_traj)
    assert rep.extras["worst_constant_spread"] <= 1e-9


def test_gamma_consistency_taylor_green(tg16_traj):
    rep = verify.check_gamma_consistency(tg16_traj)
    assert rep.informational
    assert rep.worst_sup <= 1e-6


def test_pressure_harmonic_abc(abc_traj):
    rep = verify.check_pressure_harmonic(abc_traj)
    assert rep.residuals[0][1] <= 1e-8


def test_reconstruction_negative_control(tg16_traj):
    bad = polluted(tg16_traj)
    s0 = bad.states[0]
    f, parts = verify._pressure_potential(s0, 0.1)
    broken = type(parts)(parts.phi, parts.psi, parts.grad_part * 1.1, parts.curl_part, parts.remainder)
    sup_r, _ = verify.reconstruction_residuals(f, broken)
    assert sup_r > 1e-3


def test_vorticity_transport_second_order(box16):
    u0 = flow.ic_random_solenoidal(box16, seed=1, kmax=2)
    res = []
    for every in (8, 4):
        tr = flow.simulate(u0, flow.SimParams(dt=5e-3, steps=48), every)
        res.append(verify.check_vorticity_transport(tr).worst_sup)
    assert math.log2(res[0] / res[1]) == pytest.approx(2.0, abs=0.3)


def test_lemma1_identity_sign(box16):
    u = flow.ic_random_solenoidal(box16, seed=4)
    rep = verify.check_lemma1_identity(u)
    assert rep.passed
    assert rep.extras["printed_sign_residual"] > 1e-2


def test_lemma1_taylor_green_sides_vanish(box16):
    lhs, rhs, _ = verify.lemma1_sides(flow.ic_taylor_green(box16))
    assert sup(lhs.values) <= 1e-12 and sup(rhs.values) <= 1e-12


def test_lemma1_abc_sides_vanish(box16):
    # ABC is a curl eigenfunction: u x curl u = 0, so both sides are zero
    lhs, rhs, scale = verify.lemma1_sides(flow.ic_abc(box16))
    assert sup(lhs.values) <= 1e-12 * scale and sup(rhs.values) <= 1e-12 * scale


def test_theorem1_negative_control(tg16_traj):
    rep = verify.check_theorem1(polluted(tg16_traj))
    assert not rep.passed
    assert rep.worst_sup >= 1e-2


def test_corollary1_decayed_taylor_green():
    box = flow.periodic_box(8)
    tr = flow.simulate(flow.ic_taylor_green(box), flow.SimParams(nu=1.0, dt=0.05, steps=220), 20)
    rep = verify.check_corollary1(tr)
    assert rep.applicable and rep.passed
    assert rep.tolerance == pytest.approx(1e-8 * math.sqrt(512))


def test_theorem2_taylor_green_extras(tg16_traj):
    rep = verify.check_theorem2(tg16_traj, k=1)
    assert rep.applicable and rep.passed
    assert max(rep.extras["vorticity_vs_xi"]) <= 1e-6
    assert max(rep.extras["u_vs_H_xi"]) <= 1e-6
    # the projection reading maps vorticity to vorticity, not to u
    assert max(rep.extras["u_vs_projection_H_xi"]) > 0.5


def test_theorem2_k2_taylor_green(tg16_traj):
    rep = verify.check_theorem2(tg16_traj, k=2)
    assert rep.passed


def test_theorem2_abc_gate_passes(abc_traj):
    # curl((u.grad)u) vanishes identically for Beltrami fields, so the gate opens
    rep = verify.check_theorem2(abc_traj, k=1)
    assert max(rep.extras["gate_series"]) <= 1e-12
    assert rep.applicable and rep.passed


def test_theorem2_random_gated(box16):
    tr = flow.simulate(flow.ic_random_solenoidal(box16, seed=2), flow.SimParams(steps=4), 2)
    rep = verify.check_theorem2(tr)
    assert not rep.applicable and rep.passed
    assert "not applicable" in rep.notes


def test_theorem2_rejects_bad_k(tg16_traj):
    with pytest.raises(ValueError):
        verify.check_theorem2(tg16_traj, k=0)


def _frame_arrays(u, nu):
    v = calc.curl(u)
    return (u.values, v.values, calc.gradient_tensor(u), calc.gradient_tensor(v),
            calc.laplacian(v).values)


@settings(max_examples=30, deadline=None)
@given(i=st.integers(0, 2), x=st.integers(0, 15), y=st.integers(0, 15), z=st.integers(0, 15),
       excess=st.floats(1e-6, 1e6))
def test_injected_violation_detected(box16, i, x, y, z, excess):
    u = flow.ic_random_solenoidal(box16, seed=0)
    uu, v, gu, gv, lapv = _frame_arrays(u, 0.1)
    dvdt = np.zeros_like(v)
    clean = verify.theorem34_frame(uu, v, gu, gv, dvdt, lapv, 0.1)
    assert clean.violations == 0
    # recompute the bound at the injection point and exceed it
    R = np.sum(v**2, axis=0) + np.sum(gv**2, axis=1)[i] + np.sum(uu**2, axis=0) + np.sum(gu**2, axis=1)[i]
    R = R + np.maximum(0.1 * lapv[i], 0.0)
    r = float(R[x, y, z])
    dvdt[i, x, y, z] = 4 * (r + 1e-8 * (1 + r)) + 4 * excess * (1 + r)
    hit = verify.theorem34_frame(uu, v, gu, gv, dvdt, lapv, 0.1)
    assert hit.violations == 1
    assert hit.worst_index == (i, x, y, z)


def test_theorem34_time_error_widens_tolerance(box16):
    u = flow.ic_taylor_green(box16)
    uu, v, gu, gv, lapv = _frame_arrays(u, 0.1)
    dvdt = np.full_like(v, 1e6)
    assert verify.theorem34_frame(uu, v, gu, gv, dvdt, lapv, 0.1).violations == v.size
    assert verify.theorem34_frame(uu, v, gu, gv, dvdt, lapv, 0.1, time_err=1e6).violations == 0


def test_monitor_abc_perturbed(box16):
    u0 = flow.ic_abc(box16) + flow.ic_random_solenoidal(box16, seed=3, amplitude=0.1)
    tr = flow.simulate(u0, flow.SimParams(steps=40), 4)
    rep = verify.monitor_theorem34(tr)
    assert rep.passed and rep.extras["violations"] == 0


def test_delta_closed_form_taylor_green(tg16_traj):
    nu = 0.1
    u_t = TG * sym.exp(-2 * NU * T)
    v = s_curl(u_t)
    lap = (v.applyfunc(s_lap) * NU)
    gu, gv = s_jacobian(u_t), s_jacobian(v)
    usq, vsq = (u_t.T * u_t)[0], (v.T * v)[0]
    g = tg16_traj.grid
    state = tg16_traj.states[3]
    d = verify.delta_fields(state.u, nu, 1e-6)
    ref_lap = on_grid(lap, g, nu=nu, t=state.t)
    i = 2
    comp = {
        "g1": vsq / lap[i], "g2": sum(gv[i, j] ** 2 for j in range(3)) / lap[i],
        "g3": usq / lap[i], "g4": sum(gu[i, j] ** 2 for j in range(3)) / lap[i],
    }
    rng = np.random.default_rng(0)
    pts = [tuple(p) for p in rng.integers(0, 16, size=(200, 3)) if abs(ref_lap[i][tuple(p)]) > 1e-3][:50]
    for name, expr in comp.items():
        vals = on_grid(sym.simplify(expr), g, nu=nu, t=state.t)
        for p in pts:
            assert d[name][(i,) + p] == pytest.approx(vals[p], rel=1e-8)
    assert not d["mask"][0].any() and not d["mask"][1].any()


def test_delta_infinite_threshold_masks_all(tg16_traj):
    rep = verify.delta_diagnostic(tg16_traj, eps_lap=math.inf)
    assert rep.masked_total == 3 * tg16_traj.grid.size * len(tg16_traj)
    assert rep.informational and rep.passed


def test_lambda_forced_unit_delta_matches_heat(tg16_traj):
    from helmns import heat
    short = Trajectory(tg16_traj.params, tg16_traj.states[:3], tg16_traj.snapshot_every)
    rep = verify.lambda_compare(short, force_delta=1.0, dt_max=5e-5)
    v0 = calc.curl(short.states[0].u)
    ref = heat.heat_propagate(v0, heat.HeatParams(1.0, short.times[-1]))
    assert sup(rep.extras["lambda_final"] - ref.values) <= 1e-8 * norms(v0).sup


def test_lambda_zero_flow(zero_traj):
    rep = verify.lambda_compare(zero_traj)
    assert sup(rep.extras["lambda_final"]) == 0


def test_checks_are_pure(tg16_traj):
    a = verify.check_theorem1(tg16_traj)
    b = verify.check_theorem1(tg16_traj)
    assert a.residuals == b.residuals


def test_registry_contents():
    assert len(verify.REGISTRY) == 11
    assert verify.REGISTRY["delta_diagnostic"].informational
    assert not verify.REGISTRY["check_theorem1"].informational
