import math

import numpy as np
import pytest
import sympy as sym
from hypothesis import given, settings, strategies as st

from helmns import calculus as calc
from helmns.grid import ScalarField, VectorField, make_grid, norms, sample_function

from conftest import band_limited
from oracles import ABC, TG, X, Y, Z, on_grid, s_advect, s_curl, s_div, s_grad, s_lap


def box(n=32):
    return make_grid((n,) * 3, (2 * math.pi,) * 3)


def sup(a):
    return float(np.max(np.abs(a)))


def test_stencil_weights_reproduce_classic_formulas():
    assert np.allclose(calc.stencil_weights((-1, 0, 1), 1), [-0.5, 0, 0.5])
    assert np.allclose(calc.stencil_weights((-2, -1, 0, 1, 2), 1), [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12])
    assert np.allclose(calc.stencil_weights((-1, 0, 1), 2), [1, -2, 1])


def test_grad_of_constant_is_zero():
    g = box(16)
    assert sup(calc.grad(ScalarField(g, np.full(g.shape, 3.0))).values) < 1e-13


def test_spectral_grad_sin_x():
    g = box()
    f = sample_function(g, lambda x, y, z: np.sin(x))
    gr = calc.grad(f, calc.SPECTRAL).values
    ref = on_grid(s_grad(sym.sin(X)), g)
    assert sup(gr - ref) <= 1e-12


@pytest.mark.parametrize("backend,expected", [(calc.FD2, 2.0), (calc.FD4, 4.0)])
@pytest.mark.parametrize("boundary", ["periodic", "window"])
def test_fd_convergence_order(backend, expected, boundary):
    expr = sym.sin(X) * sym.sin(Y) * sym.sin(Z)
    errs = []
    # the one-sided boundary stencils reach their asymptotic rate later
    for n in ((16, 32) if boundary == "periodic" else (32, 64)):
        g = make_grid((n,) * 3, (2 * math.pi,) * 3, boundary)
        f = ScalarField(g, on_grid(expr, g))
        errs.append(sup(calc.grad(f, backend).values - on_grid(s_grad(expr), g)))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(expected, abs=0.3)


def test_window_div_of_linear_field_vanishes():
    g = make_grid((8, 8, 8), (1, 1, 1), "window")
    x, y, _ = g.mesh()
    F = VectorField(g, [x, -y, np.zeros(g.shape)])
    assert sup(calc.div(F, calc.FD4).values) < 1e-12
    assert sup(calc.div(F, calc.FD2).values) < 1e-12


def test_spectral_rejected_on_window():
    g = make_grid((8, 8, 8), (1, 1, 1), "window")
    with pytest.raises(calc.BackendError):
        calc.grad(ScalarField.zeros(g), calc.SPECTRAL)


def test_taylor_green_div_curl_laplacian():
    g = box()
    u = VectorField(g, on_grid(TG, g))
    assert sup(calc.div(u).values) <= 1e-12
    assert sup(calc.curl(u).values - on_grid(s_curl(TG), g)) <= 1e-12
    assert sup(calc.laplacian(u).values + 2 * u.values) <= 1e-12
    assert sup(calc.curl_k(u, 1).values - on_grid(s_curl(TG), g)) <= 1e-12


def test_div_grad_is_laplacian():
    g = box()
    f = sample_function(g, lambda x, y, z: np.sin(x))
    assert sup(calc.div(calc.grad(f)).values + np.sin(g.mesh()[0])) <= 1e-12


def test_curl_k_two_is_minus_laplacian_on_solenoidal():
    from helmns.helmholtz import h_operator
    g = box(16)
    F = h_operator(band_limited(g, 3))
    lhs = calc.curl_k(F, 2).values
    assert sup(lhs + calc.laplacian(F).values) <= 1e-10 * sup(lhs)


def test_curl_k_rejects_nonpositive():
    g = box(8)
    with pytest.raises(ValueError):
        calc.curl_k(VectorField.zeros(g), 0)
    assert sup(calc.curl_k(VectorField.zeros(g), 3).values) == 0


def test_advect_taylor_green_symbolic():
    g = box()
    u = VectorField(g, on_grid(TG, g))
    ref = s_advect(TG, TG)
    assert sym.simplify(ref - sym.Matrix([-sym.sin(2 * X) / 2, -sym.sin(2 * Y) / 2, 0])) == sym.zeros(3, 1)
    assert sup(calc.advect(u, u).values - on_grid(ref, g)) <= 1e-12


def test_advect_constant_velocity():
    g = box()
    one = VectorField(g, [np.ones(g.shape), np.zeros(g.shape), np.zeros(g.shape)])
    F = VectorField(g, [np.sin(g.mesh()[0]), np.zeros(g.shape), np.zeros(g.shape)])
    assert sup(calc.advect(one, F).values[0] - np.cos(g.mesh()[0])) <= 1e-12


def test_nonlinear_term_taylor_green():
    g = box()
    u = VectorField(g, on_grid(TG, g))
    nu = sym.Rational(1, 10)
    ref = s_advect(TG, TG) - nu * TG.applyfunc(s_lap)
    assert sup(calc.nonlinear_term(u, 0.1).values - on_grid(ref, g)) <= 1e-12
    assert np.array_equal(calc.nonlinear_term(u, 0.0).values, calc.advect(u, u).values)


def test_gradient_tensor_layout():
    g = box(16)
    u = VectorField(g, on_grid(ABC, g))
    G = calc.gradient_tensor(u)
    # d u_x / d z = cos z
    assert sup(G[0, 2] - np.cos(g.mesh()[2])) <= 1e-12
    assert sup(G[0, 0]) <= 1e-12


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_vector_identities_random_fields(seed):
    g = box(16)
    F = band_limited(g, seed)
    f = band_limited(g, seed + 1, ncomp=1)
    scale_F = norms(F).sup
    assert sup(calc.div(calc.curl(F)).values) <= 1e-11 * max(scale_F, 1)
    assert sup(calc.curl(calc.grad(f)).values) <= 1e-11 * max(norms(f).sup, 1)


def test_fd_identities_window_interior():
    # div curl vanishes identically for centred periodic FD as well
    g = make_grid((16,) * 3, (2 * math.pi,) * 3)
    F = band_limited(g, 5)
    for b in (calc.FD2, calc.FD4):
        assert sup(calc.div(calc.curl(F, b), b).values) <= 1e-11 * norms(F).sup
