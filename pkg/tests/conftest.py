import numpy as np
import pytest

from helmns import flow
from helmns import spectral as sp
from helmns.grid import ScalarField, VectorField

ACCEPTANCE_LINES: list[str] = []


def band_limited(grid, seed, ncomp=3, kmax=4):
    """Seeded random field with every |m_i| <= kmax, not projected."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((ncomp,) + grid.shape)
    keep = np.ones(sp.ksquared(grid).shape, bool)
    for kk, L in zip(sp.wavenumbers(grid), grid.length):
        keep &= np.abs(kk * L / (2 * np.pi)) <= kmax + 1e-9
    vals = sp.inverse(sp.forward(noise) * keep, grid)
    if ncomp == 1:
        return ScalarField(grid, vals[0])
    return VectorField(grid, vals)


@pytest.fixture(scope="session")
def box16():
    return flow.periodic_box(16)


@pytest.fixture(scope="session")
def box32():
    return flow.periodic_box(32)


@pytest.fixture(scope="session")
def tg16_traj(box16):
    params = flow.SimParams(nu=0.1, rho=1.0, dt=5e-3, steps=100)
    return flow.simulate(flow.ic_taylor_green(box16), params, snapshot_every=10)


@pytest.fixture(scope="session")
def tg32_traj(box32):
    params = flow.SimParams(nu=0.1, rho=1.0, dt=5e-3, steps=200)
    return flow.simulate(flow.ic_taylor_green(box32), params, snapshot_every=10)


@pytest.fixture(scope="session")
def random32_traj(box32):
    params = flow.SimParams(nu=0.1, rho=1.0, dt=5e-3, steps=200)
    u0 = flow.ic_random_solenoidal(box32, seed=7, kmax=3)
    return flow.simulate(u0, params, snapshot_every=10)


@pytest.fixture
def acceptance_line():
    def record(criterion: int, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
