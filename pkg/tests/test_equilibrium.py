import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from relaxlab.equilibrium import (cell_entropy_residuals, eo_flux, exact_riemann,
                                  kruzhkov_numerical_flux, solve_scalar)
from relaxlab.errors import CFLError, ModelError
from relaxlab.model import PSystemModel
from relaxlab.relax import Grid1D

BURGERS = PSystemModel.burgers(2.0, (-2, 2))
CUBIC = PSystemModel.polynomial((0, 0.1, -0.5, 1.0), 5.0, (-1, 1))


def eo_oracle(model, ul, ur):
    """Engquist-Osher flux by adaptive quadrature of max/min(f', 0)."""
    pos = lambda s: max(model.df(s), 0.0)
    neg = lambda s: min(model.df(s), 0.0)
    breaks = [b for b in model.speed_roots()]
    fp, _ = integrate.quad(pos, 0.0, ul, points=breaks or None, epsabs=1e-14, limit=200)
    fm, _ = integrate.quad(neg, 0.0, ur, points=breaks or None, epsabs=1e-14, limit=200)
    return fp + fm


def test_eo_flux_examples():
    assert eo_flux(BURGERS, 1.0, -1.0) == pytest.approx(1.0)
    lin = PSystemModel.linear(0.7, 1.0)
    assert eo_flux(lin, 0.3, -0.9) == pytest.approx(0.7 * 0.3)
    assert eo_flux(BURGERS, 0.6, 0.6) == pytest.approx(BURGERS.f(0.6))


@settings(max_examples=100)
@given(ul=st.floats(-1, 1), ur=st.floats(-1, 1))
def test_eo_flux_matches_quadrature_oracle(ul, ur):
    for m in (BURGERS, CUBIC):
        assert eo_flux(m, ul, ur) == pytest.approx(eo_oracle(m, ul, ur), abs=1e-12)


@settings(max_examples=100)
@given(u=st.floats(-1, 1))
def test_eo_flux_consistent(u):
    for m in (BURGERS, CUBIC):
        assert eo_flux(m, u, u) == pytest.approx(m.f(u), abs=1e-13)


@settings(max_examples=100)
@given(ul=st.floats(-1, 1), ur=st.floats(-1, 1), d=st.floats(0, 0.5))
def test_eo_flux_monotone(ul, ur, d):
    for m in (BURGERS, CUBIC):
        assert eo_flux(m, ul + d, ur) >= eo_flux(m, ul, ur) - 1e-14
        assert eo_flux(m, ul, ur + d) <= eo_flux(m, ul, ur) + 1e-14


def riemann_data(grid, ul, ur, x0=0.0):
    return np.where(grid.x < x0, ul, ur)[None]


def test_shock_front_position():
    grid = Grid1D(-1, 2, 600, "outflow")
    traj = solve_scalar(BURGERS, grid, None, riemann_data(grid, 1.0, 0.0), 1.0)
    u = traj.final.u[0]
    front = grid.x_lo + np.sum(u) * grid.dx  # mass balance locates the jump
    idx = np.argmin(np.abs(u - 0.5))
    assert abs(grid.x[idx] - 0.5) <= 2 * grid.dx
    assert abs(front - 0.5) <= 2 * grid.dx


def test_rarefaction_error_decays():
    errs = []
    for cells in (200, 400, 800):
        grid = Grid1D(-1, 2, cells, "outflow")
        u = solve_scalar(BURGERS, grid, None, riemann_data(grid, 0.0, 1.0), 1.0).final.u[0]
        exact = exact_riemann(BURGERS, 0.0, 1.0, grid.x / 1.0)
        errs.append(np.sum(np.abs(u - exact)) * grid.dx)
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= 0.5), rates


def test_constant_data_stays_constant():
    grid = Grid1D(0, 1, 32)
    u = solve_scalar(BURGERS, grid, None, np.full((2, 32), 0.4), 0.7).final.u
    np.testing.assert_array_equal(u, 0.4)


def test_exact_riemann_examples():
    assert exact_riemann(BURGERS, 1.0, 0.0, 0.49) == 1.0
    assert exact_riemann(BURGERS, 1.0, 0.0, 0.51) == 0.0
    assert exact_riemann(BURGERS, 0.0, 1.0, 0.5) == pytest.approx(0.5, abs=1e-14)
    np.testing.assert_array_equal(exact_riemann(BURGERS, 0.3, 0.3, np.linspace(-1, 1, 5)), 0.3)
    with pytest.raises(ModelError):
        exact_riemann(PSystemModel.polynomial((0, 0, 0, 1), 5.0), -1.0, 1.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["periodic", "outflow"]))
def test_discrete_max_principle(seed, bc):
    rng = np.random.default_rng(seed)
    grid = Grid1D(0, 1, 50, bc)
    u0 = rng.uniform(-1, 1, (2, 50))

    def watch(t, u, u_new, lam):
        assert u_new.min() >= u0.min() - 1e-12 and u_new.max() <= u0.max() + 1e-12

    solve_scalar(CUBIC, grid, None, u0, 0.3, observer=watch)


def test_l1_contraction_same_step():
    rng = np.random.default_rng(3)
    grid = Grid1D(0, 1, 64)
    u0 = rng.uniform(-1, 1, (1, 64))
    v0 = np.clip(u0 + rng.uniform(-0.3, 0.3, (1, 64)), -1, 1)
    v0[0, 0], u0[0, 1] = 1.0, -1.0  # both data span the same range, so same dt
    v0[0, 1], u0[0, 0] = -1.0, 1.0
    a = solve_scalar(BURGERS, grid, None, u0, 0.4, snapshot_times=np.linspace(0.02, 0.38, 19))
    b = solve_scalar(BURGERS, grid, None, v0, 0.4, snapshot_times=np.linspace(0.02, 0.38, 19))
    assert a.dt == b.dt
    d = [np.sum(np.abs(x.u - y.u)) for x, y in zip(a.snapshots, b.snapshots)]
    assert all(y <= x + 1e-12 for x, y in zip(d, d[1:]))


@pytest.mark.parametrize("model", [BURGERS, CUBIC])
def test_cell_entropy_inequalities(model):
    rng = np.random.default_rng(5)
    grid = Grid1D(0, 1, 80)
    u0 = rng.uniform(-1, 1, (3, 80))
    ks = np.linspace(-1, 1, 17)
    worst = [-np.inf]

    def watch(t, u, u_new, lam):
        for k in ks:
            worst[0] = max(worst[0], cell_entropy_residuals(model, u, u_new, lam, k, grid.bc).max())

    solve_scalar(model, grid, None, u0, 0.2, observer=watch)
    assert worst[0] <= 1e-12


def test_kruzhkov_flux_consistent():
    for k in (-0.5, 0.0, 0.3):
        for u in (-0.9, 0.1, 0.8):
            expected = np.sign(u - k) * (CUBIC.f(u) - CUBIC.f(k))
            assert kruzhkov_numerical_flux(CUBIC, u, u, k) == pytest.approx(expected, abs=1e-14)


def test_conservation_periodic():
    grid = Grid1D(0, 1, 100)
    u0 = (0.3 + 0.5 * np.sin(2 * np.pi * grid.x))[None]
    traj = solve_scalar(BURGERS, grid, None, u0, 0.5, snapshot_times=(0.1, 0.3))
    ints = np.array(traj.u_integrals)
    np.testing.assert_allclose(ints[:, 0], ints[0, 0], rtol=1e-13)


def test_bad_cfl():
    grid = Grid1D(0, 1, 8)
    with pytest.raises(CFLError):
        solve_scalar(BURGERS, grid, None, np.zeros((1, 8)), 0.1, cfl=1.5)


def test_fixed_speed_bound():
    grid = Grid1D(0, 1, 32)
    u0 = (0.3 * np.sin(2 * np.pi * grid.x))[None]
    traj = solve_scalar(BURGERS, grid, None, u0, 0.2, speed=1.0)
    assert traj.dt == pytest.approx(0.9 * grid.dx)
    with pytest.raises(CFLError):
        solve_scalar(BURGERS, grid, None, u0, 0.2, speed=0.1)
