import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaxlab.entropy import (Bump, dissipation_check, entropy_residual, extend_entropy,
                              kruzhkov_pair, polynomial_pair, residual_tolerance, square_pair)
from relaxlab.equilibrium import solve_scalar
from relaxlab.errors import ModelError, SupportError
from relaxlab.model import PSystemModel
from relaxlab.params import ParamSpace, build_quadrature
from relaxlab.relax import Grid1D, GridField, SolveConfig, solve

BURGERS = PSystemModel.burgers(2.0)
LINEAR = PSystemModel.linear(1.0, 2.0, (-2.0, 2.0))


def test_kruzhkov_examples():
    p = kruzhkov_pair(BURGERS, 0.0)
    assert (p.ell(2.0), p.q(2.0)) == (2.0, 2.0)
    p = kruzhkov_pair(BURGERS, 0.4)
    assert (p.ell(0.4), p.q(0.4)) == (0.0, 0.0)
    p = kruzhkov_pair(BURGERS, 1.0)
    assert (p.ell(-1.0), p.q(-1.0)) == (2.0, 0.0)


@settings(max_examples=50)
@given(u=st.floats(-1, 1), k=st.floats(-1, 1))
def test_kruzhkov_flux_derivative(u, k):
    # q' = l' f' away from the kink
    if abs(u - k) < 1e-3:
        return
    p = kruzhkov_pair(BURGERS, k)
    h = 1e-6
    dq = (p.q(u + h) - p.q(u - h)) / (2 * h)
    assert dq == pytest.approx(p.dell(u) * BURGERS.df(u), abs=1e-6)


def test_linear_extension_matches_closed_form():
    a, c = 2.0, 1.0
    pair = extend_entropy(LINEAR, square_pair(LINEAR), (-2.0, 2.0))
    s = np.linspace(pair.s_plus[0], pair.s_plus[1], 1001)
    np.testing.assert_allclose(pair.h(s), s**2 / (2 * a * (a + c)), atol=1e-8)
    s = np.linspace(pair.s_minus[0], pair.s_minus[1], 1001)
    np.testing.assert_allclose(pair.k(s), s**2 / (2 * a * (a - c)), atol=1e-8)
    assert pair.eta(1.0, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert pair.eta(1.0, 0.0) == pytest.approx(4 / 3, abs=1e-8)


def test_constant_entropy_extends_to_constant():
    pair = extend_entropy(BURGERS, polynomial_pair(BURGERS, (3.0,)))
    u = np.linspace(-0.5, 0.5, 11)
    np.testing.assert_allclose(pair.eta(u, BURGERS.f(u) + 0.1), 3.0, atol=1e-12)
    np.testing.assert_allclose(pair.flux(u, BURGERS.f(u)), 0.0, atol=1e-12)


@pytest.mark.parametrize("scalar", ["square", "quartic"])
def test_burgers_on_curve_identities(scalar):
    ell = square_pair(BURGERS) if scalar == "square" else polynomial_pair(BURGERS, (0, 0.3, 1, 0, 0.5))
    pair = extend_entropy(BURGERS, ell, (-1.0, 1.0))
    u = np.linspace(-1, 1, 2001)
    v = BURGERS.f(u)
    assert np.max(np.abs(pair.eta(u, v) - ell.ell(u))) <= 1e-8
    assert np.max(np.abs(pair.deta_dv(u, v))) <= 1e-6
    a = BURGERS.a
    assert np.max(np.abs(pair.dh(a * u + v) - ell.dell(u) / (2 * a))) <= 1e-8
    assert np.max(np.abs(pair.dk(a * u - v) - ell.dell(u) / (2 * a))) <= 1e-8
    # flux compatibility on the curve: Q(u, f(u)) = q(u) + const
    q = pair.flux(u, v) - ell.q(u)
    assert np.ptp(q) <= 1e-7


def test_hessian_positive_semidefinite():
    pair = extend_entropy(BURGERS, square_pair(BURGERS), (-1.5, 1.5))
    rng = np.random.default_rng(0)
    u = rng.uniform(-0.5, 0.5, 500)
    v = BURGERS.f(u) + rng.uniform(-0.3, 0.3, 500)
    huu, huv, hvv = pair.hessian(u, v)
    assert np.all(huu >= -1e-9) and np.all(hvv >= -1e-9)
    assert np.all(huu * hvv - huv**2 >= -1e-9)


def test_dissipation_positive():
    pair = extend_entropy(LINEAR, square_pair(LINEAR), (-2.0, 2.0))
    rng = np.random.default_rng(1)
    u = rng.uniform(-0.5, 0.5, 400)
    v = LINEAR.f(u) + rng.uniform(-0.5, 0.5, 400)
    chk = dissipation_check(pair, LINEAR, u, v)
    assert chk.ok and chk.gamma_est > 0
    burgers = extend_entropy(BURGERS, square_pair(BURGERS), (-1.5, 1.5))
    chk = dissipation_check(burgers, BURGERS, u, BURGERS.f(u) + rng.uniform(-0.3, 0.3, 400))
    assert chk.ok


def test_dissipation_ignores_on_curve_states():
    pair = extend_entropy(BURGERS, square_pair(BURGERS))
    u = np.linspace(-0.5, 0.5, 5)
    chk = dissipation_check(pair, BURGERS, u, BURGERS.f(u))
    assert chk.ok and chk.used == 0
    mixed = dissipation_check(pair, BURGERS, np.r_[u, 0.1], np.r_[BURGERS.f(u), 0.2])
    assert mixed.used == 1 and mixed.gamma_est > 0


def test_linear_gamma_closed_form():
    # eta = (au+v)^2/(2a(a+c)) + (au-v)^2/(2a(a-c)), differentiated by hand
    a, c = 2.0, 1.0
    pair = extend_entropy(LINEAR, square_pair(LINEAR), (-2.0, 2.0))
    u, r = 0.3, 0.25
    v = c * u + r
    dv = (a * u + v) / (a * (a + c)) - (a * u - v) / (a * (a - c))
    assert pair.deta_dv(u, v) == pytest.approx(dv, abs=1e-8)
    assert dissipation_check(pair, LINEAR, [u], [v]).gamma_est == pytest.approx(dv / r, abs=1e-7)


def test_non_convex_entropy_refused():
    with pytest.raises(ModelError, match="u ="):
        polynomial_pair(BURGERS, (0.0, 0.0, -1.0))


def test_extension_refuses_subcharacteristic_violation():
    with pytest.raises(ModelError):
        extend_entropy(PSystemModel.burgers(0.5), square_pair(BURGERS), (-1.0, 1.0))


def test_out_of_range_state_rejected():
    pair = extend_entropy(BURGERS, square_pair(BURGERS), (-0.5, 0.5))
    with pytest.raises(SupportError):
        pair.eta(2.0, 0.0)
    assert not pair.contains(2.0, 0.0)


def test_constant_equilibrium_solution_has_zero_residual():
    grid = Grid1D(0, 1, 200)
    rule = build_quadrature(ParamSpace.uniform(1, 3))
    u = np.full((3, 200), 0.3)
    init = GridField.from_uv(BURGERS, grid, rule.nodes, u, BURGERS.f(u))
    traj = solve(BURGERS, grid, rule, init, SolveConfig(1e-2, 0.5, snapshot_times=tuple(np.linspace(0.01, 0.49, 49))))
    pair = extend_entropy(BURGERS, square_pair(BURGERS))
    bumps = [Bump(0.5, 0.3, 0.25, 0.2), Bump(0.3, 0.2, 0.3, 0.15)]
    res = entropy_residual(traj, pair, rule, bumps, epsilon=1e-2, model=BURGERS)
    assert np.max(np.abs(res)) <= 1e-10


def shock_run(cells):
    grid = Grid1D(-2, 3, cells, "outflow")
    rule = build_quadrature(ParamSpace.uniform(1, 1))
    u0 = np.where(grid.x < 0, 1.0, 0.0)[None]
    traj = solve_scalar(BURGERS, grid, rule, u0, 1.0, snapshot_times=tuple(np.linspace(0.005, 0.995, 199)))
    return grid, rule, traj


def test_scalar_shock_kruzhkov_residuals():
    grid, rule, traj = shock_run(1000)
    bump = Bump(0.25, 0.5, 0.5, 0.4)
    tol = residual_tolerance(bump, grid.dx)
    t = np.linspace(0, 1, 20001)
    along_shock = np.trapezoid(bump.value(0.5 * t, t), t)
    for k in np.linspace(-0.5, 1.5, 17):
        pair = kruzhkov_pair(BURGERS, k)
        res = entropy_residual(traj, pair, rule, [bump], speed=1.0)[0]
        # exact solution: production s [l] - [q] concentrated on x = t/2
        jump = 0.5 * (pair.ell(0.0) - pair.ell(1.0)) - (pair.q(0.0) - pair.q(1.0))
        assert res == pytest.approx(jump * along_shock, abs=tol)
        assert res >= -tol
        if 0 < k < 1:
            assert res > 0


def test_negative_part_shrinks_with_refinement():
    bump = Bump(0.25, 0.5, 0.5, 0.4)
    neg = []
    for cells in (500, 1000):
        grid, rule, traj = shock_run(cells)
        res = [entropy_residual(traj, kruzhkov_pair(BURGERS, k), rule, [bump], speed=1.0)[0]
               for k in (-0.25, 1.25, 1.5)]
        neg.append(max(0.0, -min(res)))
    assert neg[1] <= neg[0]


def test_bump_outside_time_window_rejected():
    grid, rule, traj = shock_run(200)
    with pytest.raises(SupportError):
        entropy_residual(traj, square_pair(BURGERS), rule, [Bump(0.0, 0.2, 0.1, 0.2)])
    with pytest.raises(SupportError):
        entropy_residual(traj, square_pair(BURGERS), rule, [Bump(-1.8, 0.5, 0.5, 0.3)], speed=1.0)
