import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaxlab.errors import ModelError
from relaxlab.model import (PSystemModel, check_subcharacteristic, coupling_H, coupling_lipschitz,
                            equilibrium, from_riemann, linf_bound, reduced_flux, riemann_matrix,
                            riemann_matrix_inverse, to_riemann)

finite = st.floats(-50, 50, allow_nan=False)


def test_subcharacteristic_examples():
    chk = check_subcharacteristic(PSystemModel.burgers(2.0))
    assert chk.ok and chk.margin == pytest.approx(1.0)
    assert not check_subcharacteristic(PSystemModel.linear(2.0, 1.0)).ok
    chk = check_subcharacteristic(PSystemModel.linear(0.0, 1.0))
    assert chk.ok and chk.margin == 1.0


def test_subcharacteristic_needs_two_samples():
    with pytest.raises(ValueError):
        check_subcharacteristic(PSystemModel.burgers(2.0), samples=1)


@pytest.mark.parametrize("model", [
    PSystemModel.burgers(0.9),
    PSystemModel.burgers(1.0 + 1e-3),
    PSystemModel.polynomial((0, 0.2, 0.0, 1.0), 1.2, (-0.5, 0.6)),
    PSystemModel.polynomial((0, 0.2, 0.0, 1.0), 0.5, (-0.5, 0.6)),
])
def test_subcharacteristic_sign_matches_dense_grid(model):
    u = np.linspace(*model.u_range, 1_000_000)
    dense = np.min(model.a - np.abs(model.df(u))) > 0
    assert check_subcharacteristic(model).ok == dense


def test_riemann_examples():
    m2 = PSystemModel.burgers(2.0)
    w, z = to_riemann(m2, 1.0, 0.0)
    assert (w, z) == (-2.0, -2.0)
    assert from_riemann(m2, w, z) == (1.0, 0.0)
    assert from_riemann(PSystemModel.burgers(1.0), 1.0, -1.0) == (0.0, 1.0)
    assert coupling_H(m2, *to_riemann(m2, 1.0, m2.f(1.0))) == 0.0


def test_matrix_and_inverse():
    m = PSystemModel.burgers(1.7)
    A = riemann_matrix(m)
    assert np.linalg.det(A) == pytest.approx(2 * 1.7)
    np.testing.assert_allclose(A @ riemann_matrix_inverse(m), np.eye(2), atol=1e-15)


def test_coupling_examples():
    m1 = PSystemModel.burgers(1.0)
    m2 = PSystemModel.burgers(2.0)
    assert coupling_H(m1, 0.0, 0.0) == 0.0
    assert coupling_H(m2, -1.5, -2.5) == 0.0
    assert coupling_H(m1, 1.0, -1.0) == 1.0


def test_equilibrium_and_reduced_flux():
    b = PSystemModel.burgers(3.0, (-3, 3))
    lin = PSystemModel.linear(0.4, 1.0)
    assert equilibrium(b, 2.0) == 2.0 and reduced_flux(b, 2.0) == 2.0
    assert equilibrium(lin, 3.0) == pytest.approx(1.2) and reduced_flux(lin, 3.0) == pytest.approx(1.2)
    for m in (b, lin, PSystemModel.polynomial((0, 1, -2, 3), 9.0)):
        assert equilibrium(m, 0.0) == 0.0


@settings(max_examples=200)
@given(a=st.floats(0.1, 10), u=finite, v=finite)
def test_round_trip_and_coupling_identity(a, u, v):
    m = PSystemModel.burgers(a)
    w, z = to_riemann(m, u, v)
    uu, vv = from_riemann(m, w, z)
    assert abs(uu - u) <= 1e-14 * max(1.0, abs(u), abs(v) / a)
    assert abs(vv - v) <= 1e-14 * max(1.0, abs(v), a * abs(u))
    r = v - m.f(u)
    assert abs(coupling_H(m, w, z) - r) <= 1e-14 * max(1.0, abs(v), m.f(u), a * abs(u))


def test_rejects_bad_models():
    with pytest.raises(ModelError):
        PSystemModel.burgers(-1.0)
    with pytest.raises(ModelError):
        PSystemModel.polynomial((1.0, 0.0, 1.0), 2.0)
    with pytest.raises(ModelError):
        PSystemModel.burgers(1.0, (1.0, -1.0))


def test_max_speed_exact_for_cubic():
    m = PSystemModel.polynomial((0, 0, -1.0, 1.0), 10.0, (-2, 2))
    u = np.linspace(-0.3, 0.9, 200001)
    assert m.max_speed(-0.3, 0.9) == pytest.approx(np.max(np.abs(m.df(u))), rel=1e-9)


def test_coupling_lipschitz_is_one_under_subcharacteristic():
    assert coupling_lipschitz(PSystemModel.burgers(2.0), -1, 1) == pytest.approx(1.0)
    # |f'| = 3 > a = 1: (|1 + 3| + |1 - 3|)/2 = 3
    assert coupling_lipschitz(PSystemModel.linear(3.0, 1.0), -1, 1) == pytest.approx(3.0)


def test_linf_bound_formula():
    m = PSystemModel.burgers(2.0)
    # ||A^-1||_inf = max(1/a, 1) = 1; beta = 1: 1 + f(1/2) = 1.125
    assert linf_bound(m, 1.0) == pytest.approx(1.125)
    m = PSystemModel.burgers(0.5)
    # ||A^-1||_inf = 2; f(+-2) = 2
    assert linf_bound(m, 1.0) == pytest.approx(2 * (1 + 2))
