"""Entropy pairs and weak-form entropy residuals.

Scalar pairs (l, q) with q' = l' f'.  System pairs for the p-system have the
form

    eta(u, v) = h(a u + v) + k(a u - v),   Q(u, v) = a h(a u + v) - a k(a u - v).

Matching eta = l and d eta/dv = 0 along v = f(u) forces
h'(a u + f(u)) = k'(a u - f(u)) = l'(u) / (2a); both maps u -> a u +- f(u)
are increasing exactly when the subcharacteristic condition holds, so h and
k can be tabulated by inverting them and integrating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import CubicHermiteSpline

from .errors import ModelError, SupportError
from .model import check_subcharacteristic

TABLE_INTERVALS = 4096
TOL_CONSTANT = 1.0  # C in tol(dx) = C dx ||phi||_{C^1}


@dataclass(frozen=True)
class ScalarEntropyPair:
    name: str
    ell: Callable
    dell: Callable
    d2ell: Callable | None
    q: Callable


def kruzhkov_pair(model, k):
    k = float(k)
    if not np.isfinite(k):
        raise ValueError("k must be finite")
    return ScalarEntropyPair(
        f"kruzhkov({k:g})",
        lambda u: np.abs(np.asarray(u, dtype=float) - k),
        lambda u: np.sign(np.asarray(u, dtype=float) - k),
        None,
        lambda u: np.sign(np.asarray(u, dtype=float) - k) * (model.f(u) - model.f(k)),
    )


def polynomial_pair(model, coeffs, name=None):
    """Pair for a polynomial entropy l; q = int_0^u l' f' is exact."""
    c = np.asarray(coeffs, dtype=float)
    dc = P.polyder(c)
    qc = P.polyint(P.polymul(dc, P.polyder(model.coeffs)))
    lo, hi = model.u_range
    u = np.linspace(lo, hi, 2001)
    second = P.polyval(u, P.polyder(c, 2))
    if np.min(second) < -1e-10:
        worst = u[int(np.argmin(second))]
        raise ModelError(f"entropy is not convex on u_range (l'' < 0 at u = {worst:.6g})")
    return ScalarEntropyPair(
        name or "polynomial",
        lambda x: P.polyval(x, c),
        lambda x: P.polyval(x, dc),
        lambda x: P.polyval(x, P.polyder(c, 2)),
        lambda x: P.polyval(x, qc),
    )


def square_pair(model):
    return polynomial_pair(model, (0.0, 0.0, 1.0), "square")


def _invert_increasing(fun, s, lo, hi):
    """Bisection for fun(u) = s on [lo, hi], fun increasing; to 1e-12 in u."""
    a = np.full_like(s, lo)
    b = np.full_like(s, hi)
    while np.max(b - a) > 1e-12:
        mid = 0.5 * (a + b)
        below = fun(mid) < s
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


class SystemEntropyPair:
    """Tabulated extension (eta, Q) of a scalar entropy.

    h and k are cubic Hermite interpolants through tabulated values and the
    exact slopes l'(u)/(2a), so first derivatives are accurate to the
    inversion tolerance.
    """

    def __init__(self, model, scalar, h_spline, k_spline, s_plus, s_minus, u_range):
        self.model = model
        self.scalar = scalar
        self.h = h_spline
        self.k = k_spline
        self.s_plus = s_plus
        self.s_minus = s_minus
        self.u_range = u_range
        self._dh = h_spline.derivative()
        self._dk = k_spline.derivative()
        self._d2h = h_spline.derivative(2)
        self._d2k = k_spline.derivative(2)

    def _args(self, u, v, check=True):
        a = self.model.a
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        sp, sm = a * u + v, a * u - v
        if check:
            tol = 1e-9 * (1 + abs(self.s_plus[1]) + abs(self.s_minus[1]))
            if (np.any(sp < self.s_plus[0] - tol) or np.any(sp > self.s_plus[1] + tol)
                    or np.any(sm < self.s_minus[0] - tol) or np.any(sm > self.s_minus[1] + tol)):
                raise SupportError("state outside the tabulated range of the entropy extension")
        return sp, sm

    def contains(self, u, v):
        a = self.model.a
        sp, sm = a * np.asarray(u) + v, a * np.asarray(u) - v
        return ((sp >= self.s_plus[0]) & (sp <= self.s_plus[1])
                & (sm >= self.s_minus[0]) & (sm <= self.s_minus[1]))

    def eta(self, u, v):
        sp, sm = self._args(u, v)
        return self.h(sp) + self.k(sm)

    def flux(self, u, v):
        sp, sm = self._args(u, v)
        return self.model.a * (self.h(sp) - self.k(sm))

    def deta_du(self, u, v):
        sp, sm = self._args(u, v)
        return self.model.a * (self._dh(sp) + self._dk(sm))

    def deta_dv(self, u, v):
        sp, sm = self._args(u, v)
        return self._dh(sp) - self._dk(sm)

    def hessian(self, u, v):
        """(eta_uu, eta_uv, eta_vv)."""
        sp, sm = self._args(u, v)
        a = self.model.a
        h2, k2 = self._d2h(sp), self._d2k(sm)
        return a * a * (h2 + k2), a * (h2 - k2), h2 + k2

    def dh(self, s):
        return self._dh(s)

    def dk(self, s):
        return self._dk(s)


def extend_entropy(model, scalar, u_range=None, intervals=TABLE_INTERVALS):
    """Extend a scalar entropy pair to the p-system over ``u_range``.

    Refuses when the subcharacteristic margin on ``u_range`` is not positive.
    The additive split between h and k is fixed by h = k = l/2 at the point of
    ``u_range`` closest to 0.
    """
    lo, hi = u_range or model.u_range
    probe = type(model)(model.a, model.coeffs, (lo, hi), model.name)
    chk = check_subcharacteristic(probe, 4001)
    if not chk.ok:
        raise ModelError(f"subcharacteristic margin {chk.margin:.3g} <= 0 on [{lo}, {hi}]")
    if scalar.d2ell is not None:
        uu = np.linspace(lo, hi, 2001)
        second = scalar.d2ell(uu)
        if np.min(second) < -1e-10:
            raise ModelError(f"entropy not convex at u = {uu[int(np.argmin(second))]:.6g}")
    a = model.a
    anchor = min(max(0.0, lo), hi)
    tables = []
    for sign in (1.0, -1.0):
        phi = lambda u, sg=sign: a * u + sg * model.f(u)
        s = np.linspace(phi(lo), phi(hi), intervals + 1)
        u_of_s = _invert_increasing(phi, s, lo, hi)
        slope = scalar.dell(u_of_s) / (2 * a)
        # Simpson on every interval (midpoint inverted too), accumulated
        ds = s[1] - s[0]
        vals = np.zeros_like(s)
        mids = 0.5 * (s[:-1] + s[1:])
        slope_mid = scalar.dell(_invert_increasing(phi, mids, lo, hi)) / (2 * a)
        pieces = ds / 6.0 * (slope[:-1] + 4 * slope_mid + slope[1:])
        vals[1:] = np.cumsum(pieces)
        s_anchor = phi(anchor)
        spline = CubicHermiteSpline(s, vals, slope)
        shift = float(spline(s_anchor))
        vals = vals - shift + scalar.ell(anchor) / 2.0
        tables.append((CubicHermiteSpline(s, vals, slope), (float(s[0]), float(s[-1]))))
    (h, sp), (k, sm) = tables
    return SystemEntropyPair(model, scalar, h, k, sp, sm, (lo, hi))


class DissipationCheck(NamedTuple):
    gamma_est: float
    ok: bool
    used: int


def dissipation_check(pair, model, u, v):
    """gamma = min d_v eta (v - f(u)) / |v - f(u)|^2 over off-curve samples."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    r = v - model.f(u)
    dv = pair.deta_dv(u, v)
    keep = np.abs(r) >= 1e-10
    if not np.any(keep):
        return DissipationCheck(np.inf, True, 0)
    gamma = float(np.min(dv[keep] * r[keep] / r[keep] ** 2))
    return DissipationCheck(gamma, gamma > 0, int(keep.sum()))


@dataclass(frozen=True)
class Bump:
    """Tensor test function B((x - xc)/xw) B((t - tc)/tw), B(r) = exp(1 - 1/(1 - r^2))."""

    xc: float
    xw: float
    tc: float
    tw: float

    @staticmethod
    def _b(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = np.abs(r) < 1
        ri = r[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ri * ri))
        return out

    @staticmethod
    def _db(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = np.abs(r) < 1
        ri = r[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ri * ri)) * (-2.0 * ri / (1.0 - ri * ri) ** 2)
        return out

    def value(self, x, t):
        return self._b((x - self.xc) / self.xw) * self._b((t - self.tc) / self.tw)

    def dx(self, x, t):
        return self._db((x - self.xc) / self.xw) / self.xw * self._b((t - self.tc) / self.tw)

    def dt(self, x, t):
        return self._b((x - self.xc) / self.xw) * self._db((t - self.tc) / self.tw) / self.tw

    def c1_norm(self):
        r = np.linspace(-1, 1, 20001)
        db = float(np.max(np.abs(self._db(r))))
        return 1.0 + db / self.xw + db / self.tw


def residual_tolerance(bump, dx, constant=TOL_CONSTANT):
    return constant * dx * bump.c1_norm()


def entropy_residual(traj, pair, rule, bumps, epsilon=None, model=None, speed=0.0):
    """Discrete weak-form entropy production for each test function.

    For scalar trajectories ``pair`` is a :class:`ScalarEntropyPair` and the
    residual is int int int (l phi_t + q phi_x) rho.  For system trajectories
    it is a :class:`SystemEntropyPair` and the relaxation term
    - d_v eta (v - f(u)) phi / eps is included (``epsilon`` required).
    Trapezoid in x and t over the recorded snapshots, quadrature in y.
    ``speed`` bounds how fast boundary effects spread when bc is outflow.
    """
    snaps = traj.snapshots
    grid = snaps[0].grid
    times = np.array([s.time for s in snaps])
    x = grid.x
    for b in bumps:
        if b.tc - b.tw <= times[0] or b.tc + b.tw >= times[-1]:
            raise SupportError(f"test function {b} not compactly supported in (0, T)")
        lo, hi = grid.trusted_interval(speed, b.tc + b.tw)
        if b.xc - b.xw < lo or b.xc + b.xw > hi:
            raise SupportError(f"test function {b} leaves the trusted region [{lo}, {hi}]")
    scalar = snaps[0].coords == "u"
    dens = []
    for s in snaps:
        if scalar:
            u = s.u
            dens.append((pair.ell(u), pair.q(u), None))
        else:
            u, v = s.u, s.v
            src = pair.deta_dv(u, v) * (v - model.f(u)) / epsilon
            dens.append((pair.eta(u, v), pair.flux(u, v), src))
    w = rule.weights
    out = []
    for b in bumps:
        per_time = np.empty(len(snaps))
        for j, (t, (e, q, src)) in enumerate(zip(times, dens)):
            integrand = e * b.dt(x, t) + q * b.dx(x, t)
            if src is not None:
                integrand = integrand - src * b.value(x, t)
            per_time[j] = grid.dx * np.sum(w @ integrand)
        out.append(float(np.trapezoid(per_time, times)))
    return out
