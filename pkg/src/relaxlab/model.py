"""Semi-linear p-system data.

    u_t + v_x = 0
    v_t + a^2 u_x + (v - f(u)) / eps = 0

with Riemann coordinates W = (w, z) = A U, A = [[-a, 1], [-a, -1]], in which
the frozen transport is diagonal with speeds (-a, +a) and the source is
(-H, H)/eps, H(w, z) = (w - z)/2 - f(-(w + z)/(2a)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ModelError


class SubcharacteristicCheck(NamedTuple):
    ok: bool
    margin: float


@dataclass(frozen=True)
class PSystemModel:
    """Sound speed ``a``, polynomial nonlinearity ``f`` and the declared u-range.

    ``coeffs`` are ascending polynomial coefficients of f.  Use the
    :meth:`burgers`, :meth:`linear` and :meth:`polynomial` constructors.
    """

    a: float
    coeffs: tuple
    u_range: tuple = (-1.0, 1.0)
    name: str = "polynomial"

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise ModelError(f"sound speed a must be positive, got {self.a}")
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
        if c.size == 0:
            c = np.zeros(1)
        if not np.all(np.isfinite(c)):
            raise ModelError("flux coefficients must be finite")
        if abs(c[0]) > 1e-12:
            raise ModelError(f"f(0) must vanish, got {c[0]}")
        object.__setattr__(self, "coeffs", tuple(float(x) for x in c))
        lo, hi = (float(v) for v in self.u_range)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ModelError(f"bad u_range {self.u_range}")
        object.__setattr__(self, "u_range", (lo, hi))

    @classmethod
    def burgers(cls, a, u_range=(-1.0, 1.0)):
        return cls(a, (0.0, 0.0, 0.5), u_range, "burgers")

    @classmethod
    def linear(cls, c, a, u_range=(-1.0, 1.0)):
        return cls(a, (0.0, c), u_range, "linear")

    @classmethod
    def polynomial(cls, coeffs, a, u_range=(-1.0, 1.0)):
        return cls(a, tuple(coeffs), u_range, "polynomial")

    def f(self, u):
        return P.polyval(u, self.coeffs)

    def df(self, u):
        return P.polyval(u, P.polyder(self.coeffs))

    def d2f(self, u):
        return P.polyval(u, P.polyder(self.coeffs, 2))

    def critical_points(self):
        """Real roots of f'' (where |f'| can have interior extrema), sorted."""
        d2 = np.trim_zeros(P.polyder(self.coeffs, 2), "b")
        if d2.size <= 1:
            return np.empty(0)
        r = P.polyroots(d2)
        return np.sort(r[np.abs(r.imag) < 1e-12].real)

    def speed_roots(self):
        """Real roots of f' sorted; these are the sign changes of the equilibrium speed."""
        d1 = np.trim_zeros(P.polyder(self.coeffs), "b")
        if d1.size <= 1:
            return np.empty(0)
        r = P.polyroots(d1)
        return np.sort(r[np.abs(r.imag) < 1e-12].real)

    def max_speed(self, lo, hi):
        """sup |f'| on [lo, hi], exact for polynomials."""
        pts = [lo, hi] + [c for c in self.critical_points() if lo < c < hi]
        return float(np.max(np.abs(self.df(np.asarray(pts, dtype=float)))))

    def is_convex(self, lo, hi):
        pts = np.concatenate(([lo, hi], [c for c in self.critical_points() if lo < c < hi]))
        return bool(np.all(self.d2f(pts) > 0))

    def to_dict(self):
        out = {"a": self.a, "u_range": list(self.u_range)}
        if self.name == "burgers":
            out["flux"] = {"kind": "burgers"}
        elif self.name == "linear":
            out["flux"] = {"kind": "linear", "c": self.coeffs[1] if len(self.coeffs) > 1 else 0.0}
        else:
            out["flux"] = {"kind": "polynomial", "coeffs": list(self.coeffs)}
        return out


def riemann_matrix(model):
    a = model.a
    return np.array([[-a, 1.0], [-a, -1.0]])


def riemann_matrix_inverse(model):
    a = model.a
    return np.array([[-1.0, -1.0], [a, -a]]) / (2.0 * a)


def check_subcharacteristic(model, samples=1001):
    """Minimum of a - |f'(u)| on a uniform grid over the declared u-range."""
    if samples < 2:
        raise ValueError("need at least two samples")
    u = np.linspace(*model.u_range, samples)
    speed = model.df(u)
    if not np.all(np.isfinite(speed)):
        raise ModelError("f' is not finite on u_range")
    margin = float(np.min(model.a - np.abs(speed)))
    return SubcharacteristicCheck(margin > 0, margin)


def to_riemann(model, u, v):
    a = model.a
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return -a * u + v, -a * u - v


def from_riemann(model, w, z):
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    return -(w + z) / (2.0 * model.a), (w - z) / 2.0


def coupling_H(model, w, z):
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    return (w - z) / 2.0 - model.f(-(w + z) / (2.0 * model.a))


def equilibrium(model, u):
    """Equilibrium value e(u) = f(u)."""
    return model.f(u)


def reduced_flux(model, u):
    # f1(u, v) = v for the p-system, so f1(u, e(u)) = f(u)
    return model.f(u)


def coupling_lipschitz(model, lo, hi):
    """Sup-norm Lipschitz constant of (-H, H) for u in [lo, hi].

    Row sums of the Jacobian are (|a + f'| + |a - f'|)/(2a), which equals 1
    wherever the subcharacteristic condition holds.
    """
    pts = np.concatenate(([lo, hi], [c for c in model.critical_points() if lo < c < hi]))
    s = model.df(pts)
    a = model.a
    return float(np.max((np.abs(a + s) + np.abs(a - s)) / (2.0 * a)))


def linf_bound(model, beta):
    """Invariant-region bound ||A^{-1}|| (beta + max |f(+-beta/a)|) on ||U||_inf."""
    inv_norm = np.max(np.sum(np.abs(riemann_matrix_inverse(model)), axis=1))
    fb = max(abs(float(model.f(-beta / model.a))), abs(float(model.f(beta / model.a))))
    return float(inv_norm * (beta + fb))
