"""Parabolic (vanishing-viscosity) reference solvers.

``picard_solve`` builds the mild solution of

    W_t + diag(-a, a) W_x = nu W_xx + (-H, H)(W) / eps

as the fixed point of the Duhamel map

    (L W)(t) = G(t) * W0 - int_0^t dG/dx(t - s) * (Lambda W(s)) ds
                         + int_0^t G(t - s) * S(W(s)) ds,

G the heat kernel of variance 2 nu t.  In the sup norm this map has Lipschitz
constant at most 2 mu alpha1 sqrt(T/nu) + alpha2 T with mu = int |k'| =
1/sqrt(pi), alpha1 = max |speed| and alpha2 the Lipschitz constant of S; the
discrete map inherits that bound because the space-time kernels are
integrated cell by cell and time interval by time interval.

``fd_solve`` is the explicit finite-difference counterpart used for longer
horizons, and ``comparison_check`` exercises the order-preserving property
of the quasimonotone system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import signal, special

from .errors import ContractionError, ConvergenceError
from .model import coupling_H, coupling_lipschitz
from .relax import Grid1D, GridField, SolveConfig, evolve

KERNEL_L1_DERIVATIVE = 1.0 / np.sqrt(np.pi)  # int |k'(x)| dx, k(x) = exp(-x^2/4)/sqrt(4 pi)
_TIME_GAUSS = 12


@dataclass(frozen=True)
class PicardConfig:
    nu: float
    epsilon: float
    T: float
    domain_pad: float = 0.0
    conv_points: int = 1024
    time_steps: int = 32
    max_iter: int = 200
    tol: float = 1e-12

    def __post_init__(self):
        for name in ("nu", "epsilon", "T", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.domain_pad < 0:
            raise ValueError("domain_pad must be nonnegative")
        if self.conv_points < 8 or self.time_steps < 1 or self.max_iter < 1:
            raise ValueError("conv_points, time_steps and max_iter too small")


@dataclass(frozen=True)
class DiagonalSystem:
    """Weakly coupled diagonal system: constant speeds plus a local source.

    ``source(w, z) -> (sw, sz)``; ``source_lipschitz`` is its sup-norm
    Lipschitz constant on the ball the iteration lives in.
    """

    speeds: tuple
    source: Callable | None
    source_lipschitz: float

    @classmethod
    def psystem(cls, model, epsilon, radius):
        lip = coupling_lipschitz(model, -radius / model.a, radius / model.a) / epsilon

        def source(w, z):
            h = coupling_H(model, w, z) / epsilon
            return -h, h

        return cls((-model.a, model.a), source, lip)

    @classmethod
    def heat(cls):
        return cls((0.0, 0.0), None, 0.0)


def contraction_factor(system, nu, T):
    alpha1 = max(abs(s) for s in system.speeds)
    return 2.0 * KERNEL_L1_DERIVATIVE * alpha1 * np.sqrt(T / nu) + system.source_lipschitz * T


def max_contraction_time(system, nu):
    """Largest T with contraction factor 1 (the root of a quadratic in sqrt(T))."""
    c1 = 2.0 * KERNEL_L1_DERIVATIVE * max(abs(s) for s in system.speeds) / np.sqrt(nu)
    c2 = system.source_lipschitz
    if c2 == 0:
        return np.inf if c1 == 0 else 1.0 / c1**2
    root = (-c1 + np.sqrt(c1 * c1 + 4.0 * c2)) / (2.0 * c2)
    return float(root**2)


class PicardResult(NamedTuple):
    field: GridField
    x: np.ndarray
    times: np.ndarray
    history: np.ndarray  # (time_steps + 1, 2, nodes, points)
    residuals: list
    factor: float
    max_time: float
    b0: float
    radius: float


def _cell_heat_weights(offsets, h, nu, tau):
    """int over a cell of width h centred at each offset of G(., tau)."""
    s = 2.0 * np.sqrt(nu * tau)
    return 0.5 * (special.erf((offsets + h / 2) / s) - special.erf((offsets - h / 2) / s))


def _cell_heat_gradient_weights(offsets, h, nu, tau):
    """int over a cell of dG/dx(x_i - z): G(d + h/2) - G(d - h/2)."""
    g = lambda x: np.exp(-x * x / (4 * nu * tau)) / np.sqrt(4 * np.pi * nu * tau)
    return g(offsets + h / 2) - g(offsets - h / 2)


def _interval_kernels(offsets, h, nu, tau_a, tau_b):
    """Time-integrated cell kernels over [tau_a, tau_b].

    The substitution tau = sigma^2 makes int ||dG/dx||_1 dtau a polynomial
    integral, so the Gauss rule reproduces the continuous L1 bound exactly.
    """
    xg, wg = np.polynomial.legendre.leggauss(_TIME_GAUSS)
    sa, sb = np.sqrt(tau_a), np.sqrt(tau_b)
    sig = 0.5 * (sb - sa) * xg + 0.5 * (sb + sa)
    wts = 0.5 * (sb - sa) * wg * 2.0 * sig
    heat = np.zeros_like(offsets)
    grad = np.zeros_like(offsets)
    for sq, wq in zip(sig, wts):
        heat += wq * _cell_heat_weights(offsets, h, nu, sq * sq)
        grad += wq * _cell_heat_gradient_weights(offsets, h, nu, sq * sq)
    return heat, grad


def picard_solve(model, initial, support, cfg, system=None):
    """Fixed-point iteration for the mild solution on [0, cfg.T].

    ``initial(x)`` returns (w0, z0) stacked with shape (2, nodes, len(x)) and
    must vanish outside ``support = (lo, hi)``.  The truncated domain is the
    support padded by max(domain_pad, 8 sqrt(nu T) + max|speed| T).  Raises
    :class:`ContractionError` if the computed factor is >= 1 and
    :class:`ConvergenceError` if ``max_iter`` is exhausted.
    """
    nu, T = cfg.nu, cfg.T
    lo, hi = support
    speed = model.a if system is None else max(abs(s) for s in system.speeds)
    pad = max(cfg.domain_pad, 8.0 * np.sqrt(nu * T) + speed * T)
    grid = Grid1D(lo - pad, hi + pad, cfg.conv_points, "outflow")
    x = grid.x
    h = grid.dx
    w0 = np.asarray(initial(x), dtype=float)
    if w0.ndim == 2:
        w0 = w0[:, None, :]
    b0 = float(np.max(np.abs(w0)))
    radius = 2.0 * b0
    if system is None:
        system = DiagonalSystem.psystem(model, cfg.epsilon, radius)
    factor = float(contraction_factor(system, nu, T))
    tmax = max_contraction_time(system, nu)
    if factor >= 1.0:
        raise ContractionError(factor, tmax)

    nt = cfg.time_steps
    dt = T / nt
    times = np.linspace(0.0, T, nt + 1)
    m = x.size
    offsets = (np.arange(-(m - 1), m) * h)

    # free evolution G(t_n) * W0 by trapezoid quadrature of the point kernel;
    # cell-integrated weights when the kernel is not resolved by the grid
    free = np.empty((nt + 1,) + w0.shape)
    free[0] = w0
    for n in range(1, nt + 1):
        tn = times[n]
        if np.sqrt(2 * nu * tn) > 4 * h:
            ker = h * np.exp(-offsets**2 / (4 * nu * tn)) / np.sqrt(4 * np.pi * nu * tn)
        else:
            ker = _cell_heat_weights(offsets, h, nu, tn)
        free[n] = signal.fftconvolve(w0, ker[None, None, :], mode="valid", axes=-1)

    # kernels for interval [t_i, t_{i+1}] seen from t_n depend on n - i only
    heat_k = np.empty((nt, offsets.size))
    grad_k = np.empty((nt, offsets.size))
    for j in range(nt):
        heat_k[j], grad_k[j] = _interval_kernels(offsets, h, nu, j * dt, (j + 1) * dt)
    speeds = np.asarray(system.speeds, dtype=float)[:, None, None]

    def duhamel(hist):
        # piecewise-constant (interval-averaged) transport flux and source;
        # out[n] = sum_{i<n} K[n-1-i] * avg[i] is a causal convolution in the
        # time index as well, so one FFT over (time, space) does all of it
        flux = speeds[None] * hist
        favg = 0.5 * (flux[1:] + flux[:-1])
        conv = -signal.fftconvolve(favg, grad_k[:, None, None, :], axes=(0, 3))
        if system.source is not None:
            sw, sz = system.source(hist[:, 0], hist[:, 1])
            src = np.stack([sw, sz], axis=1)
            savg = 0.5 * (src[1:] + src[:-1])
            conv += signal.fftconvolve(savg, heat_k[:, None, None, :], axes=(0, 3))
        out = free.copy()
        out[1:] += conv[:nt, :, :, m - 1:2 * m - 1]
        return out

    hist = np.zeros_like(free)
    residuals = []
    for _ in range(cfg.max_iter):
        new = duhamel(hist)
        res = float(np.max(np.abs(new - hist)))
        residuals.append(res)
        hist = new
        if res <= cfg.tol:
            break
    else:
        raise ConvergenceError(
            f"Picard iteration did not reach tol {cfg.tol} in {cfg.max_iter} iterations", residuals
        )
    nodes = np.zeros((hist.shape[2], 1))
    fld = GridField(hist[-1], grid, nodes, T, "wz", model.a)
    return PicardResult(fld, x, times, hist, residuals, factor, tmax, b0, radius)


def fd_solve(model, grid, rule, initial, nu, epsilon, t_end, cfl=0.9, snapshot_times=(),
             observer=None):
    """Upwind transport + explicit diffusion + exact relaxation.

    With ``nu == 0`` this takes exactly the same steps as
    :func:`relaxlab.relax.solve`.
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    config = SolveConfig(epsilon=epsilon, t_end=t_end, cfl=cfl, snapshot_times=tuple(snapshot_times))
    return evolve(model, initial, config, nu=nu, observer=observer)


class ComparisonResult(NamedTuple):
    ordered: bool
    min_margin: float
    hypothesis_ok: bool


def quasimonotone(model, lo, hi):
    """Off-diagonal derivatives of (-H, H) are (a -+ f')/(2a); both >= 0 iff |f'| <= a."""
    return model.max_speed(lo, hi) <= model.a


def comparison_check(model, data_lo, data_hi, nu, epsilon, t_end, cfl=0.9):
    """Run both data sets and report the smallest componentwise gap hi - lo.

    ``hypothesis_ok`` is False when the coupling is not quasimonotone on the
    range the runs visit; the check still runs.
    """
    if data_lo.grid != data_hi.grid or data_lo.values.shape != data_hi.values.shape:
        raise ValueError("data sets live on different grids")
    if np.any(data_hi.values - data_lo.values < 0):
        raise ValueError("data_lo must not exceed data_hi")
    k = data_lo.values.shape[1]
    both = GridField(np.concatenate([data_lo.values, data_hi.values], axis=1), data_lo.grid,
                     np.concatenate([data_lo.nodes, data_hi.nodes]), 0.0, "wz", model.a)
    margin = [float(np.min(data_hi.values - data_lo.values))]
    urange = [np.inf, -np.inf]

    def watch(t, vals):
        margin[0] = min(margin[0], float(np.min(vals[:, k:] - vals[:, :k])))
        u = -(vals[0] + vals[1]) / (2 * model.a)
        urange[0] = min(urange[0], float(u.min()))
        urange[1] = max(urange[1], float(u.max()))

    u0 = both.u
    urange = [float(u0.min()), float(u0.max())]
    fd_solve(model, data_lo.grid, None, both, nu, epsilon, t_end, cfl, observer=watch)
    hyp = quasimonotone(model, *urange)
    return ComparisonResult(margin[0] >= -1e-12, margin[0], hyp)
