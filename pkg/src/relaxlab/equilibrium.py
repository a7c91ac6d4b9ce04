"""Entropy solutions of the scalar equilibrium law u_t + f(u)_x = 0.

Engquist-Osher finite volumes (monotone, so the discrete Kruzhkov
inequalities hold) and exact Riemann solutions for convex f as oracles.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .errors import CFLError, ModelError, SolverError
from .relax import GridField, Trajectory, _neighbors


class _SplitFlux:
    """f^+(u) = int_0^u max(f', 0) and f^-(u) = int_0^u min(f', 0), exact for polynomials."""

    def __init__(self, model):
        self.model = model
        roots = model.speed_roots()
        self.breaks = np.unique(np.concatenate((roots, [0.0])))
        # sign of f' on each open segment between consecutive breakpoints
        edges = np.concatenate(([-np.inf], self.breaks, [np.inf]))
        mids = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            if np.isinf(lo) and np.isinf(hi):
                mids.append(0.0)
            elif np.isinf(lo):
                mids.append(hi - 1.0)
            elif np.isinf(hi):
                mids.append(lo + 1.0)
            else:
                mids.append(0.5 * (lo + hi))
        self.positive = model.df(np.asarray(mids)) > 0
        # f^+ at each breakpoint, anchored at f^+(0) = 0
        fb = model.f(self.breaks)
        plus = np.zeros(self.breaks.size)
        i0 = int(np.searchsorted(self.breaks, 0.0))
        for i in range(i0 + 1, self.breaks.size):
            plus[i] = plus[i - 1] + self.positive[i] * (fb[i] - fb[i - 1])
        for i in range(i0 - 1, -1, -1):
            plus[i] = plus[i + 1] - self.positive[i + 1] * (fb[i + 1] - fb[i])
        self.plus_at_breaks = plus
        self.f_at_breaks = fb

    def plus(self, u):
        u = np.asarray(u, dtype=float)
        seg = np.searchsorted(self.breaks, u)  # segment index into self.positive
        # anchor each u at the breakpoint at the end of its segment nearest to 0
        anchor = np.where(u >= 0, seg - 1, seg)
        anchor = np.clip(anchor, 0, self.breaks.size - 1)
        base = self.plus_at_breaks[anchor]
        return base + self.positive[seg] * (self.model.f(u) - self.f_at_breaks[anchor])

    def minus(self, u):
        return self.model.f(u) - self.model.f(0.0) - self.plus(u)


def eo_flux(model, u_left, u_right, _split=None):
    """Engquist-Osher numerical flux f(0) + f^+(u_left) + f^-(u_right)."""
    sp = _split or _SplitFlux(model)
    return model.f(0.0) + sp.plus(u_left) + sp.minus(u_right)


def eo_update(model, u, lam, bc, split=None):
    sp = split or _SplitFlux(model)
    left, right = _neighbors(u, bc)
    flux_right = eo_flux(model, u, right, sp)
    flux_left = eo_flux(model, left, u, sp)
    return u - lam * (flux_right - flux_left)


def kruzhkov_numerical_flux(model, u_left, u_right, k, split=None):
    """Numerical entropy flux F(u_l v k, u_r v k) - F(u_l ^ k, u_r ^ k)."""
    sp = split or _SplitFlux(model)
    return (eo_flux(model, np.maximum(u_left, k), np.maximum(u_right, k), sp)
            - eo_flux(model, np.minimum(u_left, k), np.minimum(u_right, k), sp))


def cell_entropy_residuals(model, u_old, u_new, lam, k, bc, split=None):
    """|u_new - k| - |u_old - k| + lam (G_{i+1/2} - G_{i-1/2}); nonpositive for monotone schemes."""
    left, right = _neighbors(u_old, bc)
    g_right = kruzhkov_numerical_flux(model, u_old, right, k, split)
    g_left = kruzhkov_numerical_flux(model, left, u_old, k, split)
    return np.abs(u_new - k) - np.abs(u_old - k) + lam * (g_right - g_left)


def solve_scalar(model, grid, rule, u0, t_end, cfl=0.9, snapshot_times=(), observer=None,
                 speed=None):
    """EO scheme for every node; returns a single-component :class:`Trajectory`.

    ``u0`` has shape (nodes, cells).  The time step uses sup |f'| over the
    range of ``u0``, which bounds the solution by the discrete maximum
    principle.  A larger ``speed`` may be passed to fix the step across
    separate calls.
    """
    u = np.array(u0, dtype=float, copy=True)
    if u.ndim == 1:
        u = u[None]
    nodes = rule.nodes if rule is not None else np.zeros((u.shape[0], 1))
    if u.shape != (nodes.shape[0], grid.m):
        raise ValueError("u0 shape inconsistent with grid or rule")
    if not 0 < cfl <= 1:
        raise CFLError(f"cfl must lie in (0, 1], got {cfl}")
    data_speed = model.max_speed(float(u.min()), float(u.max()))
    if speed is None:
        speed = data_speed
    elif speed < data_speed * (1 - 1e-12):
        raise CFLError(f"speed {speed:g} below sup |f'| = {data_speed:g} of the data")
    dt_nominal = cfl * grid.dx / speed if speed > 0 else t_end
    sp = _SplitFlux(model)

    start = GridField.scalar(grid, nodes, u)
    traj = Trajectory([start], [u.sum(axis=-1) * grid.dx], dt=dt_nominal)
    targets = sorted(set(float(s) for s in snapshot_times) | {float(t_end)})
    if targets[0] == 0.0:
        targets = targets[1:]
    t = 0.0
    step = 0
    for target in targets:
        while t < target:
            dt = dt_nominal
            last = t + dt >= target * (1 - 1e-14)
            if last:
                dt = target - t
            lam = dt / grid.dx
            if lam * speed > 1 + 1e-12:
                raise CFLError(f"dt*sup|f'|/dx = {lam * speed:.6g} > 1")
            u_new = eo_update(model, u, lam, grid.bc, sp)
            step += 1
            if not np.all(np.isfinite(u_new)):
                raise SolverError(f"non-finite state at step {step}")
            if observer is not None:
                observer(t, u, u_new, lam)
            u = u_new
            t = target if last else t + dt
        traj.snapshots.append(replace(start, values=u[None].copy(), time=t))
        traj.u_integrals.append(u.sum(axis=-1) * grid.dx)
    traj.steps = step
    return traj


def exact_riemann(model, u_l, u_r, xi):
    """Entropy solution of the Riemann problem at similarity coordinate x/t.

    Only convex fluxes are supported: a shock when u_l > u_r, otherwise a
    rarefaction fan where f'(u) = xi is inverted numerically.
    """
    lo, hi = min(u_l, u_r), max(u_l, u_r)
    xi = np.asarray(xi, dtype=float)
    if u_l == u_r:
        return np.full_like(xi, float(u_l))
    if not model.is_convex(lo, hi):
        raise ModelError("exact Riemann oracle needs f'' > 0 between the states")
    if u_l > u_r:
        s = (model.f(u_l) - model.f(u_r)) / (u_l - u_r)
        return np.where(xi < s, float(u_l), float(u_r))
    sl, sr = model.df(u_l), model.df(u_r)
    out = np.where(xi <= sl, float(u_l), float(u_r))
    fan = (xi > sl) & (xi < sr)
    if np.any(fan):
        target = xi[fan]
        a = np.full_like(target, lo)
        b = np.full_like(target, hi)
        for _ in range(200):
            mid = 0.5 * (a + b)
            below = model.df(mid) < target
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
            if np.max(b - a) < 1e-15:
                break
        out = out.copy()
        out[fan] = 0.5 * (a + b)
    return out
