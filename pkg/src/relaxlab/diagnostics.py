"""Quantitative functionals, statistics and pass/fail reports."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P

from .equilibrium import solve_scalar
from .errors import SolverError, SupportError
from .model import coupling_H
from .params import build_quadrature, sample
from .relax import GridField, SolveConfig, evolve

NUMBER_FORMAT = ".17g"


def fmt(x):
    return format(float(x), NUMBER_FORMAT)


@dataclass(frozen=True)
class Entry:
    kind: str  # "scalar" | "curve" | "flag"
    value: object
    provenance: str


@dataclass
class DiagnosticsReport:
    """Named scalars, curves and flags, each with a provenance note."""

    title: str = "report"
    entries: dict = field(default_factory=dict)

    def _add(self, name, entry):
        if name in self.entries:
            raise ValueError(f"duplicate report entry {name!r}")
        if "," in name or "/" in name:
            raise ValueError(f"entry name {name!r} may not contain ',' or '/'")
        self.entries[name] = entry

    def add_scalar(self, name, value, provenance=""):
        value = float(value)
        if not np.isfinite(value):
            raise ValueError(f"entry {name!r} is not finite")
        self._add(name, Entry("scalar", value, provenance))

    def add_curve(self, name, x, y, provenance=""):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("curve x and y differ in length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError(f"curve {name!r} has non-finite values")
        self._add(name, Entry("curve", (x, y), provenance))

    def add_flag(self, name, ok, provenance=""):
        self._add(name, Entry("flag", bool(ok), provenance))

    def __getitem__(self, name):
        return self.entries[name].value

    def __contains__(self, name):
        return name in self.entries

    @property
    def flags(self):
        return {k: e.value for k, e in self.entries.items() if e.kind == "flag"}

    @property
    def passed(self):
        return all(self.flags.values())

    def write(self, directory, stem=None):
        """Write ``<stem>.csv`` plus one ``<stem>_<curve>.csv`` per curve."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        stem = stem or self.title
        path = directory / f"{stem}.csv"
        with path.open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["name", "kind", "value", "provenance"])
            for name, e in self.entries.items():
                if e.kind == "scalar":
                    val = fmt(e.value)
                elif e.kind == "flag":
                    val = "true" if e.value else "false"
                else:
                    val = f"{stem}_{name}.csv"
                    with (directory / val).open("w", newline="") as ch:
                        cw = csv.writer(ch, lineterminator="\n")
                        cw.writerow(["x", "y"])
                        cw.writerows([fmt(a), fmt(b)] for a, b in zip(*e.value))
                out.writerow([name, e.kind, val, e.provenance])
        return path


# -- norms and rates -----------------------------------------------------------

def _off_equilibrium_sq(snap, model):
    """Per-node sum over cells of (v - f(u))^2 dx."""
    h = coupling_H(model, snap.w, snap.z)
    return (h * h).sum(axis=-1) * snap.grid.dx


def equilibration_norm(traj, model, rule, method="exact"):
    """int_0^T int_x int_y |v - f(u)|^2 rho.

    ``method="exact"`` uses the integral the solver accumulates inside each
    relaxation substep (exact for the split scheme at any eps/dt ratio).
    ``method="trapezoid"`` applies the trapezoid rule to the snapshots, which
    only resolves the decay when snapshots are spaced well below eps.
    """
    if len(traj.snapshots) < 2:
        raise ValueError("need at least two snapshots")
    w = rule.weights if rule is not None else np.full(traj.final.values.shape[1], 1.0)
    if method == "exact":
        if traj.equilibration is None:
            raise ValueError("trajectory carries no equilibration integral")
        return float(w @ traj.equilibration[-1])
    if method != "trapezoid":
        raise ValueError(f"unknown method {method!r}")
    per_time = np.array([w @ _off_equilibrium_sq(s, model) for s in traj.snapshots])
    return float(np.trapezoid(per_time, traj.times))


def fit_decay_rate(pairs):
    """Least-squares slope of log(norm) against log(eps)."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ValueError("need at least three (eps, norm) pairs")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("eps and norm values must be positive and finite")
    slope, _ = np.polyfit(np.log(arr[:, 0]), np.log(arr[:, 1]), 1)
    return float(slope)


def _u_of(f):
    return f.u if isinstance(f, GridField) else np.atleast_2d(np.asarray(f, dtype=float))


def l1_distance(field_a, field_b, rule, dx):
    """sum_k w_k sum_i dx |u_a - u_b|, the L1_rho distance of the u components."""
    diff = np.abs(_u_of(field_a) - _u_of(field_b))
    return float(rule.weights @ diff.sum(axis=-1) * dx)


def cone_l1_distance(field_a, field_b, rule, m, t, alpha, weight="rho2", center=0.0, x=None):
    """Weighted L1 distance of u over the cone |x - center| <= m + alpha t.

    Fields are :class:`GridField` objects or (nodes, cells) arrays; arrays
    need the cell centres ``x``.  With ``weight="rho2"`` every node picks up
    one extra density factor on top of the quadrature weight.
    """
    if weight not in ("rho", "rho2"):
        raise ValueError(f"unknown weight {weight!r}")
    grid = field_a.grid if isinstance(field_a, GridField) else None
    if x is None:
        if grid is None:
            raise ValueError("cell centres required for array fields")
        x = grid.x
    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    radius = m + alpha * t
    lo_edge, hi_edge = (grid.x_lo, grid.x_hi) if grid else (x[0] - dx / 2, x[-1] + dx / 2)
    if center - radius < lo_edge - 1e-12 or center + radius > hi_edge + 1e-12:
        raise SupportError(f"cone [{center - radius:.6g}, {center + radius:.6g}] exceeds the domain")
    inside = np.abs(x - center) <= radius * (1 + 1e-14)
    w = rule.weights * (rule.density if weight == "rho2" else 1.0)
    diff = np.abs(_u_of(field_a) - _u_of(field_b))[:, inside]
    return float(w @ diff.sum(axis=-1) * dx)


class StabilityResult(NamedTuple):
    ok: bool
    margin: float
    lhs: float
    rhs: float
    tol: float
    alpha: float


def stability_check(model, u0_a, u0_b, grid, rule, m, T, alpha=None, center=0.0, cfl=0.9):
    """Check the rho^2-weighted L1 cone estimate for two scalar runs.

    lhs is the distance at time T over |x - center| <= m, rhs the initial
    distance over the widened cone m + alpha T.  ``alpha`` defaults to
    sup |f'| over the joint data range; pass a smaller value to see the check
    fail.  The cone must stay clear of outflow boundary effects.
    """
    u0_a = np.atleast_2d(np.asarray(u0_a, dtype=float))
    u0_b = np.atleast_2d(np.asarray(u0_b, dtype=float))
    lo = float(min(u0_a.min(), u0_b.min()))
    hi = float(max(u0_a.max(), u0_b.max()))
    speed = model.max_speed(lo, hi)
    if alpha is None:
        alpha = speed
    r_max = m + max(alpha, speed) * T
    t_lo, t_hi = grid.trusted_interval(speed, T)
    if center - r_max < t_lo or center + r_max > t_hi:
        raise SupportError("stability cone reaches the region influenced by the boundary")
    run_a = solve_scalar(model, grid, rule, u0_a, T, cfl)
    run_b = solve_scalar(model, grid, rule, u0_b, T, cfl)
    lhs = cone_l1_distance(run_a.final, run_b.final, rule, m, 0.0, alpha, "rho2", center)
    rhs = cone_l1_distance(u0_a, u0_b, rule, m, T, alpha, "rho2", center, x=grid.x)
    tol = 10.0 * grid.dx * (hi - lo)
    margin = rhs + tol - lhs
    return StabilityResult(margin >= 0, float(margin), lhs, rhs, tol, float(alpha))


# -- statistics -----------------------------------------------------------------

def _apply(functional, u):
    if functional is None:
        return u
    if callable(functional):
        return functional(u)
    return P.polyval(u, np.asarray(functional, dtype=float))


def moments(field, rule, functional=None):
    """(mean(x), variance(x)) of phi(u(x, y)) under rho.

    ``functional`` is None (phi = u), polynomial coefficients in increasing
    order, or a vectorised callable.
    """
    phi = _apply(functional, _u_of(field))
    mean = rule.weights @ phi
    var = rule.weights @ (phi - mean) ** 2
    return mean, np.maximum(var, 0.0)


@dataclass(frozen=True)
class PointFunctional:
    """phi = p(u(x0)) with u linearly interpolated between cell centres."""

    x0: float
    coeffs: tuple = (0.0, 1.0)

    def __call__(self, field):
        grid = field.grid
        u = field.u
        x = grid.x
        if grid.bc == "periodic":
            period = grid.x_hi - grid.x_lo
            xs = np.concatenate(([x[-1] - period], x, [x[0] + period]))
            us = np.concatenate((u[:, -1:], u, u[:, :1]), axis=1)
        else:
            xs, us = x, u
        x0 = grid.x_lo + (self.x0 - grid.x_lo) % (grid.x_hi - grid.x_lo) \
            if grid.bc == "periodic" else self.x0
        j = int(np.clip(np.searchsorted(xs, x0) - 1, 0, xs.size - 2))
        th = (x0 - xs[j]) / (xs[j + 1] - xs[j])
        val = (1 - th) * us[:, j] + th * us[:, j + 1]
        return P.polyval(val, np.asarray(self.coeffs, dtype=float))


class CVResult(NamedTuple):
    plain_mc: tuple  # (estimate, stderr)
    cv: tuple
    reduction: float
    quad_value: float
    samples: int
    failures: list


def _batched(fn, ys, batch):
    """Apply ``fn`` to chunks of ``ys``; on a solver failure retry one by one."""
    out = np.full(ys.shape[0], np.nan)
    failures = []
    for s in range(0, ys.shape[0], batch):
        chunk = ys[s:s + batch]
        try:
            out[s:s + chunk.shape[0]] = fn(chunk)
        except SolverError:
            for i in range(chunk.shape[0]):
                try:
                    out[s + i] = fn(chunk[i:i + 1])[0]
                except SolverError as exc:
                    failures.append((s + i, str(exc)))
    return out, failures


def cv_estimate(model, scenario, epsilon, rule, mc_samples, seed, functional, batch=64):
    """Plain and control-variate Monte Carlo estimates of E[phi(u^eps(T))].

    The control variate is phi(u_eq(T)) from the equilibrium solver on the
    same samples; its mean is added back from ``rule``.  Samples whose run
    fails are dropped and listed in ``failures``.
    """
    if mc_samples < 16:
        raise ValueError("mc_samples must be at least 16")
    grid, data, run = scenario.grid, scenario.data, scenario.run
    T = run.t_end
    ys = sample(scenario.space, seed, mc_samples)
    cfg = SolveConfig(epsilon=epsilon, t_end=T, cfl=run.cfl, splitting=run.splitting)
    quad_rule = rule if rule is not None else build_quadrature(scenario.space)
    # one time step for every batch, so results do not depend on ``batch``
    u_all = data.u0(grid.x, np.vstack([ys, quad_rule.nodes]))
    speed = model.max_speed(float(u_all.min()), float(u_all.max()))

    def relaxed(y):
        traj = evolve(model, data.field(model, grid, y), cfg, check_bound=False)
        return functional(traj.final)

    def equilibrium(y):
        traj = solve_scalar(model, grid, None, data.u0(grid.x, y), T, run.cfl, speed=speed)
        return functional(traj.final)

    phi_eps, fail_a = _batched(relaxed, ys, batch)
    phi_eq, fail_b = _batched(equilibrium, ys, batch)
    quad_value = float(quad_rule.weights @ equilibrium(quad_rule.nodes))

    ok = np.isfinite(phi_eps) & np.isfinite(phi_eq)
    n = int(ok.sum())
    if n < 2:
        raise SolverError("fewer than two successful Monte Carlo samples")
    plain = phi_eps[ok]
    diff = plain - phi_eq[ok]
    var_plain = float(np.var(plain, ddof=1))
    var_cv = float(np.var(diff, ddof=1))
    if var_cv > 0:
        reduction = var_plain / var_cv
    else:
        reduction = np.inf if var_plain > 0 else 1.0
    return CVResult(
        (float(plain.mean()), float(np.sqrt(var_plain / n))),
        (float(diff.mean() + quad_value), float(np.sqrt(var_cv / n))),
        float(reduction),
        quad_value,
        n,
        sorted(fail_a + fail_b),
    )


def equilibrium_reference(model, u0, rule, dx, length):
    """Constant equilibrium state (ubar, f(ubar)) with ubar the x-y mean of u0."""
    ubar = float(rule.weights @ np.atleast_2d(u0).sum(axis=-1) * dx / length)
    return ubar, float(model.f(ubar))
