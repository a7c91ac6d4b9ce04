"""Invariant battery behind the ``verify`` subcommand.

Each check returns a :class:`DiagnosticsReport` fragment; ``run_battery``
collects them into one report.  Auxiliary problems (Riemann data for the
cone estimate, compact bumps for the Picard iteration) are derived from the
scenario's model so the battery works for any valid config.
"""

from __future__ import annotations

import numpy as np

from .diagnostics import DiagnosticsReport, stability_check
from .entropy import Bump, entropy_residual, extend_entropy, residual_tolerance, square_pair
from .equilibrium import _SplitFlux, cell_entropy_residuals, solve_scalar
from .errors import ContractionError, ModelError
from .model import check_subcharacteristic, to_riemann
from .params import build_quadrature
from .relax import Grid1D, GridField, SolveConfig, evolve
from .scenario import Shape
from .viscous import (DiagonalSystem, PicardConfig, comparison_check, max_contraction_time,
                      picard_solve)


def _scenario_run(scenario, rule, epsilon):
    m, g, run = scenario.model, scenario.grid, scenario.run
    init = scenario.data.field(m, g, rule.nodes)
    cfg = SolveConfig(epsilon=epsilon, t_end=run.t_end, cfl=run.cfl, splitting=run.splitting,
                      snapshot_times=tuple(np.linspace(0, run.t_end, 11)[1:-1]))
    return evolve(m, init, cfg)


def check_conservation(report, traj, grid, tag):
    if grid.bc != "periodic":
        return
    ints = np.array(traj.u_integrals)
    scale = np.maximum(np.abs(ints[0]), 1e-300)
    rel = float(np.max(np.abs(ints - ints[0]) / scale))
    report.add_scalar(f"conservation_rel_{tag}", rel, "max_j |int u(t_j) - int u(0)| / |int u(0)|")
    report.add_flag(f"conservation_{tag}", rel <= 1e-12, "relative drift <= 1e-12")


def check_bound(report, traj, tag):
    report.add_scalar(f"linf_max_{tag}", traj.linf_max, "max over steps of max(|u|, |v|)")
    report.add_scalar(f"linf_bound_value_{tag}", traj.linf_bound,
                      "max(1/a, 1) (beta + max|f(+-beta/a)|), beta = ||W0||_inf")
    report.add_flag(f"linf_bound_{tag}", traj.bound_violations == 0, "checked every step, slack 1e-12")


def check_comparison(report, scenario, rule, epsilon, nu, pairs=3, seed=0):
    m, g = scenario.model, scenario.grid
    base = scenario.data.field(m, g, rule.nodes[:1])
    rng = np.random.default_rng(seed)
    lo_u, hi_u = m.u_range
    worst = np.inf
    hyp = True
    for _ in range(pairs):
        bump = Shape.make("gaussian", amplitude=1.0, center=float(rng.uniform(g.x_lo, g.x_hi)),
                          width=0.1 * (g.x_hi - g.x_lo))
        gap = 0.05 * (hi_u - lo_u) * (0.1 + bump(g.x))
        # raising w and z together moves u down; both components stay ordered
        upper = GridField(base.values + gap[None, None, :], g, base.nodes, 0.0, "wz", m.a)
        res = comparison_check(m, base, upper, nu, epsilon, min(scenario.run.t_end, 0.25),
                               scenario.run.cfl)
        worst = min(worst, res.min_margin)
        hyp = hyp and res.hypothesis_ok
    report.add_scalar("comparison_min_margin", worst, f"{pairs} ordered pairs, nu = {nu:g}")
    report.add_flag("comparison_hypothesis", hyp, "|f'| <= a on visited range (quasimonotone)")
    report.add_flag("comparison", worst >= -1e-12, "componentwise order kept, slack 1e-12")


def check_kruzhkov_cells(report, scenario, rule, points=17):
    m, g, run = scenario.model, scenario.grid, scenario.run
    u0 = scenario.data.u0(g.x, rule.nodes)
    ks = np.linspace(u0.min(), u0.max(), points)
    split = _SplitFlux(m)
    worst = [-np.inf]

    def watch(t, u, u_new, lam):
        for k in ks:
            worst[0] = max(worst[0], float(cell_entropy_residuals(m, u, u_new, lam, k, g.bc, split).max()))

    solve_scalar(m, g, rule, u0, run.t_end, run.cfl, observer=watch)
    report.add_scalar("kruzhkov_cell_max", worst[0], f"max cell residual over {points} k values")
    report.add_flag("kruzhkov_cells", worst[0] <= 1e-12, "discrete entropy inequality per cell")


def check_entropy_weak(report, traj, scenario, rule, epsilon):
    m, g = scenario.model, scenario.grid
    u = np.concatenate([s.u.ravel() for s in traj.snapshots])
    v = np.concatenate([s.v.ravel() for s in traj.snapshots])
    span = max(np.ptp(u), 1e-3)
    lo, hi = float(u.min()), float(u.max())
    pair, inside = None, False
    # widen the tabulated u-range until the off-curve states are covered
    for _ in range(12):
        lo, hi = lo - 0.25 * span, hi + 0.25 * span
        try:
            pair = extend_entropy(m, square_pair(m), (lo, hi), intervals=1024)
        except ModelError:
            break
        inside = bool(np.all(pair.contains(u, v)))
        if inside:
            break
    report.add_flag("entropy_extension", inside, "all visited states inside tabulated range")
    if not inside:
        return
    T = traj.times[-1]
    L = g.x_hi - g.x_lo
    bumps = [Bump(g.x_lo + L * c, 0.2 * L, 0.5 * T, 0.4 * T) for c in (0.3, 0.5, 0.7)]
    res = entropy_residual(traj, pair, rule, bumps, epsilon, m)
    tol = residual_tolerance(bumps[0], g.dx)
    report.add_scalar("entropy_residual_min", min(res), "weak-form entropy production, square entropy")
    report.add_scalar("entropy_residual_tol", tol, "C dx ||phi||_C1, C = 1")
    report.add_flag("entropy_weak", min(res) >= -tol, "residual >= -tol for every test function")


def riemann_pair(model, grid, rule, amplitude=None):
    """Riemann data from the model's range and a y-dependent perturbation inside |x| < 0.5."""
    lo, hi = model.u_range
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    x = grid.x
    u_a = np.where(x < 0.0, mid + 0.5 * half, mid - 0.5 * half)
    u_a = np.repeat(u_a[None], rule.size, axis=0)
    amp = 0.2 * half if amplitude is None else amplitude
    shape = Shape.make("bump", amplitude=1.0, center=-0.2, width=0.3)(x)
    u_b = u_a + amp * (1.0 + 0.5 * rule.nodes[:, :1]) * shape[None]
    return u_a, u_b


def check_stability(report, scenario, alpha=None, dx=1.0 / 512):
    m = scenario.model
    grid = Grid1D(-2.0, 2.0, int(round(4.0 / dx)), "outflow")
    rule = build_quadrature(scenario.space)
    u_a, u_b = riemann_pair(m, grid, rule)
    res = stability_check(m, u_a, u_b, grid, rule, 0.5, 0.5, alpha=alpha)
    report.add_scalar("stability_margin", res.margin, "rhs + 10 dx range - lhs, rho^2 weight")
    report.add_scalar("stability_alpha", res.alpha, "cone speed sup|f'| over data range")
    report.add_flag("stability_cone", res.ok, "weighted L1 cone estimate, Riemann data")


def picard_data(model, amplitude):
    bump = Shape.make("bump", amplitude=amplitude, center=0.0, width=0.8)

    def initial(x):
        u = bump(x)
        v = model.f(u) + 0.5 * bump(x)
        w, z = to_riemann(model, u, v)
        return np.stack([w, z])[:, None, :]

    return initial


def check_picard(report, scenario, nu, epsilon):
    m = scenario.model
    lo, hi = m.u_range
    amp = 0.5 * min(abs(lo), abs(hi)) if lo < 0 < hi else 0.25 * (hi - lo)
    initial = picard_data(m, amp)
    b0 = float(np.max(np.abs(initial(np.linspace(-1, 1, 2001)))))
    system = DiagonalSystem.psystem(m, epsilon, 2 * b0)
    T = 0.5 * max_contraction_time(system, nu)
    try:
        res = picard_solve(m, initial, (-1.0, 1.0),
                           PicardConfig(nu=nu, epsilon=epsilon, T=T, conv_points=512, time_steps=16))
    except ContractionError as exc:
        report.add_flag("picard_contraction", False, str(exc))
        return
    r = np.array(res.residuals)
    live = r[:-1] > 1e-13
    ratios = r[1:][live] / r[:-1][live]
    worst = float(ratios.max()) if ratios.size else 0.0
    report.add_scalar("picard_factor", res.factor, "2 mu a sqrt(T/nu) + Lip(S) T")
    report.add_scalar("picard_worst_ratio", worst, "max residual ratio over iterations")
    report.add_flag("picard_contraction", worst <= res.factor, "residual ratio <= factor")


def run_battery(scenario, epsilon=None, nu=None):
    """Full invariant battery on ``scenario``; returns a report."""
    run = scenario.run
    eps = run.epsilons[0] if epsilon is None else epsilon
    nu = (run.nus[0] if run.nus else 1e-2) if nu is None else nu
    rule = build_quadrature(scenario.space)
    report = DiagnosticsReport("verify")
    chk = check_subcharacteristic(scenario.model)
    report.add_scalar("subcharacteristic_margin", chk.margin, "min over u_range of a - |f'(u)|")
    report.add_flag("subcharacteristic", chk.ok, "|f'| < a on u_range")
    if not chk.ok:
        return report
    traj = _scenario_run(scenario, rule, eps)
    check_conservation(report, traj, scenario.grid, "relax")
    check_bound(report, traj, "relax")
    check_comparison(report, scenario, rule, eps, nu, seed=run.seed)
    check_kruzhkov_cells(report, scenario, rule)
    check_entropy_weak(report, traj, scenario, rule, eps)
    check_stability(report, scenario)
    check_picard(report, scenario, nu, eps)
    return report
