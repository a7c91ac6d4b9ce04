"""Command line entry point.

    relaxlab <subcommand> --config <path> [--out <dir>] [--threads <n>]

Subcommands: simulate, sweep-epsilon, sweep-nu, verify, stats, cv.  Results
go to ``<out>/<config-hash>/<subcommand>/`` where ``<out>`` defaults to
``$RELAXLAB_OUT`` or ``./relaxlab-out``.  Exit status 0 when every check
passes, 1 on a failed check, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .checks import run_battery
from .diagnostics import (DiagnosticsReport, PointFunctional, cv_estimate, equilibration_norm,
                          equilibrium_reference, fit_decay_rate, fmt, l1_distance, moments)
from .equilibrium import solve_scalar
from .errors import ConfigError, RelaxLabError
from .params import build_quadrature
from .relax import SolveConfig, evolve
from .scenario import parse_config, serialize
from .viscous import fd_solve

log = logging.getLogger("relaxlab")

OUT_ENV = "RELAXLAB_OUT"
DEFAULT_OUT = "relaxlab-out"
SUBCOMMANDS = ("simulate", "sweep-epsilon", "sweep-nu", "verify", "stats", "cv")


def config_hash(cfg):
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()[:16]


def _map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_snapshot(path, snap, model):
    k = snap.values.shape[1]
    u = snap.u
    v = snap.v
    header = ["x"] + [f"u_{j}" for j in range(k)] + [f"v_{j}" for j in range(k)]
    rows = np.column_stack([snap.grid.x, u.T, v.T])
    _write_table(path, header, ([fmt(c) for c in r] for r in rows))


def _setup(cfg):
    rule = build_quadrature(cfg.space)
    return cfg.model, cfg.grid, rule


def _snapshot_times(cfg):
    return tuple(t for t in cfg.run.snapshots if 0 < t < cfg.run.t_end)


def cmd_simulate(cfg, out, args):
    model, grid, rule = _setup(cfg)
    eps = args.epsilon if args.epsilon is not None else cfg.run.epsilons[0]
    init = cfg.data.field(model, grid, rule.nodes)
    traj = evolve(model, init, SolveConfig(eps, cfg.run.t_end, cfg.run.cfl, _snapshot_times(cfg),
                                           cfg.run.splitting))
    _write_table(out / "nodes.csv", ["node"] + [f"y_{j}" for j in range(rule.dim)] + ["weight"],
                 ([j, *map(fmt, rule.nodes[j]), fmt(rule.weights[j])] for j in range(rule.size)))
    for j, snap in enumerate(traj.snapshots):
        name = f"snapshot_{j:03d}.csv"
        _write_snapshot(out / name, snap, model)
    _write_table(out / "times.csv", ["index", "time"],
                 ([j, fmt(t)] for j, t in enumerate(traj.times)))
    report = DiagnosticsReport("simulate")
    report.add_scalar("epsilon", eps, "run.epsilons[0] unless overridden")
    report.add_scalar("equilibration_norm", equilibration_norm(traj, model, rule),
                      "int int int |v - f(u)|^2 rho, exact substep accumulation")
    ubar, vbar = equilibrium_reference(model, init.u, rule, grid.dx, grid.x_hi - grid.x_lo)
    report.add_scalar("reference_u", ubar, "x-y mean of u0")
    report.add_scalar("reference_v", vbar, "f(reference_u)")
    report.add_scalar("steps", traj.steps, "time steps taken")
    report.add_scalar("linf_bound", traj.linf_bound, "invariant-region bound")
    report.add_flag("linf_bound_ok", traj.bound_violations == 0, "checked every step")
    if grid.bc == "periodic":
        ints = np.array(traj.u_integrals)
        rel = float(np.max(np.abs(ints - ints[0]) / np.maximum(np.abs(ints[0]), 1e-300)))
        report.add_scalar("conservation_rel", rel, "relative drift of int u dx")
        report.add_flag("conservation_ok", rel <= 1e-12, "drift <= 1e-12")
    report.write(out, "report")
    return report


def cmd_sweep_epsilon(cfg, out, args):
    model, grid, rule = _setup(cfg)
    init = cfg.data.field(model, grid, rule.nodes)
    u_eq = solve_scalar(model, grid, rule, init.u, cfg.run.t_end, cfg.run.cfl).final

    def one(eps):
        traj = evolve(model, init, SolveConfig(eps, cfg.run.t_end, cfg.run.cfl,
                                               splitting=cfg.run.splitting))
        return (eps, equilibration_norm(traj, model, rule),
                l1_distance(traj.final, u_eq, rule, grid.dx), traj.bound_violations)

    rows = _map(one, list(cfg.run.epsilons), args.threads)
    _write_table(out / "sweep_epsilon.csv",
                 ["epsilon", "equilibration_norm", "l1_to_equilibrium", "bound_violations"], rows)
    report = DiagnosticsReport("sweep_epsilon")
    report.add_curve("equilibration", [r[0] for r in rows], [r[1] for r in rows],
                     "epsilon vs equilibration norm")
    report.add_curve("limit_distance", [r[0] for r in rows], [r[2] for r in rows],
                     "epsilon vs ||u^eps(T) - u_eq(T)||_L1rho")
    report.add_flag("linf_bound_ok", all(r[3] == 0 for r in rows), "every run, every step")
    if len(rows) >= 3:
        slope = fit_decay_rate([(r[0], r[1]) for r in rows])
        report.add_scalar("decay_slope", slope, "least-squares log-log slope")
        report.add_flag("decay_rate_ok", 0.8 <= slope <= 1.2, "slope in [0.8, 1.2]")
    else:
        log.warning("sweep-epsilon needs at least 3 epsilons for a decay slope; got %d", len(rows))
    plateau = 5 * grid.dx * float(np.ptp(init.u))
    report.add_scalar("plateau_tol", plateau, "5 dx (data range)")
    dist = [r[2] for r in rows]
    shrinking = all(b <= a or a <= plateau for a, b in zip(dist, dist[1:]))
    report.add_flag("limit_convergence_ok", shrinking, "distance decreases until the plateau")
    report.write(out, "report")
    return report


def cmd_sweep_nu(cfg, out, args):
    model, grid, rule = _setup(cfg)
    if not cfg.run.nus:
        raise ConfigError("run.nus: sweep-nu needs at least one viscosity")
    eps = cfg.run.epsilons[-1]
    init = cfg.data.field(model, grid, rule.nodes)
    ref = evolve(model, init, SolveConfig(eps, cfg.run.t_end, cfg.run.cfl)).final

    def one(nu):
        traj = fd_solve(model, grid, rule, init, nu, eps, cfg.run.t_end, cfg.run.cfl)
        return nu, l1_distance(traj.final, ref, rule, grid.dx)

    rows = _map(one, sorted(cfg.run.nus, reverse=True), args.threads)
    _write_table(out / "sweep_nu.csv", ["nu", "l1_to_inviscid"], rows)
    report = DiagnosticsReport("sweep_nu")
    report.add_scalar("epsilon", eps, "smallest configured epsilon")
    report.add_curve("viscous_distance", [r[0] for r in rows], [r[1] for r in rows],
                     "nu vs ||fd(nu) - relax||_L1rho")
    dist = [r[1] for r in rows]
    report.add_flag("monotone", all(b < a for a, b in zip(dist, dist[1:])), "decreasing in nu")
    tol = 5 * grid.dx * float(np.ptp(init.u))
    report.add_flag("final_small", dist[-1] <= tol, "last distance <= 5 dx (data range)")
    report.write(out, "report")
    return report


def cmd_verify(cfg, out, args):
    report = run_battery(cfg, epsilon=args.epsilon)
    report.write(out, "report")
    return report


def cmd_stats(cfg, out, args):
    model, grid, rule = _setup(cfg)
    eps = args.epsilon if args.epsilon is not None else cfg.run.epsilons[-1]
    init = cfg.data.field(model, grid, rule.nodes)
    final = evolve(model, init, SolveConfig(eps, cfg.run.t_end, cfg.run.cfl,
                                            splitting=cfg.run.splitting)).final
    eq = solve_scalar(model, grid, rule, init.u, cfg.run.t_end, cfg.run.cfl).final
    report = DiagnosticsReport("stats")
    for tag, fld in (("relax", final), ("equilibrium", eq)):
        mean, var = moments(fld, rule)
        report.add_curve(f"mean_{tag}", grid.x, mean, f"E[u(x, T)], {tag} solver")
        report.add_curve(f"variance_{tag}", grid.x, var, f"Var[u(x, T)], {tag} solver")
    report.write(out, "report")
    return report


def cmd_cv(cfg, out, args):
    model, _, rule = _setup(cfg)
    eps = args.epsilon if args.epsilon is not None else cfg.run.epsilons[-1]
    res = cv_estimate(model, cfg, eps, rule, cfg.run.mc_samples, cfg.run.seed,
                      PointFunctional(cfg.observe_x))
    report = DiagnosticsReport("cv")
    report.add_scalar("epsilon", eps, "relaxation time of the sampled runs")
    report.add_scalar("plain_estimate", res.plain_mc[0], "mean of phi(u^eps)")
    report.add_scalar("plain_stderr", res.plain_mc[1], "sample std / sqrt(M)")
    report.add_scalar("cv_estimate", res.cv[0], "mean(phi(u^eps) - phi(u_eq)) + E_quad[phi(u_eq)]")
    report.add_scalar("cv_stderr", res.cv[1], "std of the differences / sqrt(M)")
    report.add_scalar("quadrature_value", res.quad_value, "E_quad[phi(u_eq)]")
    report.add_scalar("samples", res.samples, f"successful of {cfg.run.mc_samples}, seed {cfg.run.seed}")
    if np.isfinite(res.reduction):
        report.add_scalar("reduction", res.reduction, "plain variance / cv variance")
    report.add_flag("reduction_gt_1", res.reduction > 1, "variance reduced")
    report.add_flag("no_failures", not res.failures, f"{len(res.failures)} failed samples")
    report.write(out, "report")
    return report


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-epsilon": cmd_sweep_epsilon,
    "sweep-nu": cmd_sweep_nu,
    "verify": cmd_verify,
    "stats": cmd_stats,
    "cv": cmd_cv,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="relaxlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        p.add_argument("--threads", type=int, default=1, help="parallel sweep members")
        p.add_argument("--epsilon", type=float, help="override the relaxation time")
    return parser


def _manifest(cfg, command, files, report):
    return {
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "seed": cfg.run.seed,
        "versions": {"relaxlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "files": sorted(set(files)),
        "passed": report.passed,
        "flags": report.flags,
    }


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    root = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out = root / config_hash(cfg) / args.command
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except RelaxLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    files = [p.name for p in out.iterdir() if p.name != "manifest.json"]
    manifest = _manifest(cfg, args.command, files, report)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for name, ok in report.flags.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"results in {out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
