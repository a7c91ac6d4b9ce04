"""
Relaxing towards equilibrium
============================

Run the random Burgers scenario for a range of relaxation times and watch
two things shrink: the accumulated distance from the equilibrium curve
v = f(u), and the gap between u^eps and the equilibrium solution.
"""

import dataclasses

import numpy as np

from relaxlab.diagnostics import equilibration_norm, fit_decay_rate, l1_distance
from relaxlab.equilibrium import solve_scalar
from relaxlab.params import build_quadrature
from relaxlab.relax import Grid1D, SolveConfig, evolve
from relaxlab.scenario import default_burgers

# a coarser copy of the default scenario keeps the demo fast
cfg = default_burgers()
cfg = dataclasses.replace(cfg, grid=Grid1D(0.0, 2 * np.pi, 256))
model, grid, run = cfg.model, cfg.grid, cfg.run
rule = build_quadrature(cfg.space)
init = cfg.data.field(model, grid, rule.nodes)

# the equilibrium reference: the scalar law u_t + f(u)_x = 0 for every node
u_eq = solve_scalar(model, grid, rule, init.u, run.t_end, run.cfl).final

print(f"{'eps':>8} {'equilibration':>14} {'||u - u_eq||':>13}")
pairs = []
for eps in run.epsilons:
    traj = evolve(model, init, SolveConfig(eps, run.t_end, run.cfl))
    norm = equilibration_norm(traj, model, rule)
    dist = l1_distance(traj.final, u_eq, rule, grid.dx)
    pairs.append((eps, norm))
    print(f"{eps:8.0e} {norm:14.4e} {dist:13.4e}")

# the equilibration integral should scale like eps
print(f"log-log slope: {fit_decay_rate(pairs):.3f}")
