"""
Statistics over the random parameter
====================================

Mean and variance of u(x, T) from tensor quadrature, then a Monte Carlo
estimate of E[u(pi, T)] with the equilibrium solution as a control
variate.
"""

import dataclasses

import numpy as np

from relaxlab.diagnostics import PointFunctional, cv_estimate, moments
from relaxlab.params import build_quadrature
from relaxlab.relax import Grid1D, SolveConfig, evolve
from relaxlab.scenario import default_burgers

cfg = default_burgers()
cfg = dataclasses.replace(cfg, grid=Grid1D(0.0, 2 * np.pi, 256))
model, grid, run = cfg.model, cfg.grid, cfg.run
rule = build_quadrature(cfg.space)
init = cfg.data.field(model, grid, rule.nodes)
final = evolve(model, init, SolveConfig(1e-3, run.t_end)).final

mean, var = moments(final, rule)
for x0 in (np.pi / 2, np.pi, 3 * np.pi / 2):
    j = int(np.argmin(np.abs(grid.x - x0)))
    print(f"x = {grid.x[j]:.3f}: mean {mean[j]:.5f}, std {np.sqrt(var[j]):.5f}")

res = cv_estimate(model, cfg, 1e-3, rule, 64, seed=1, functional=PointFunctional(np.pi))
print(f"plain MC       {res.plain_mc[0]:.6f} +- {res.plain_mc[1]:.1e}")
print(f"control variate {res.cv[0]:.6f} +- {res.cv[1]:.1e}")
print(f"variance reduction {res.reduction:.0f}x, quadrature E[u_eq(pi)] = {res.quad_value:.6f}")
