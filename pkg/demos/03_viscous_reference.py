"""
Viscous references
==================

Two views of the parabolic regularisation.  The Picard iteration builds
the mild solution through heat-kernel convolutions and contracts at a rate
we can predict.  The finite-difference solver adds explicit diffusion to
the relaxation scheme, and its distance to the inviscid run shrinks with
the viscosity.
"""

import dataclasses

import numpy as np

from relaxlab.checks import picard_data
from relaxlab.diagnostics import l1_distance
from relaxlab.model import PSystemModel
from relaxlab.params import build_quadrature
from relaxlab.relax import Grid1D, SolveConfig, evolve
from relaxlab.scenario import default_burgers
from relaxlab.viscous import (DiagonalSystem, PicardConfig, fd_solve, max_contraction_time,
                              picard_solve)

model = PSystemModel.burgers(2.0)
initial = picard_data(model, 0.5)
nu, eps = 0.2, 0.5
b0 = float(np.max(np.abs(initial(np.linspace(-1, 1, 2001)))))
T = 0.5 * max_contraction_time(DiagonalSystem.psystem(model, eps, 2 * b0), nu)
res = picard_solve(model, initial, (-1.0, 1.0), PicardConfig(nu=nu, epsilon=eps, T=T))
print(f"T = {T:.4f}, predicted contraction factor {res.factor:.3f}")
r = np.array(res.residuals)
for j, (a, b) in enumerate(zip(r, r[1:])):
    if a > 1e-13:
        print(f"  iteration {j + 1}: residual {b:.3e}, ratio {b / a:.3f}")

cfg = default_burgers()
grid = Grid1D(0.0, 2 * np.pi, 512)
cfg = dataclasses.replace(cfg, grid=grid)
rule = build_quadrature(cfg.space)
init = cfg.data.field(cfg.model, grid, rule.nodes)
eps, T = 1e-4, 0.2
ref = evolve(cfg.model, init, SolveConfig(eps, T)).final
for nu in (1e-2, 1e-3, 1e-4):
    out = fd_solve(cfg.model, grid, rule, init, nu, eps, T).final
    print(f"nu = {nu:.0e}: ||u_nu - u_0|| = {l1_distance(out, ref, rule, grid.dx):.4e}")
