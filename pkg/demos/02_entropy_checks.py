"""
Entropy checks on a Burgers shock
=================================

The equilibrium solver's shock run should dissipate every Kruzhkov entropy
|u - k| with k between the two shock states, and at most produce
discretisation noise for the others.  Then extend the square entropy u^2
to the relaxation system and check its on-curve identities.
"""

import numpy as np

from relaxlab.entropy import (Bump, dissipation_check, entropy_residual, extend_entropy,
                              kruzhkov_pair, residual_tolerance, square_pair)
from relaxlab.equilibrium import solve_scalar
from relaxlab.model import PSystemModel
from relaxlab.params import ParamSpace, build_quadrature
from relaxlab.relax import Grid1D

model = PSystemModel.burgers(2.0, (-1.0, 2.0))
grid = Grid1D(-2.0, 3.0, 500, "outflow")
rule = build_quadrature(ParamSpace.uniform(1, 1))
u0 = np.where(grid.x < 0, 1.0, 0.0)[None]
traj = solve_scalar(model, grid, rule, u0, 1.0, snapshot_times=tuple(np.linspace(0.01, 0.99, 99)))

# a space-time bump sitting on the shock path x = t / 2
bump = Bump(0.25, 0.5, 0.5, 0.4)
tol = residual_tolerance(bump, grid.dx)
print(f"tolerance C dx ||phi||_C1 = {tol:.3e}")
for k in np.linspace(-0.5, 1.5, 9):
    res = entropy_residual(traj, kruzhkov_pair(model, k), rule, [bump], speed=1.0)[0]
    print(f"k = {k:+.2f}  residual {res:+.4e}")

# extension of l(u) = u^2 to eta(u, v) = h(au + v) + k(au - v)
burgers = PSystemModel.burgers(2.0, (-1.0, 1.0))
pair = extend_entropy(burgers, square_pair(burgers), (-1.0, 1.0))
u = np.linspace(-1, 1, 1001)
print("max |eta(u, f(u)) - u^2| =", np.max(np.abs(pair.eta(u, burgers.f(u)) - u**2)))
print("max |d_v eta(u, f(u))|   =", np.max(np.abs(pair.deta_dv(u, burgers.f(u)))))

rng = np.random.default_rng(0)
uu = rng.uniform(-0.5, 0.5, 200)
chk = dissipation_check(pair, burgers, uu, burgers.f(uu) + rng.uniform(-0.3, 0.3, 200))
print(f"dissipation constant estimate gamma = {chk.gamma_est:.4f}")
