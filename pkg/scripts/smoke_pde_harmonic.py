"""Smoke: Dirichlet solves vs exact 1D exit probabilities; qsd law."""
import math
import time

import numpy as np

from wellexit import pde
from wellexit.exitlaw import exact_exit_probability_1d, theoretical_weights
from wellexit.landscape.geometry import Interval, project_to_boundary
from wellexit.landscape.grid import build_grid
from wellexit.landscape.potentials import double_well_1d

tilt = 0.1
f = double_well_1d(tilt=tilt)
dom = Interval(-1.5, 1.5)
grid = build_grid(dom, 3.0 / 400)
bc = grid.boundary_coords
print(f"boundary coords: {bc.ravel()}")

for h in (0.3, 0.2, 0.1, 0.05):
    t0 = time.perf_counter()
    sol = pde.solve_harmonic(f, grid, h, lambda c: 1.0 if c[0] > 0 else 0.0)
    t1 = time.perf_counter()
    errs = []
    for x in (-1.0, -0.5, 0.0, 0.5, 1.0):
        v = sol.value_at([x])
        p = exact_exit_probability_1d(f, (dom.a, dom.b), x, h)
        errs.append(abs(v - (1 - p)))
    print(f"h={h}: max|err|={max(errs):.3e} res={sol.residual:.2e} "
          f"method={sol.method} its={sol.iterations} t={t1-t0:.2f}s")

# spacing halving at h=0.2: O(sp^2)?
h = 0.2
x = -1.0
p_exact = 1 - exact_exit_probability_1d(f, (dom.a, dom.b), x, h)
prev = None
for ndiv in (100, 200, 400, 800):
    g = build_grid(dom, 3.0 / ndiv)
    sol = pde.solve_harmonic(f, g, h, lambda c: 1.0 if c[0] > 0 else 0.0)
    err = abs(sol.value_at([x]) - p_exact)
    ratio = "" if prev is None else f" ratio={prev/err:.2f}"
    print(f"  ndiv={ndiv}: err={err:.3e}{ratio} method={sol.method} "
          f"its={sol.iterations}")
    prev = err

# qsd exit law vs theoretical weights trend
class HalfLine:
    def __init__(self, sign):
        self.sign = sign
    def contains(self, p):
        return p[0] * self.sign > 0

for h in (0.3, 0.2, 0.1):
    op = pde.assemble(f, grid, h)
    ep = pde.principal_eigenpair(op)
    law = pde.qsd_exit_law(f, grid, h, ep, [HalfLine(-1), HalfLine(1)])
    print(f"h={h}: qsd law={law[0]:.6f},{law[1]:.6f} sum={sum(law):.12f}")

# mass check: F == 1
op = pde.assemble(f, grid, 0.2)
ep = pde.principal_eigenpair(op)
sol = pde._solve_with_operator(op, np.ones(grid.n_boundary))
mass = float(ep.nu @ sol.values)
print(f"F==1 qsd mass: {mass:.15f}")
