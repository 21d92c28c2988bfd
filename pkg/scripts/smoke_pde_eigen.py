"""Smoke: mp tridiagonal eigenpath vs Sturm oracle + physics expectations."""
import math
import sys
import time

import mpmath as mp
import numpy as np

sys.path.insert(0, "/root/pkg/tests")
from wellexit import pde
from wellexit.landscape.geometry import Interval
from wellexit.landscape.grid import build_grid
from wellexit.landscape.potentials import Polynomial, double_well_1d
import oracles

# float(mpf) overflow behavior probe
try:
    big = float(mp.mpf(10) ** 400)
    print(f"float(1e400 mpf) = {big}")
except OverflowError as e:
    print(f"float(1e400 mpf) raises OverflowError: {e}")

# --- f = 0 on (0,1), sp = 1/256 ---
grid = build_grid(Interval(0.0, 1.0), 1.0 / 256)
h = 0.1
op = pde.assemble(Polynomial({(0,): 0.0}, name="zero"), grid, h)
t0 = time.perf_counter()
ep = pde.principal_eigenpair(op)
t1 = time.perf_counter()
sp = 1.0 / 256
lam_exact = (h / 2) * 2 * (1 - math.cos(math.pi * sp)) / sp**2
print(f"\nf=0: lam={ep.lambda_h:.12e} exact={lam_exact:.12e} "
      f"rel={abs(ep.lambda_h-lam_exact)/lam_exact:.2e}")
print(f"     res={ep.residual:.3e} (cert {1e-8*ep.lambda_h:.3e}) "
      f"its={ep.iterations} t={t1-t0:.2f}s nu_sum={ep.nu.sum():.15f}")
lam2_exact = (h / 2) * 2 * (1 - math.cos(2 * math.pi * sp)) / sp**2
print(f"     lam2={ep.lambda_2:.12e} exact={lam2_exact:.12e} "
      f"rel={abs(ep.lambda_2-lam2_exact)/lam2_exact:.2e}")

# Sturm on the same mp matrix
dps = pde.required_dps(op)
with mp.workdps(dps):
    diag, off = pde._tridiag_entries(op)
    offs = [off] * (len(diag) - 1)
ev = oracles.tridiag_smallest_eigenvalues(diag, offs, k=2, dps=dps + 10)
print(f"     sturm lam1={float(ev[0]):.12e} lam2={float(ev[1]):.12e}")
print(f"     rel vs sturm: {abs(ep.lambda_h-float(ev[0]))/float(ev[0]):.2e} "
      f"{abs(ep.lambda_2-float(ev[1]))/float(ev[1]):.2e}")

# --- double well on (-1.5, 1.5), ~400 interior nodes ---
dw = double_well_1d()
grid = build_grid(Interval(-1.5, 1.5), 3.0 / 400)
print(f"\ndw grid: ni={grid.n_interior} sp={grid.spacing[0]}")
barrier = (1.5**2 - 1) ** 2  # f at the boundary = 1.5625
for h in (0.1, 0.07, 0.05):
    op = pde.assemble(dw, grid, h)
    print(f"h={h}: dps={pde.required_dps(op)}")
    t0 = time.perf_counter()
    ep = pde.principal_eigenpair(op)
    t1 = time.perf_counter()
    dps = pde.required_dps(op)
    with mp.workdps(dps):
        diag, off = pde._tridiag_entries(op)
        offs = [off] * (len(diag) - 1)
    ev = oracles.tridiag_smallest_eigenvalues(diag, offs, k=2, dps=dps + 10)
    s1, s2 = float(ev[0]), float(ev[1])
    pref = ep.lambda_h * math.exp(2 * barrier / h)
    rate = -(h / 2) * math.log(ep.lambda_h)
    gap = ep.lambda_2 / ep.lambda_h
    gap_pred = math.exp(2 * (barrier - 1.0) / h)
    print(f"  lam1={ep.lambda_h:.6e} sturm={s1:.6e} "
          f"rel={abs(ep.lambda_h-s1)/s1:.2e}")
    print(f"  lam2={ep.lambda_2:.6e} sturm={s2:.6e} "
          f"rel={abs(ep.lambda_2-s2)/s2:.2e}")
    print(f"  -(h/2)ln lam={rate:.4f} pref={pref:.1f} "
          f"gap={gap:.3e} (pred_scale {gap_pred:.3e})")
    print(f"  res={ep.residual:.3e} cert={1e-8*ep.lambda_h:.3e} "
          f"pass={ep.residual < 1e-8*ep.lambda_h} its={ep.iterations} "
          f"t={t1-t0:.2f}s")
    print(f"  nu_sum={ep.nu.sum():.15f} log_Z={ep.log_Z_h:.6f} "
          f"laplace={(ep.log_Z_h - 0.25*math.log(math.pi*h)):.6f}")
