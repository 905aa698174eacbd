"""Defocusing cubic run: conservation residuals, Picard contraction and a finite-difference cross-check.

Run: python3 demos/conservation_and_oracle.py   (about half a minute)
"""
import numpy as np

from stripnls import FdGrid, Grid, Scenario, cn_solve, compare, march
from stripnls.diagnostics import energy_balance, mass_balance, trace_inequality_margin

grid = Grid(12.0, 128, 32)
phi = lambda X, Y: 0.1 * np.exp(-X ** 2) * np.sin(np.pi * Y) + 0j  # noqa: E731
scn = Scenario.from_functions(grid, -1.0, 3, phi, None, None, T=0.1, dt=1e-3, window_dt=0.01)
traj, report = march(scn)
print(f"Picard factors per window: max {max(report.contraction_factors):.2e}")

m, e = mass_balance(traj, scn.h1, scn.h2), energy_balance(traj, scn)
print(f"relative mass drift   {np.max(np.abs(m.residual)) / m.value[0]:.2e}")
print(f"relative energy drift {np.max(np.abs(e.residual)) / abs(e.value[0]):.2e}")
tm = trace_inequality_margin(traj, scn)
print(f"trace inequality: smallest margin / scale = {np.min(tm.margin) / tm.scale:.3f}")

for M_x, M_y in [(128, 33), (256, 65)]:
    fd = cn_solve(scn, FdGrid(12.0, M_x, M_y, 1e-3), save_times=[0.1])
    row = compare(traj, fd, [0.1], scn.h1, scn.h2)[0]
    print(f"Crank-Nicolson {M_x}x{M_y}: L2 difference at t=0.1 = {row.l2:.2e}")
