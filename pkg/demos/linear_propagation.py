"""Free evolution, boundary forcing and the Duhamel term on a small grid.

Run: python3 demos/linear_propagation.py
"""
import numpy as np

from stripnls import BoundaryData, Grid, Scenario, march
from stripnls.diagnostics import mass_balance

grid = Grid(8.0, 32, 15)
xi = grid.xi[1]

# A single sine mode only rotates in phase.
scn = Scenario.from_functions(grid, 0.0, 3, lambda X, Y: np.exp(1j * np.pi * xi * X) * np.sin(np.pi * Y),
                              None, None, T=0.5, dt=1e-3, window_dt=0.05)
traj, report = march(scn)
exact = scn.phi.coeffs * np.exp(-1j * np.pi ** 2 * (xi ** 2 + 1) * 0.5)
print(f"single mode: max coefficient error at t=0.5 = {np.max(np.abs(traj.coeffs[-1] - exact)):.2e}")

# A driven lower wall pumps mass in through the boundary flux.
wall = lambda x, t: 0.3 * np.exp(-x ** 2) * np.sin(5 * np.pi * t) ** 2  # noqa: E731
scn = Scenario.from_functions(grid, 0.0, 3, lambda X, Y: 0 * X + 0j, wall, None, T=0.2, dt=1e-3)
traj, _ = march(scn)
m = mass_balance(traj, scn.h1, scn.h2)
print(f"driven wall: mass grows to {m.value[-1]:.4e}, balance residual {np.max(np.abs(m.residual)):.2e}")
