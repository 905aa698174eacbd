"""Free propagator, Duhamel integral and boundary integral operator.

All three act mode-wise on the ``(k, n)`` table.  Time integrals use
exponential product integration: the data is interpolated piecewise linearly
in time and the oscillatory factor ``exp(-i*omega*(t - tau))`` is integrated
exactly, so large ``omega`` costs no accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (BoundaryData, ContractViolation, Grid, SpectralField, Trajectory,
                       evaluate, lift_coefficients, uniform_step)


@dataclass(frozen=True, eq=False)
class Propagator:
    grid: Grid

    @property
    def omega(self) -> np.ndarray:
        return self.grid.omega()

    def phase(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.omega * t)


def apply_W0(phi: SpectralField, t: float) -> SpectralField:
    if not np.isfinite(t):
        raise ContractViolation("t must be finite")
    return SpectralField(phi.grid, phi.coeffs * Propagator(phi.grid).phase(t))


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2, accurate near z = 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.5
    zs = np.where(small, z, 0.0)
    # Taylor: phi_k(z) = sum_j z^j / (j+k)!
    p1 = np.zeros_like(zs)
    p2 = np.zeros_like(zs)
    term1 = np.ones_like(zs)      # z^j/(j+1)!
    term2 = np.full_like(zs, 0.5)  # z^j/(j+2)!
    for j in range(24):
        p1 += term1
        p2 += term2
        term1 = term1 * zs / (j + 2)
        term2 = term2 * zs / (j + 3)
    zl = np.where(small, 1.0, z)
    ez = np.exp(zl)
    big1 = (ez - 1.0) / zl
    big2 = (ez - 1.0 - zl) / zl ** 2
    return np.where(small, p1, big1), np.where(small, p2, big2)


def _product_weights(omega: np.ndarray, h: float):
    z = -1j * omega * h
    p1, p2 = phi_functions(z)
    return np.exp(z), h * (p1 - p2), h * p2


def integrate_forced(g: np.ndarray, t: np.ndarray, omega: np.ndarray,
                     initial: np.ndarray | None = None) -> np.ndarray:
    """Solve v' = -i*omega*v + g(t) exactly for piecewise-linear g.

    ``g`` has shape (M+1, ...) matching ``omega`` on trailing axes.  Returns
    v on the time grid with v(t_0) = ``initial`` (default 0).
    """
    h = uniform_step(t)
    decay, w_old, w_new = _product_weights(omega, h)
    out = np.empty(g.shape, dtype=complex)
    out[0] = 0.0 if initial is None else initial
    for m in range(len(t) - 1):
        out[m + 1] = decay * out[m] + w_old * g[m] + w_new * g[m + 1]
    return out


def duhamel(f_traj: Trajectory, t_grid: np.ndarray | None = None) -> Trajectory:
    """i * int_0^t W0(t - tau) f(tau) dtau on the trajectory's time grid."""
    t = f_traj.t if t_grid is None else np.asarray(t_grid, dtype=float)
    if len(t) != len(f_traj):
        raise ContractViolation("t_grid length does not match the forcing trajectory")
    if abs(t[0]) > 0:
        raise ContractViolation("duhamel time grid must start at 0")
    out = integrate_forced(1j * f_traj.coeffs, t, f_traj.grid.omega())
    return Trajectory(f_traj.grid, t, out)


def boundary_forcing(h1: np.ndarray, h2: np.ndarray, grid: Grid) -> np.ndarray:
    """Mode forcing 2*n*pi*(h1 - (-1)^n h2) from x-coefficients of the wall data.

    Projecting the equation on sin(n*pi*y) and integrating by parts twice gives,
    for the sine coefficient c_n (u = sum c_n sin(n*pi*y)),
    c_n' = -i*omega*c_n + i * 2*n*pi*(h1 - (-1)^n h2) + i * f_n.
    """
    n = grid.n
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return 2.0 * np.pi * n * (np.asarray(h1)[..., None] - sign * np.asarray(h2)[..., None])


def apply_Wb(h1: BoundaryData, h2: BoundaryData, t_grid: np.ndarray | None = None) -> Trajectory:
    """Boundary integral operator: zero initial data, zero forcing, walls h1 (y=0), h2 (y=1)."""
    if h1.grid != h2.grid:
        raise ContractViolation("h1 and h2 live on different grids")
    if len(h1.t_grid) != len(h2.t_grid) or not np.allclose(h1.t_grid, h2.t_grid, rtol=0, atol=1e-12):
        raise ContractViolation("h1 and h2 have different time grids")
    t = h1.t_grid if t_grid is None else np.asarray(t_grid, dtype=float)
    if len(t) != len(h1.t_grid) or not np.allclose(t, h1.t_grid, rtol=0, atol=1e-12):
        raise ContractViolation("t_grid does not match the boundary data time grid")
    grid = h1.grid
    g = 1j * boundary_forcing(h1.xhat, h2.xhat, grid)
    return Trajectory(grid, t, integrate_forced(g, t, grid.omega()))


def boundary_trace(traj: Trajectory, side: str, epsilon: float | None = None) -> np.ndarray:
    """Physical values at y = epsilon (side 'y=0') or 1 - epsilon (side 'y=1').

    The sine series vanishes on the walls, so traces are read off just inside.
    Default epsilon is half a grid spacing.  Returns shape (M+1, N_x).
    """
    grid = traj.grid
    eps = 0.5 * grid.dy if epsilon is None else float(epsilon)
    if not 0 < eps < 0.5:
        raise ContractViolation("epsilon must lie in (0, 1/2)")
    if side not in ("y=0", "y=1"):
        raise ContractViolation(f"side must be 'y=0' or 'y=1', got {side!r}")
    y = eps if side == "y=0" else 1.0 - eps
    return evaluate(traj.coeffs, grid, grid.x, np.array([y]))[..., 0]


def normal_derivative(coeffs: np.ndarray, b0: np.ndarray, b1: np.ndarray, grid: Grid,
                      side: str) -> np.ndarray:
    """x-coefficients of u_y on a wall, using the linear lift of the wall values.

    u_y = (b1 - b0) + sum n*pi*r_n cos(n*pi*y) with r the lift remainder.
    """
    r = coeffs - lift_coefficients(b0, b1, grid)
    n = grid.n
    if side == "y=0":
        cosv = np.ones_like(n)
    elif side == "y=1":
        cosv = np.where(n % 2 == 0, 1.0, -1.0)
    else:
        raise ContractViolation(f"side must be 'y=0' or 'y=1', got {side!r}")
    return (np.asarray(b1) - np.asarray(b0)) + np.sum(np.pi * n * cosv * r, axis=-1)
