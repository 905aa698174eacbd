"""Crank-Nicolson finite differences on the truncated strip.

A deliberately plain second-order referee for the spectral solver: centred
Laplacian (periodic in x, Dirichlet rows in y), Crank-Nicolson in time and a
fixed-point inner loop for the nonlinearity.  It samples the scenario's
analytic data directly and never touches a spectral transform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .spectral import ContractViolation, evaluate


class FdStepError(RuntimeError):
    """The nonlinear inner loop did not converge; the time step is too large."""


@dataclass(frozen=True)
class FdGrid:
    L_x: float
    M_x: int
    M_y: int
    dt: float

    def __post_init__(self):
        if self.M_y < 3:
            raise ContractViolation("M_y must be >= 3 (two boundary rows plus interior)")
        if self.M_x < 4:
            raise ContractViolation("M_x must be >= 4")
        if not self.dt > 0:
            raise ContractViolation("dt must be positive")

    @property
    def dx(self) -> float:
        return self.L_x / self.M_x

    @property
    def dy(self) -> float:
        return 1.0 / (self.M_y - 1)

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L_x + self.dx * np.arange(self.M_x)

    @property
    def y(self) -> np.ndarray:
        return self.dy * np.arange(self.M_y)


@dataclass(frozen=True, eq=False)
class FdTrajectory:
    """Node values including the boundary rows, shape (n_times, M_x, M_y)."""

    fdgrid: FdGrid
    t: np.ndarray
    values: np.ndarray

    def mass(self) -> np.ndarray:
        g = self.fdgrid
        return np.sum(np.abs(self.values[:, :, 1:-1]) ** 2, axis=(1, 2)) * g.dx * g.dy


def laplacian(fdgrid: FdGrid) -> sp.csc_matrix:
    """Interior-node Laplacian, unknowns ordered (i, j) row-major over interior j."""
    mx, my = fdgrid.M_x, fdgrid.M_y - 2
    ex = np.ones(mx)
    Dx = sp.diags([ex[:-1], -2 * ex, ex[:-1]], [-1, 0, 1], shape=(mx, mx), format="lil")
    Dx[0, mx - 1] = 1.0
    Dx[mx - 1, 0] = 1.0
    ey = np.ones(my)
    Dy = sp.diags([ey[:-1], -2 * ey, ey[:-1]], [-1, 0, 1], shape=(my, my))
    return (sp.kron(Dx.tocsr(), sp.identity(my)) / fdgrid.dx ** 2
            + sp.kron(sp.identity(mx), Dy) / fdgrid.dy ** 2).tocsc()


def cn_solve(scn, fdgrid: FdGrid, save_times=None, inner_tol: float = 1e-12,
             inner_max_iter: int = 200) -> FdTrajectory:
    """Integrate the scenario on ``fdgrid`` up to ``scn.T``.

    Uses ``scn.data`` (analytic phi, h1, h2) and ``scn.source`` when present.
    The nonlinear term is the midpoint average
    lambda * (|u^{n+1}|^{p-2} + |u^n|^{p-2})/2 * (u^{n+1} + u^n)/2, which makes the
    scheme conserve discrete mass exactly for zero wall data.
    """
    data = scn.data
    if data is None:
        raise ContractViolation("cn_solve needs a scenario built from analytic data functions")
    nsteps = int(round(scn.T / fdgrid.dt))
    if abs(nsteps * fdgrid.dt - scn.T) > 1e-9 * scn.T:
        raise ContractViolation("T must be an integer multiple of the FD time step")
    save_times = [scn.T] if save_times is None else list(save_times)
    save_steps = {int(round(t / fdgrid.dt)): t for t in save_times}

    X, Y = np.meshgrid(fdgrid.x, fdgrid.y, indexing="ij")
    xi_, yi_ = X[:, 1:-1], Y[:, 1:-1]
    mx, my = fdgrid.M_x, fdgrid.M_y - 2
    lam, p, dt = scn.lam, scn.p, fdgrid.dt

    def walls(t):
        return (np.broadcast_to(data.h1(fdgrid.x, t), (mx,)).astype(complex),
                np.broadcast_to(data.h2(fdgrid.x, t), (mx,)).astype(complex))

    def wall_vector(b0, b1):
        B = np.zeros((mx, my), dtype=complex)
        B[:, 0] += b0 / fdgrid.dy ** 2
        B[:, -1] += b1 / fdgrid.dy ** 2
        return B.ravel()

    def source(t):
        if scn.source is None:
            return 0.0
        return np.broadcast_to(scn.source(xi_, yi_, t), (mx, my)).ravel()

    Lh = laplacian(fdgrid)
    eye = sp.identity(mx * my, format="csc")
    lhs = spla.splu((eye - 0.5j * dt * Lh).tocsc())
    rhs_op = (eye + 0.5j * dt * Lh).tocsr()

    u = np.broadcast_to(data.phi(xi_, yi_), (mx, my)).astype(complex).ravel()
    b0, b1 = walls(0.0)

    def full(u_int, b0, b1):
        out = np.empty((mx, my + 2), dtype=complex)
        out[:, 0], out[:, -1] = b0, b1
        out[:, 1:-1] = u_int.reshape(mx, my)
        return out

    saved_t, saved = [], []
    if 0 in save_steps:
        saved_t.append(0.0)
        saved.append(full(u, b0, b1))
    Bn, gn = wall_vector(b0, b1), source(0.0)
    for step in range(1, nsteps + 1):
        t1 = step * dt
        c0, c1 = walls(t1)
        Bn1, gn1 = wall_vector(c0, c1), source(t1)
        base = rhs_op @ u + 0.5j * dt * (Bn + Bn1) + 0.5j * dt * (gn + gn1)
        if lam == 0:
            new = lhs.solve(base)
        else:
            an = np.abs(u) ** (p - 2)
            new = u.copy()
            for _ in range(inner_max_iter):
                # divergence is detected below, so overflow on the way is not an error
                with np.errstate(over="ignore", invalid="ignore"):
                    nl = lam * 0.5 * (np.abs(new) ** (p - 2) + an) * 0.5 * (new + u)
                    cand = lhs.solve(base + 1j * dt * nl)
                if not np.all(np.isfinite(cand)):
                    raise FdStepError(f"inner loop diverged at t={t1:.6g}; reduce dt")
                delta = np.max(np.abs(cand - new))
                new = cand
                if delta <= inner_tol * max(1.0, np.max(np.abs(new))):
                    break
            else:
                raise FdStepError(f"inner loop failed at t={t1:.6g}; reduce dt")
        u, Bn, gn = new, Bn1, gn1
        if step in save_steps:
            saved_t.append(save_steps[step])
            saved.append(full(u, c0, c1))
    return FdTrajectory(fdgrid, np.array(saved_t), np.array(saved))


@dataclass(frozen=True)
class ErrorRow:
    t: float
    l2: float
    linf: float


def compare(spec_traj, fd_traj: FdTrajectory, times=None, h1=None, h2=None) -> list[ErrorRow]:
    """L^2 / L^inf differences on the FD interior nodes at the requested times.

    The spectral series is evaluated at the FD nodes; when wall data ``h1``,
    ``h2`` (BoundaryData) are given the series is evaluated with the linear
    wall lift so the truncated sine tail does not pollute the comparison.
    """
    g = fd_traj.fdgrid
    times = list(fd_traj.t) if times is None else list(times)
    rows = []
    for t in times:
        jf = int(np.argmin(np.abs(fd_traj.t - t)))
        js = int(np.argmin(np.abs(spec_traj.t - t)))
        if abs(fd_traj.t[jf] - t) > 1e-9 or abs(spec_traj.t[js] - t) > 1e-9:
            raise ContractViolation(f"time {t} not sampled by both trajectories")
        b0 = h1.at(t) if h1 is not None else None
        b1 = h2.at(t) if h2 is not None else None
        spec_vals = evaluate(spec_traj.coeffs[js], spec_traj.grid, g.x, g.y[1:-1], b0, b1)
        diff = spec_vals - fd_traj.values[jf][:, 1:-1]
        rows.append(ErrorRow(float(t), float(np.sqrt(np.sum(np.abs(diff) ** 2) * g.dx * g.dy)),
                             float(np.max(np.abs(diff)))))
    return rows
