"""Mass, energy and boundary-trace balance monitors for computed trajectories.

Wall data enter through the linear lift: with b0, b1 the wall values, a field
is ``b0 (1 - y) + b1 y + sum r_n sin(n pi y)`` and all y-integrals and wall
derivatives are taken from that form, so the slowly decaying sine tail of
non-vanishing wall data does not bias the quadratures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import normal_derivative
from .spectral import (BoundaryData, ContractViolation, Grid, Trajectory, discrete_lr,
                       lift_coefficients, lifted_to_physical, x_inverse)


@dataclass(eq=False)
class BalanceReport:
    t: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    mass_residual: np.ndarray
    energy_residual: np.ndarray
    trace_margin: np.ndarray
    h1_norm: np.ndarray
    dt: float = 0.0
    dx: float = 0.0
    dy: float = 0.0
    extras: dict = field(default_factory=dict)

    COLUMNS = ("t", "mass", "energy", "mass_residual", "energy_residual", "trace_margin", "h1_norm")

    def rows(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in self.COLUMNS])


@dataclass(frozen=True, eq=False)
class SeriesResult:
    """A monitored quantity, its balance term and the residual, per time sample."""

    t: np.ndarray
    value: np.ndarray
    flux: np.ndarray
    residual: np.ndarray


@dataclass(frozen=True, eq=False)
class TraceMargin:
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.rhs), initial=0.0))


@dataclass(frozen=True, eq=False)
class GrowthTable:
    t: np.ndarray
    h1_norm: np.ndarray
    running_sup: np.ndarray
    phi_h1: float
    h1_data_h1: float
    h2_data_h1: float


# ------------------------------------------------------------------ helpers

def _walls(h: BoundaryData | None, t: np.ndarray, grid: Grid) -> np.ndarray:
    if h is None:
        return np.zeros((len(t), grid.N_x), dtype=complex)
    return np.array([h.at(float(tt)) for tt in t])


def _cumtrapz(f: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros(len(t))
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (f[1:] + f[:-1]))
    return out


def _y_integrals(coeffs, b0, b1, grid: Grid):
    """Per x-mode int |u_k|^2 dy and int |d_y u_k|^2 dy from the lifted form."""
    lift = lift_coefficients(b0, b1, grid)
    r = coeffs - lift
    a, b = np.asarray(b0), np.asarray(b1)
    lin2 = (np.abs(a) ** 2 + np.abs(b) ** 2 + np.real(a * np.conj(b))) / 3.0
    u2 = lin2 + np.real(np.sum(np.conj(r) * lift, axis=-1)) + 0.5 * np.sum(np.abs(r) ** 2, axis=-1)
    uy2 = np.abs(b - a) ** 2 + 0.5 * np.sum((np.pi * grid.n) ** 2 * np.abs(r) ** 2, axis=-1)
    return u2, uy2


def lifted_l2_norms(coeffs: np.ndarray, b0: np.ndarray, b1: np.ndarray, grid: Grid) -> np.ndarray:
    """L^2 norm on the cell of the lifted field, batched over leading axes."""
    u2, _ = _y_integrals(coeffs, b0, b1, grid)
    return np.sqrt(grid.L_x * np.sum(u2, axis=-1))


def _quadratic_parts(traj: Trajectory, b0, b1):
    """||u||^2, ||u_x||^2 and ||u_y||^2 per time sample."""
    g = traj.grid
    u2, uy2 = _y_integrals(traj.coeffs, b0, b1, g)
    kx2 = (np.pi * g.xi) ** 2
    return (g.L_x * np.sum(u2, axis=-1), g.L_x * np.sum(kx2 * u2, axis=-1),
            g.L_x * np.sum(uy2, axis=-1))


def _pairing(a: np.ndarray, b: np.ndarray, grid: Grid) -> np.ndarray:
    """int a(x) conj(b(x)) dx from x-coefficients over the periodic cell."""
    return grid.L_x * np.sum(a * np.conj(b), axis=-1)


def _lp_p(traj: Trajectory, b0, b1, p: float) -> np.ndarray:
    vals = lifted_to_physical(traj.coeffs, b0, b1, traj.grid)
    return discrete_lr(vals, traj.grid, p) ** p


def _time_derivative(xhat: np.ndarray, t: np.ndarray) -> np.ndarray:
    if len(t) < 3:
        return np.gradient(xhat, t, axis=0)
    return np.gradient(xhat, t, axis=0, edge_order=2)


# ------------------------------------------------------------------ monitors

def mass_balance(traj: Trajectory, h1: BoundaryData | None = None,
                 h2: BoundaryData | None = None) -> SeriesResult:
    """residual(t) = ||u(t)||^2 - ||u(0)||^2 - 2 Im int_0^t [u_y conj(u)]_{y=0} - [..]_{y=1}."""
    g, t = traj.grid, traj.t
    b0, b1 = _walls(h1, t, g), _walls(h2, t, g)
    mass, _, _ = _quadratic_parts(traj, b0, b1)
    uy0 = normal_derivative(traj.coeffs, b0, b1, g, "y=0")
    uy1 = normal_derivative(traj.coeffs, b0, b1, g, "y=1")
    rate = 2 * np.imag(_pairing(uy0, b0, g)) - 2 * np.imag(_pairing(uy1, b1, g))
    flux = _cumtrapz(rate, t)
    return SeriesResult(t, mass, flux, mass - mass[0] - flux)


def energy_balance(traj: Trajectory, scn) -> SeriesResult:
    """E(t) = ||u_x||^2 + ||u_y||^2 - (2 lambda/p)||u||_p^p against the boundary work.

    residual(t) = E(t) - E(0) + 2 Re int_0^t int conj(h1_t) u_y(x,0) - 2 Re int_0^t int conj(h2_t) u_y(x,1).
    """
    g, t = traj.grid, traj.t
    b0, b1 = _walls(scn.h1, t, g), _walls(scn.h2, t, g)
    _, ux2, uy2 = _quadratic_parts(traj, b0, b1)
    energy = ux2 + uy2
    if scn.lam != 0:
        energy = energy - (2 * scn.lam / scn.p) * _lp_p(traj, b0, b1, scn.p)
    uy0 = normal_derivative(traj.coeffs, b0, b1, g, "y=0")
    uy1 = normal_derivative(traj.coeffs, b0, b1, g, "y=1")
    h1t, h2t = _time_derivative(b0, t), _time_derivative(b1, t)
    # int conj(h_t) u_y dx = conj(int h_t conj(u_y) dx)
    rate = -2 * np.real(np.conj(_pairing(h1t, uy0, g))) + 2 * np.real(np.conj(_pairing(h2t, uy1, g)))
    flux = _cumtrapz(rate, t)
    return SeriesResult(t, energy, flux, energy - energy[0] - flux)


def _boundary_norms(h: np.ndarray, t: np.ndarray, grid: Grid, p: float):
    """Running L^2_{xt} norms of h, h_t, h_x and the L^p_{xt} p-th power."""
    kx2 = (np.pi * grid.xi) ** 2
    h2 = grid.L_x * np.sum(np.abs(h) ** 2, axis=-1)
    ht2 = grid.L_x * np.sum(np.abs(_time_derivative(h, t)) ** 2, axis=-1)
    hx2 = grid.L_x * np.sum(kx2 * np.abs(h) ** 2, axis=-1)
    hp = np.sum(np.abs(x_inverse(h, grid)) ** p, axis=-1) * grid.dx
    return (np.sqrt(_cumtrapz(h2, t)), np.sqrt(_cumtrapz(ht2, t)), _cumtrapz(hx2, t),
            _cumtrapz(hp, t))


def trace_inequality_margin(traj: Trajectory, scn) -> TraceMargin:
    """Both sides of the wall-derivative trace bound for defocusing runs, per time t.

    lhs(t) = int_0^t int |u_y(x,1)|^2 + |u_y(x,0)|^2, and rhs(t) the explicit
    bound with every time integral taken over [0, t].
    """
    if scn.lam >= 0:
        raise ContractViolation("trace inequality is only asserted for lambda < 0")
    g, t, lam, p = traj.grid, traj.t, scn.lam, scn.p
    b0, b1 = _walls(scn.h1, t, g), _walls(scn.h2, t, g)
    mass, _, uy2 = _quadratic_parts(traj, b0, b1)
    uy0 = normal_derivative(traj.coeffs, b0, b1, g, "y=0")
    uy1 = normal_derivative(traj.coeffs, b0, b1, g, "y=1")
    wall2 = g.L_x * (np.sum(np.abs(uy0) ** 2, axis=-1) + np.sum(np.abs(uy1) ** 2, axis=-1))
    lhs = _cumtrapz(wall2, t)
    n1, n1t, n1x2, n1p = _boundary_norms(b0, t, g, p)
    n2, n2t, n2x2, n2p = _boundary_norms(b1, t, g, p)
    norm_u, norm_uy = np.sqrt(mass), np.sqrt(uy2)
    rhs = (8 * _cumtrapz(uy2, t) + 2 * norm_u * norm_uy
           - 4 * lam * (1 - 2 / p) * _cumtrapz(_lp_p(traj, b0, b1, p), t)
           + 2 * n1t * n1 + 2 * n2t * n2 - (4 * lam / p) * (n2p + n1p)
           + 4 * n1 ** 2 + 4 * n2 ** 2 + 2 * n1x2 + 2 * n2x2
           + 2 * norm_u[0] * norm_uy[0])
    return TraceMargin(t, lhs, rhs)


def h1_norms(traj: Trajectory, h1: BoundaryData | None, h2: BoundaryData | None) -> np.ndarray:
    """Physical H^1 norm sqrt(||u||^2 + ||u_x||^2 + ||u_y||^2) per time sample."""
    g, t = traj.grid, traj.t
    parts = _quadratic_parts(traj, _walls(h1, t, g), _walls(h2, t, g))
    return np.sqrt(parts[0] + parts[1] + parts[2])


def _boundary_h1(h: BoundaryData | None, T: float) -> float:
    if h is None:
        return 0.0
    g, t = h.grid, h.t_grid
    sel = t <= T * (1 + 1e-12)
    x, tt = h.xhat[sel], t[sel]
    if len(tt) < 2:
        return 0.0
    kx2 = (np.pi * g.xi) ** 2
    dens = g.L_x * np.sum((1 + kx2) * np.abs(x) ** 2 + np.abs(_time_derivative(x, tt)) ** 2, axis=-1)
    return math.sqrt(_cumtrapz(dens, tt)[-1])


def h1_growth_monitor(traj: Trajectory, scn) -> GrowthTable:
    """Running sup of the H^1 norm, recorded next to the H^1 sizes of the data."""
    norms = h1_norms(traj, scn.h1, scn.h2)
    T = float(traj.t[-1])
    return GrowthTable(traj.t, norms, np.maximum.accumulate(norms), _phi_h1(scn),
                       _boundary_h1(scn.h1, T), _boundary_h1(scn.h2, T))


def _phi_h1(scn) -> float:
    tr = Trajectory(scn.grid, np.array([0.0, scn.dt]), np.stack([scn.phi.coeffs] * 2))
    u2, ux2, uy2 = _quadratic_parts(tr, np.stack([scn.h1.at(0.0)] * 2),
                                    np.stack([scn.h2.at(0.0)] * 2))
    return math.sqrt(u2[0] + ux2[0] + uy2[0])


def balance_report(traj: Trajectory, scn) -> BalanceReport:
    """All monitors on one time axis; the trace margin is NaN when lambda >= 0."""
    m = mass_balance(traj, scn.h1, scn.h2)
    e = energy_balance(traj, scn)
    if scn.lam < 0:
        margin = trace_inequality_margin(traj, scn).margin
    else:
        margin = np.full(len(traj.t), np.nan)
    g = traj.grid
    return BalanceReport(traj.t.copy(), m.value, e.value, m.residual, e.residual, margin,
                         h1_norms(traj, scn.h1, scn.h2), dt=float(traj.dt) if len(traj) > 1 else 0.0,
                         dx=g.dx, dy=g.dy)


def measured_order(residuals: list[float], factor: float = 2.0) -> list[float]:
    """Observed convergence orders between successive refinements by ``factor``."""
    out = []
    for a, b in zip(residuals, residuals[1:]):
        out.append(math.log(abs(a) / abs(b)) / math.log(factor) if a and b else math.nan)
    return out


__all__ = [
    "BalanceReport", "GrowthTable", "SeriesResult", "TraceMargin", "balance_report",
    "energy_balance", "h1_growth_monitor", "h1_norms", "lifted_l2_norms", "mass_balance", "measured_order",
    "trace_inequality_margin",
]
