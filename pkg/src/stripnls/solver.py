"""Picard iteration for the mild (integral) form of the boundary-driven NLS.

On a window [t0, t1] the iteration is

    u <- W0(t - t0) u(t0) + Wb[h1, h2 restarted at t0](t) + i int_{t0}^t W0(t - s) f(u(s)) ds,

with f(u) = lambda |u|^{p-2} u (plus an optional manufactured source).  The
march chains windows, halving the window when the iteration stops
contracting, and reports a presumed blow-up when the window underflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from .operators import boundary_forcing, integrate_forced
from .spectral import (BoundaryData, ContractViolation, Grid, PhysicalField, SpectralField,
                       Trajectory, WindowSpec, boundary_norm, discrete_lr, lifted_to_physical,
                       lifted_to_spectral, sobolev_norm, sobolev_norms, to_physical, to_spectral,
                       trapezoid_weights, uniform_step, x_forward, x_inverse)


class WindowTooLarge(RuntimeError):
    """Picard iteration failed to converge on the requested window."""


@dataclass(frozen=True)
class DataFunctions:
    """Analytic problem data, vectorized: phi(x, y), h1(x, t), h2(x, t)."""

    phi: Callable
    h1: Callable
    h2: Callable


@dataclass(eq=False)
class Scenario:
    grid: Grid
    lam: float
    p: float
    phi: SpectralField
    h1: BoundaryData
    h2: BoundaryData
    T: float
    window_dt: float
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    s_monitor: float = 1.0
    source: Callable | None = None
    data: DataFunctions | None = None
    r: float = 4.0
    compat_threshold: float = 1e-6
    blowup_threshold: float = math.inf

    def __post_init__(self):
        if self.p < 3:
            raise ContractViolation(f"p must be >= 3, got {self.p}")
        if not self.T > 0:
            raise ContractViolation("T must be positive")
        if not 0 < self.window_dt <= self.T * (1 + 1e-12):
            raise ContractViolation("window_dt must lie in (0, T]")
        if self.phi.grid != self.grid or self.h1.grid != self.grid or self.h2.grid != self.grid:
            raise ContractViolation("phi, h1 and h2 must share the scenario grid")
        t1, t2 = self.h1.t_grid, self.h2.t_grid
        if len(t1) != len(t2) or not np.allclose(t1, t2, rtol=0, atol=1e-12):
            raise ContractViolation("h1 and h2 must share a time grid")
        if abs(t1[0]) > 1e-14 or t1[-1] < self.T * (1 - 1e-12):
            raise ContractViolation("boundary time grid must cover [0, T]")
        dt = uniform_step(t1)
        for name, val in (("T", self.T), ("window_dt", self.window_dt)):
            q = val / dt
            if abs(q - round(q)) > 1e-8 * max(1.0, q):
                raise ContractViolation(f"{name} must be an integer multiple of dt={dt}")

    @property
    def dt(self) -> float:
        return uniform_step(self.h1.t_grid)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def t_grid(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @classmethod
    def from_functions(cls, grid: Grid, lam: float, p: float, phi: Callable, h1: Callable | None,
                       h2: Callable | None, T: float, dt: float, window_dt: float | None = None,
                       boundary_window: WindowSpec | None = None, **kwargs) -> "Scenario":
        """Sample analytic data on the grid; the callables are kept for the FD oracle.

        ``phi`` is represented with its wall values lifted out, so data that does
        not vanish on the walls keeps an accurate sine representation.
        """
        zero = lambda x, t: np.zeros(np.broadcast(x, t).shape, dtype=complex)  # noqa: E731
        h1 = zero if h1 is None else h1
        h2 = zero if h2 is None else h2
        n = int(round(T / dt))
        t = dt * np.arange(n + 1)
        X, Y = grid.mesh()
        nodal = np.broadcast_to(phi(X, Y), grid.shape).astype(complex)
        b0 = x_forward(np.broadcast_to(phi(grid.x, 0.0), (grid.N_x,)).astype(complex), grid)
        b1 = x_forward(np.broadcast_to(phi(grid.x, 1.0), (grid.N_x,)).astype(complex), grid)
        phi_field = SpectralField(grid, lifted_to_spectral(nodal, b0, b1, grid))
        bw = boundary_window or WindowSpec()
        return cls(grid=grid, lam=lam, p=p, phi=phi_field,
                   h1=BoundaryData.from_function(grid, t, h1, bw),
                   h2=BoundaryData.from_function(grid, t, h2, bw),
                   T=T, window_dt=T if window_dt is None else window_dt,
                   data=DataFunctions(phi, h1, h2), **kwargs)

    def with_data(self, phi: SpectralField | None = None, h1: BoundaryData | None = None,
                  h2: BoundaryData | None = None) -> "Scenario":
        """Copy with replaced data; analytic callables are dropped."""
        return replace(self, phi=phi or self.phi, h1=h1 or self.h1, h2=h2 or self.h2, data=None)

    def with_windows(self, w1: WindowSpec, w2: WindowSpec) -> "Scenario":
        """Copy whose wall data use the given windows for their space-time norms."""
        return replace(self, h1=BoundaryData(self.grid, self.h1.t_grid, self.h1.xhat, w1),
                       h2=BoundaryData(self.grid, self.h2.t_grid, self.h2.xhat, w2))


# ------------------------------------------------------------- nonlinearity

def _nl(values: np.ndarray, lam: float, p: float) -> np.ndarray:
    if lam == 0:
        return np.zeros_like(values)
    a = np.abs(values)
    if p == 3:
        return lam * a * values
    if p == 4:
        return lam * a * a * values
    return lam * a ** (p - 2) * values


def resample(coeffs: np.ndarray, src: Grid, dst: Grid) -> np.ndarray:
    """Copy the shared (k, n) modes between grids on the same cell; others are zero."""
    if abs(src.L_x - dst.L_x) > 1e-12 * src.L_x:
        raise ContractViolation("resample needs grids on the same cell")
    out = np.zeros(coeffs.shape[:-2] + dst.shape, dtype=complex)
    kmax = min(src.N_x, dst.N_x) // 2
    ny = min(src.N_y, dst.N_y)
    out[..., :kmax, :ny] = coeffs[..., :kmax, :ny]
    out[..., -(kmax - 1):, :ny] = coeffs[..., -(kmax - 1):, :ny]
    return out


def nonlinearity(u: PhysicalField, lam: float, p: float, padded: bool = False) -> PhysicalField:
    """Pointwise lambda |u|^{p-2} u.

    ``padded=True`` (even integer p only) evaluates on a grid refined by p/2 and
    truncates back, removing the aliased part of the polynomial product.
    """
    if p < 3:
        raise ContractViolation(f"p must be >= 3, got {p}")
    if not padded:
        return PhysicalField(u.grid, _nl(u.values, lam, p))
    if p != int(p) or int(p) % 2:
        raise ContractViolation("padded evaluation requires an even integer p")
    g = u.grid
    pad = int(p) // 2
    big = Grid(g.L_x, g.N_x * pad, (g.N_y + 1) * pad - 1)
    fine = to_physical(resample(to_spectral(u.values, g), g, big), big)
    back = resample(to_spectral(_nl(fine, lam, p), big), big, g)
    return PhysicalField(g, to_physical(back, g))


# ------------------------------------------------------------ compatibility

def wall_values(coeffs: np.ndarray, grid: Grid, tail: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Recover wall traces (x-coefficients) from the 1/n decay of sine coefficients.

    A field with wall values a (y=0) and b (y=1) has
    (n*pi/2) c_n = (a - (-1)^n b) + O(n^-2); the upper ``tail`` fraction of the
    modes is fitted in least squares including the n^-2 correction.
    """
    n = grid.n
    sel = n >= max(1.0, np.floor((1 - tail) * grid.N_y))
    if np.count_nonzero(sel) < 4:
        raise ContractViolation("too few sine modes to extrapolate wall values")
    nn = n[sel]
    sign = np.where(nn % 2 == 0, 1.0, -1.0)
    A = np.stack([np.ones_like(nn), -sign, 1 / nn ** 2, -sign / nn ** 2], axis=1)
    rhs = (0.5 * np.pi * nn) * coeffs[..., sel]
    sol, *_ = np.linalg.lstsq(A, rhs.reshape(-1, nn.size).T, rcond=None)
    sol = sol.T.reshape(coeffs.shape[:-1] + (4,))
    return sol[..., 0], sol[..., 1]


def check_compatibility(scn: Scenario) -> tuple[float, float]:
    """L^2_x mismatch between the traces of phi and the wall data at t = 0."""
    g = scn.grid
    a, b = wall_values(scn.phi.coeffs, g)
    r0 = math.sqrt(g.L_x * np.sum(np.abs(a - scn.h1.xhat[0]) ** 2))
    r1 = math.sqrt(g.L_x * np.sum(np.abs(b - scn.h2.xhat[0]) ** 2))
    return r0, r1


# ------------------------------------------------------------ Picard window

@dataclass(frozen=True, eq=False)
class WindowResult:
    trajectory: Trajectory
    iterations: int
    contraction_factor: float | None
    corrections: tuple[float, ...]


def _source_coeffs(scn: Scenario, times: np.ndarray) -> np.ndarray | None:
    if scn.source is None:
        return None
    g = scn.grid
    X, Y = g.mesh()
    out = np.empty((len(times),) + g.shape, dtype=complex)
    for m, t in enumerate(times):
        nodal = np.broadcast_to(scn.source(X, Y, t), g.shape).astype(complex)
        w0 = x_forward(np.broadcast_to(scn.source(g.x, 0.0, t), (g.N_x,)).astype(complex), g)
        w1 = x_forward(np.broadcast_to(scn.source(g.x, 1.0, t), (g.N_x,)).astype(complex), g)
        out[m] = lifted_to_spectral(nodal, w0, w1, g)
    return out


def _wall_nonlinearity(b: np.ndarray, scn: Scenario) -> np.ndarray:
    g = scn.grid
    return x_forward(_nl(x_inverse(b, g), scn.lam, scn.p), g)


class _WindowOperator:
    """The map u -> A[u] restricted to one window, with its linear part cached."""

    def __init__(self, scn: Scenario, times: np.ndarray, u_start: np.ndarray):
        g = scn.grid
        self.scn, self.times = scn, times
        self.tau = times - times[0]
        self.omega = g.omega()
        self.b0 = np.array([scn.h1.at(t) for t in times])
        self.b1 = np.array([scn.h2.at(t) for t in times])
        lin = u_start[None] * np.exp(-1j * self.omega[None] * self.tau[:, None, None])
        if np.any(self.b0) or np.any(self.b1):
            lin = lin + integrate_forced(1j * boundary_forcing(self.b0, self.b1, g), self.tau, self.omega)
        self.linear = lin
        self.src = _source_coeffs(scn, times)
        self.fw0 = _wall_nonlinearity(self.b0, scn)
        self.fw1 = _wall_nonlinearity(self.b1, scn)

    def forcing(self, u: np.ndarray) -> np.ndarray:
        g, scn = self.scn.grid, self.scn
        vals = lifted_to_physical(u, self.b0, self.b1, g)
        f = lifted_to_spectral(_nl(vals, scn.lam, scn.p), self.fw0, self.fw1, g)
        if self.src is not None:
            f = f + self.src
        return f

    def __call__(self, u: np.ndarray) -> np.ndarray:
        if self.scn.lam == 0 and self.src is None:
            return self.linear.copy()
        return self.linear + integrate_forced(1j * self.forcing(u), self.tau, self.omega)


def _linf_hs(c: np.ndarray, grid: Grid, s: float) -> float:
    return float(np.max(sobolev_norms(c, grid, s)))


def picard_window(scn: Scenario, t0: float, t1: float, u_start: SpectralField,
                  guess: Trajectory | None = None) -> WindowResult:
    """Fixed-point iteration on [t0, t1] starting from u(t0) = ``u_start``.

    Stops when the relative L^inf_t H^s change drops below ``scn.picard_tol``;
    raises :class:`WindowTooLarge` after ``scn.picard_max_iter`` iterations or
    on divergence.
    """
    span = t1 - t0
    if not span > 0:
        raise ContractViolation("window must have t1 > t0")
    if span > scn.window_dt * (1 + 1e-9):
        raise ContractViolation("window longer than window_dt")
    nsteps = max(1, int(round(span / scn.dt))) if span >= scn.dt * (1 - 1e-9) else 1
    times = t0 + span * np.arange(nsteps + 1) / nsteps
    op = _WindowOperator(scn, times, u_start.coeffs)
    g, s = scn.grid, scn.s_monitor
    u = op.linear if guess is None else guess.coeffs
    corrections = []
    for it in range(1, scn.picard_max_iter + 1):
        new = op(u)
        if not np.all(np.isfinite(new)):
            raise WindowTooLarge(f"iteration diverged on [{t0:.6g}, {t1:.6g}]")
        diff = _linf_hs(new - u, g, s)
        size = _linf_hs(new, g, s)
        corrections.append(diff)
        u = new
        if diff <= scn.picard_tol * size or size == 0:
            return WindowResult(Trajectory(g, times, u), it, _contraction(corrections, size),
                                tuple(corrections))
        if it >= 3 and corrections[-1] > corrections[-2] > corrections[-3]:
            raise WindowTooLarge(f"corrections growing on [{t0:.6g}, {t1:.6g}]")
    raise WindowTooLarge(f"no convergence in {scn.picard_max_iter} iterations on [{t0:.6g}, {t1:.6g}]")


def _contraction(corrections: list[float], size: float) -> float | None:
    # ratios whose denominator sits at the rounding floor carry no information
    floor = 1e-13 * max(size, 1e-300)
    ratios = [b / a for a, b in zip(corrections, corrections[1:]) if a > floor]
    return max(ratios) if ratios else None


def apply_A(scn: Scenario, traj: Trajectory) -> Trajectory:
    """One application of the full-interval integral operator to a trajectory."""
    op = _WindowOperator(scn, traj.t, scn.phi.coeffs)
    return Trajectory(scn.grid, traj.t, op(traj.coeffs))


def linear_solution(scn: Scenario) -> Trajectory:
    """W0(t) phi + Wb[h1, h2](t) on the scenario time grid (no restarts)."""
    op = _WindowOperator(scn, scn.t_grid, scn.phi.coeffs)
    return Trajectory(scn.grid, scn.t_grid, op.linear)


# --------------------------------------------------------------------- march

@dataclass(frozen=True)
class WindowRecord:
    t0: float
    t1: float
    iterations: int
    contraction_factor: float | None


@dataclass(eq=False)
class SolveReport:
    windows: list[WindowRecord] = field(default_factory=list)
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    l2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    l4_running: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s_monitor: float = 1.0
    compatibility: tuple[float, float] = (0.0, 0.0)
    data_norm: float = 0.0
    theta_r: float = 0.0
    blowup: bool = False
    blowup_time: float | None = None
    underflow_time: float | None = None
    threshold_time: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> list[int]:
        return [w.iterations for w in self.windows]

    @property
    def contraction_factors(self) -> list[float]:
        return [w.contraction_factor for w in self.windows if w.contraction_factor is not None]

    def to_text(self, header: dict | None = None) -> str:
        lines = []
        if header:
            lines.append("[config]")
            lines += [f"{k} = {v}" for k, v in header.items()]
            lines.append("")
        rho = self.contraction_factors
        lines += [
            "[summary]",
            f"windows = {len(self.windows)}",
            f"total_iterations = {sum(self.iterations)}",
            f"max_iterations_per_window = {max(self.iterations, default=0)}",
            f"max_contraction_factor = {float(max(rho)) if rho else 'n/a'}",
            f"data_norm_mu = {self.data_norm!r}",
            f"theta_r = {self.theta_r!r}",
            f"compatibility_r0 = {self.compatibility[0]!r}",
            f"compatibility_r1 = {self.compatibility[1]!r}",
            f"final_time = {float(self.t[-1]) if len(self.t) else 0.0!r}",
            f"final_l2 = {float(self.l2[-1]) if len(self.l2) else 0.0!r}",
            f"max_hs = {float(np.max(self.hs)) if len(self.hs) else 0.0!r}",
            f"s_monitor = {self.s_monitor!r}",
            f"blowup = {str(self.blowup).lower()}",
            f"blowup_time = {float(self.blowup_time) if self.blowup_time is not None else 'none'}",
            "",
            "[windows]",
            "# t0 t1 iterations contraction_factor",
        ]
        for w in self.windows:
            rho_s = "n/a" if w.contraction_factor is None else repr(w.contraction_factor)
            lines.append(f"{w.t0!r} {w.t1!r} {w.iterations} {rho_s}")
        if self.warnings:
            lines += ["", "[warnings]"] + self.warnings
        return "\n".join(lines) + "\n"


def theta(r: float) -> float:
    """Exponent 1/r - 1/4 that enters the nonlinear estimate; reference only."""
    return 1.0 / r - 0.25


def _new_report(scn: Scenario) -> SolveReport:
    report = SolveReport(s_monitor=scn.s_monitor, theta_r=theta(scn.r))
    report.compatibility = check_compatibility(scn)
    if max(report.compatibility) > scn.compat_threshold:
        report.warnings.append(
            f"compatibility residuals {report.compatibility} exceed {scn.compat_threshold:g}")
    report.data_norm = (sobolev_norm(scn.phi, scn.s_monitor)
                        + boundary_norm(scn.h1, scn.s_monitor) + boundary_norm(scn.h2, scn.s_monitor))
    return report


def linear_run(scn: Scenario) -> tuple[Trajectory, SolveReport]:
    """The linear solution with the same report fields as :func:`march`."""
    traj = linear_solution(scn)
    report = _new_report(scn)
    _fill_norms(report, traj, scn)
    return traj, report


def march(scn: Scenario, window_floor: float = 1e-6) -> tuple[Trajectory, SolveReport]:
    """Chain Picard windows over [0, T] with window halving on failure."""
    dt, M = scn.dt, scn.n_steps
    g = scn.grid
    report = _new_report(scn)

    coeffs = np.empty((M + 1,) + g.shape, dtype=complex)
    coeffs[0] = scn.phi.coeffs
    last = 0
    K0 = Fraction(int(round(scn.window_dt / dt)))
    K = K0
    pos = Fraction(0)
    u = scn.phi.coeffs
    persistent_slow = 0
    while pos < M:
        length = min(K, M - pos)
        if pos.denominator != 1 or K < 1:
            # windows must not straddle a grid point
            length = min(length, math.floor(pos) + 1 - pos)
        t0, t1 = float(pos * dt), float((pos + length) * dt)
        try:
            res = picard_window(scn, t0, t1, SpectralField(g, u))
        except WindowTooLarge:
            K = K / 2 if K <= 1 else Fraction(math.ceil(K / 2))
            if float(K) * dt < window_floor * scn.T:
                report.underflow_time = t0
                report.warnings.append(f"window underflow at t={t0:.6g}: presumed blow-up")
                break
            continue
        report.windows.append(WindowRecord(t0, t1, res.iterations, res.contraction_factor))
        rho = res.contraction_factor
        persistent_slow = persistent_slow + 1 if (rho is not None and rho >= 0.5) else 0
        if K < K0 and (rho is None or rho < 0.25):
            K = min(K * 2, K0)
        u = res.trajectory.coeffs[-1]
        new_pos = pos + length
        sub = res.trajectory
        for j in range(1, len(sub)):
            q = pos + length * Fraction(j, len(sub) - 1)
            if q.denominator == 1:
                coeffs[int(q)] = sub.coeffs[j]
                last = int(q)
        pos = new_pos
        if np.max(sobolev_norms(u, g, scn.s_monitor)) > scn.blowup_threshold:
            # window ends need not be stored samples, so keep the crossing time itself
            report.threshold_time = t1
            report.warnings.append(f"H^{scn.s_monitor:g} norm exceeded {scn.blowup_threshold:g}")
            break
    if persistent_slow:
        report.warnings.append("contraction factor >= 1/2 persisted on the final windows")

    traj = Trajectory(g, scn.t_grid[:last + 1], coeffs[:last + 1])
    _fill_norms(report, traj, scn)
    bt = detect_blowup(report, scn.blowup_threshold)
    report.blowup = bt is not None
    report.blowup_time = bt
    return traj, report


def _fill_norms(report: SolveReport, traj: Trajectory, scn: Scenario):
    g = traj.grid
    report.t = traj.t.copy()
    report.l2 = sobolev_norms(traj.coeffs, g, 0.0)
    report.hs = sobolev_norms(traj.coeffs, g, scn.s_monitor)
    b0 = np.array([scn.h1.at(t) for t in traj.t])
    b1 = np.array([scn.h2.at(t) for t in traj.t])
    l4 = discrete_lr(lifted_to_physical(traj.coeffs, b0, b1, g), g, 4.0) ** 4
    if len(traj.t) > 1:
        inc = 0.5 * np.diff(traj.t) * (l4[1:] + l4[:-1])
        report.l4_running = np.concatenate([[0.0], np.cumsum(inc)]) ** 0.25
    else:
        report.l4_running = np.zeros(1)


def detect_blowup(report: SolveReport, threshold: float = math.inf) -> float | None:
    """First time the monitored H^s norm exceeds ``threshold``, or the march stopped on
    window underflow or a threshold crossing."""
    over = np.nonzero(np.asarray(report.hs) > threshold)[0]
    times = []
    if over.size:
        times.append(float(report.t[over[0]]))
    for extra in (report.underflow_time, report.threshold_time):
        if extra is not None:
            times.append(float(extra))
    return min(times) if times else None


__all__ = [
    "DataFunctions", "Scenario", "SolveReport", "WindowResult", "WindowRecord", "WindowTooLarge",
    "apply_A", "check_compatibility", "detect_blowup", "linear_run", "linear_solution", "march",
    "nonlinearity", "picard_window", "resample", "theta", "wall_values",
]
