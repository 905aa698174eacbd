"""Ensemble ratios for the space-time estimates of the linear operators.

Each ratio divides a computed left-hand norm by the data norm that bounds it.
The unknown constants are not recovered; what is checked is that the largest
ratio over an ensemble stays put when the grid is refined.

Ensembles are drawn per sample from ``default_rng([seed, sample_id])`` as
continuous functions with a mode band fixed by the base grid, so a refined
run sees the same functions sampled more finely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import lifted_l2_norms
from .operators import apply_Wb, duhamel, integrate_forced
from .solver import Scenario, march
from .spectral import (BoundaryData, ContractViolation, Grid, SpectralField, Trajectory,
                       WindowSpec, discrete_lr, lifted_to_physical, linf_hs_norm, lr_wsr_norm,
                       boundary_norm, sobolev_norm, trapezoid_weights, wsr_norms, x_forward)

FAMILIES = ("gaussian", "bandlimited", "single-mode")


@dataclass(frozen=True)
class EstimateConfig:
    ensemble_size: int = 100
    seed: int = 0
    r: float = 4.0
    s: float = 0.0
    sigma: float = 0.75
    T: float = 0.1
    n_t: int = 201
    family: str = "gaussian"
    L_x: float = 16.0
    N_x: int = 64
    N_y: int = 15
    refinement: int = 1

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ContractViolation("ensemble_size must be >= 1")
        if not 2 <= self.r <= 4:
            raise ContractViolation("r must lie in [2, 4]")
        if self.s < 0:
            raise ContractViolation("s must be >= 0")
        if self.sigma <= 0.5:
            raise ContractViolation("sigma must exceed 1/2")
        if not self.T > 0 or self.n_t < 4:
            raise ContractViolation("need T > 0 and n_t >= 4")
        if self.family not in FAMILIES:
            raise ContractViolation(f"unknown family {self.family!r}; choose from {FAMILIES}")

    @property
    def theta_r(self) -> float:
        return 1.0 / self.r - 0.25

    @property
    def base_grid(self) -> Grid:
        return Grid(self.L_x, self.N_x, self.N_y)

    @property
    def grid(self) -> Grid:
        g = self.base_grid
        return g if self.refinement == 1 else g.refined(self.refinement)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_t)

    def refined(self, factor: int = 2) -> "EstimateConfig":
        return replace(self, refinement=self.refinement * factor)

    @property
    def band(self) -> tuple[int, int]:
        """Largest |k| and n drawn, two thirds of the base grid's Nyquist limits."""
        g = self.base_grid
        return max(1, (2 * (g.N_x // 2)) // 3), max(1, (2 * g.N_y) // 3)


@dataclass(frozen=True, eq=False)
class RatioStats:
    label: str
    resolution: str
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ratios", np.asarray(self.lhs) / np.asarray(self.rhs))
        if not np.all(np.isfinite(self.ratios)) or np.any(self.ratios < 0):
            raise ContractViolation(f"{self.label}: ratios must be finite and nonnegative")

    @property
    def max(self) -> float:
        return float(np.max(self.ratios))

    @property
    def mean(self) -> float:
        # sorted summation keeps the reduction order independent of sample order
        return float(np.sum(np.sort(self.ratios)) / len(self.ratios))

    def rows(self) -> np.ndarray:
        return np.column_stack([np.arange(len(self.ratios)), self.lhs, self.rhs, self.ratios])


# ---------------------------------------------------------------- ensembles

def _rng(cfg: EstimateConfig, sample_id: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, sample_id, stream])


def _cnormal(rng, size) -> np.ndarray:
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def _x_profile(rng, grid: Grid) -> np.ndarray:
    """x-coefficients of a modulated Gaussian exp(-((x-x0)/w)^2) exp(i*pi*kappa*x)."""
    x0, w, kappa = rng.uniform(-1, 1), rng.uniform(1, 2), rng.uniform(-0.5, 0.5)
    amp = _cnormal(rng, 1)[0]
    vals = amp * np.exp(-((grid.x - x0) / w) ** 2 + 1j * np.pi * kappa * grid.x)
    return x_forward(vals, grid)


def _k_index(grid: Grid, k: np.ndarray) -> np.ndarray:
    return np.asarray(k) % grid.N_x


def sample_field(cfg: EstimateConfig, sample_id: int, grid: Grid | None = None,
                 stream: int = 0) -> SpectralField:
    """One ensemble member as sine coefficients on ``grid`` (default: cfg.grid)."""
    grid = grid or cfg.grid
    rng = _rng(cfg, sample_id, stream)
    kb, nb = cfg.band
    out = np.zeros(grid.shape, dtype=complex)
    if cfg.family == "gaussian":
        gx = _x_profile(rng, grid)
        b = _cnormal(rng, nb) / np.arange(1, nb + 1)
        out[:, :nb] = gx[:, None] * b[None, :]
    elif cfg.family == "bandlimited":
        ks = np.arange(-kb, kb + 1)
        out[np.ix_(_k_index(grid, ks), np.arange(nb))] = _cnormal(rng, (ks.size, nb))
    else:
        k, n = int(rng.integers(-kb, kb + 1)), int(rng.integers(1, nb + 1))
        out[_k_index(grid, k), n - 1] = 1.0
    return SpectralField(grid, out)


def _time_profile(rng, t: np.ndarray, terms: int = 3, max_freq: float = 40.0) -> np.ndarray:
    mu = rng.uniform(-max_freq, max_freq, terms)
    d = _cnormal(rng, terms)
    return np.sum(d[None, :] * np.exp(-1j * np.pi ** 2 * mu[None, :] * t[:, None]), axis=1)


def sample_forcing(cfg: EstimateConfig, sample_id: int, grid: Grid | None = None) -> Trajectory:
    grid = grid or cfg.grid
    space = sample_field(cfg, sample_id, grid, stream=1)
    tau = _time_profile(_rng(cfg, sample_id, 2), cfg.t)
    return Trajectory(grid, cfg.t, tau[:, None, None] * space.coeffs[None])


def sample_boundary(cfg: EstimateConfig, sample_id: int, grid: Grid | None = None,
                    wall: int = 0) -> BoundaryData:
    """Windowed trace g(x) * tau(t); the window makes it vanish near t = 0 and t = T."""
    grid = grid or cfg.grid
    rng = _rng(cfg, sample_id, 3 + wall)
    gx = _x_profile(rng, grid)
    window = WindowSpec("smooth-bump", 0.2)
    tau = _time_profile(rng, cfg.t) * window(cfg.t)
    return BoundaryData(grid, cfg.t, tau[:, None] * gx[None, :], window)


# -------------------------------------------------------------------- ratios

def _resolution(grid: Grid) -> str:
    return f"{grid.N_x}x{grid.N_y}"


def ratio_W0(cfg: EstimateConfig, variant: str = "lr") -> RatioStats:
    """||W0 phi|| over the data bound, per sample.

    ``variant='lr'``: L^r_t W^{s,r} against (T^{1/2} + T^{1/2 - sigma}) ||phi||_{H^s}.
    ``variant='linf'``: L^inf_t H^s against ||phi||_{H^s}.
    """
    if variant not in ("lr", "linf"):
        raise ContractViolation("variant must be 'lr' or 'linf'")
    g, t = cfg.grid, cfg.t
    omega = g.omega()
    lhs, rhs = np.empty(cfg.ensemble_size), np.empty(cfg.ensemble_size)
    factor = math.sqrt(cfg.T) + cfg.T ** (0.5 - cfg.sigma)
    for i in range(cfg.ensemble_size):
        phi = sample_field(cfg, i)
        traj = Trajectory(g, t, phi.coeffs[None] * np.exp(-1j * omega[None] * t[:, None, None]))
        norm = sobolev_norm(phi, cfg.s)
        if variant == "lr":
            lhs[i], rhs[i] = lr_wsr_norm(traj, cfg.s, cfg.r), factor * norm
        else:
            lhs[i], rhs[i] = linf_hs_norm(traj, cfg.s), norm
    return RatioStats(f"W0-{variant}", _resolution(g), lhs, rhs)


def ratio_duhamel(cfg: EstimateConfig, q: float = 4.0) -> RatioStats:
    """||Phi f||_{L^q_t W^{s,q}} + ||Phi f||_{L^inf_t H^s} against ||f||_{L^q'_t W^{s,q'}}."""
    if not 2 <= q <= 4:
        raise ContractViolation("q must lie in [2, 4]")
    qd = q / (q - 1)
    g = cfg.grid
    lhs, rhs = np.empty(cfg.ensemble_size), np.empty(cfg.ensemble_size)
    for i in range(cfg.ensemble_size):
        f = sample_forcing(cfg, i)
        u = duhamel(f)
        lhs[i] = lr_wsr_norm(u, cfg.s, q) + linf_hs_norm(u, cfg.s)
        rhs[i] = lr_wsr_norm(f, cfg.s, qd)
    return RatioStats(f"duhamel-q{q:g}", _resolution(g), lhs, rhs)


def _lifted_space_time(traj: Trajectory, h1: BoundaryData, h2: BoundaryData, s: float, r: float):
    """L^r_t W^{s,r} and L^inf_t H^s of a field with wall values.

    For s = 0 both use the wall lift (nodal values and exact y-integrals); for
    s > 0 the Bessel multiplier acts on the sine coefficients directly.
    """
    g, w = traj.grid, trapezoid_weights(traj.t)
    if s == 0:
        vals = lifted_to_physical(traj.coeffs, h1.xhat, h2.xhat, g)
        per_t = discrete_lr(vals, g, r)
        sup = float(np.max(lifted_l2_norms(traj.coeffs, h1.xhat, h2.xhat, g)))
    else:
        per_t = wsr_norms(traj.coeffs, g, s, r)
        sup = linf_hs_norm(traj, s)
    return float(np.sum(per_t ** r * w) ** (1 / r)), sup


def ratio_Wb(cfg: EstimateConfig) -> RatioStats:
    """||Wb[h1, h2]||_{L^r_t W^{s,r}} + ||.||_{L^inf_t H^s} against sum_j boundary_norm(h_j, s)."""
    g = cfg.grid
    lhs, rhs = np.empty(cfg.ensemble_size), np.empty(cfg.ensemble_size)
    for i in range(cfg.ensemble_size):
        h1 = sample_boundary(cfg, i, wall=0)
        h2 = sample_boundary(cfg, i, wall=1)
        u = apply_Wb(h1, h2)
        a, b = _lifted_space_time(u, h1, h2, cfg.s, cfg.r)
        lhs[i] = a + b
        rhs[i] = boundary_norm(h1, cfg.s) + boundary_norm(h2, cfg.s)
    return RatioStats("Wb", _resolution(g), lhs, rhs)


# ----------------------------------------------------------------- sharpness

@dataclass(frozen=True, eq=False)
class GrowthCurve:
    beta: float
    sigma: float
    N: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.lhs / self.rhs

    def rows(self) -> np.ndarray:
        return np.column_stack([self.N, self.lhs, self.rhs, self.ratio])


def _bump_spectrum(xi: np.ndarray) -> np.ndarray:
    # transform of exp(-x^2) in the exp(i*pi*xi*x) convention
    return 0.5 * math.sqrt(math.pi) * np.exp(-(np.pi * xi) ** 2 / 4)


SHARPNESS_PERIOD = 2.0 / math.pi


def resonant_trace(beta: float, N: int, t: np.ndarray, window: WindowSpec | None = None) -> np.ndarray:
    """Time factor w(t) * sum_{n<=N} n^-beta exp(-i pi^2 (n^2 + 1) t) of the probe trace."""
    window = window or WindowSpec("smooth-bump")
    n = np.arange(1, N + 1, dtype=float)
    out = np.zeros(len(t), dtype=complex)
    for nn in n:
        out += nn ** -beta * np.exp(-1j * np.pi ** 2 * (nn ** 2 + 1) * t)
    return window.on_interval(t, 0.0, SHARPNESS_PERIOD) * out


def _response_l2(A: np.ndarray, k: np.ndarray, M: int, chunk: int = 16) -> float:
    """sum_m (1/2) (2 m pi)^2 int_0^T0 |v_m|^2 for v_m' = i e^{i pi^2 m^2 t} sum_k A_k e^{-i pi^2 k t}.

    Exact for a trigonometric polynomial on the period T0; the resonant
    coefficient k = m^2 contributes a secular term.
    """
    T0 = SHARPNESS_PERIOD
    total = 0.0
    for lo in range(1, M + 1, chunk):
        m = np.arange(lo, min(M, lo + chunk - 1) + 1, dtype=float)
        d = k[None, :] - m[:, None] ** 2
        res = d == 0
        dd = np.where(res, 1.0, d) * np.pi ** 2
        Ak = np.where(res, 0.0, A[None, :])
        Am = np.sum(np.where(res, A[None, :], 0.0), axis=1)
        B = -Ak / dd
        C = -np.sum(B, axis=1)
        integral = (T0 * (np.abs(C) ** 2 + np.sum(np.abs(B) ** 2, axis=1))
                    + np.abs(Am) ** 2 * T0 ** 3 / 3
                    + np.real(np.conj(C) * 1j * Am) * T0 ** 2
                    + 2 * T0 * np.real(Am * np.sum(np.conj(B) / dd, axis=1)))
        total += float(np.sum(0.5 * (2 * np.pi * m) ** 2 * integral))
    return total


def sharpness_probe(beta: float, N_max: int, sigma: float, N_values=None,
                    window: WindowSpec | None = None, m_factor: int = 8,
                    amplitude_cutoff: float = 1e-13) -> GrowthCurve:
    """Response of the lower-wall boundary operator to a resonant trace sum.

    The trace has x-transform g(xi) exp(-i pi^2 xi^2 t) w(t) sum_{n<=N} n^-beta
    exp(-i pi^2 (n^2 + 1) t), with g the transform of exp(-x^2) and w a smooth
    bump on the period T0 = 2/pi.  The time factor is expanded exactly in
    exp(-i pi^2 k t) on [0, T0]; the squared L^2_{xyt} norm of the response over
    [0, T0] then has a closed form per sine mode (summed to m_factor * N_max).
    The data norm squared is T0 sum_k |A_k|^2 int (1 + |k + xi^2|)^{2 sigma} |g|^2
    plus the L^2_t H^1_x part T0 sum_k |A_k|^2 int (1 + xi^2) |g|^2.
    """
    if beta <= 0:
        raise ContractViolation("beta must be positive")
    if N_max < 1 or sigma < 0:
        raise ContractViolation("need N_max >= 1 and sigma >= 0")
    if N_values is None:
        N_values = [n for n in (1, 2, 5, 10, 20, 50, 100, 150, 200, 300, 500) if n < N_max] + [N_max]
    N_values = sorted(set(int(n) for n in N_values))
    if N_values[0] < 1 or N_values[-1] > N_max:
        raise ContractViolation("N_values must lie in [1, N_max]")
    window = window or WindowSpec("smooth-bump")
    xi = np.linspace(-12.0, 12.0, 2401)
    g2 = np.abs(_bump_spectrum(xi)) ** 2
    G = np.trapezoid(g2, xi)
    space_w = np.trapezoid((1 + xi ** 2) * g2, xi)
    M = m_factor * N_max
    lhs, rhs = [], []
    for N in N_values:
        P = 1 << int(math.ceil(math.log2(2 * (N * N + 1) + 2048)))
        t = np.arange(P) * SHARPNESS_PERIOD / P
        A = np.fft.ifft(resonant_trace(beta, N, t, window))
        k = np.fft.fftfreq(P, 1.0 / P)
        # coefficients below the cutoff change neither norm at double precision
        sig = np.abs(A) > amplitude_cutoff * np.max(np.abs(A))
        A, k = A[sig], k[sig]
        lhs.append(math.sqrt(G * _response_l2(A, k, M)))
        tw = np.concatenate([
            np.trapezoid((1 + np.abs(kc[:, None] + xi[None, :] ** 2)) ** (2 * sigma) * g2[None, :],
                         xi, axis=1) for kc in np.array_split(k, max(1, len(k) // 2048))])
        rhs.append(math.sqrt(SHARPNESS_PERIOD * np.sum(np.abs(A) ** 2 * (tw + space_w))))
    return GrowthCurve(beta, sigma, np.array(N_values), np.array(lhs), np.array(rhs))


def sharpness_brute_force(beta: float, N: int, n_t: int = 20001, M: int | None = None,
                          window: WindowSpec | None = None) -> float:
    """The probe's response norm by time-stepping each sine mode; for cross-checks."""
    M = M or 8 * N
    t = np.linspace(0.0, SHARPNESS_PERIOD, n_t)
    m = np.arange(1, M + 1, dtype=float)
    h = resonant_trace(beta, N, t, window)
    c = integrate_forced(1j * 2 * np.pi * m[None, :] * h[:, None], t, np.pi ** 2 * m ** 2)
    xi = np.linspace(-12.0, 12.0, 2401)
    G = np.trapezoid(np.abs(_bump_spectrum(xi)) ** 2, xi)
    return math.sqrt(G * 0.5 * np.trapezoid(np.sum(np.abs(c) ** 2, axis=1), t))


# ---------------------------------------------------------------- dependence

@dataclass(frozen=True, eq=False)
class DependenceTable:
    solution_diff: np.ndarray
    data_diff: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.solution_diff / self.data_diff

    @property
    def spread(self) -> float:
        r = self.ratios
        return float(np.max(r) / np.min(r))

    def rows(self) -> np.ndarray:
        return np.column_stack([np.arange(len(self.ratios)), self.solution_diff, self.data_diff,
                                self.ratios])


def solution_norm(traj: Trajectory, h1: BoundaryData, h2: BoundaryData) -> float:
    """Discrete L^inf_t L^2 + L^4_{txy} norm using the wall lift."""
    b0 = np.array([h1.at(t) for t in traj.t])
    b1 = np.array([h2.at(t) for t in traj.t])
    sup = float(np.max(lifted_l2_norms(traj.coeffs, b0, b1, traj.grid)))
    l4 = discrete_lr(lifted_to_physical(traj.coeffs, b0, b1, traj.grid), traj.grid, 4.0)
    return sup + float(np.sum(l4 ** 4 * trapezoid_weights(traj.t)) ** 0.25)


def dependence_probe(scn: Scenario, n_perturbations: int = 20, magnitude: float = 1e-3,
                     seed: int = 0) -> DependenceTable:
    """Lipschitz quotients ||u - u_j|| / ||data - data_j|| over random compatible perturbations.

    Perturbations add a Gaussian-times-sine-mode field to phi (zero on the
    walls) and Gaussian-times-sin^2 traces to h1, h2 (zero with zero slope at
    t = 0), each scaled to ``magnitude`` times the data norm.
    """
    if n_perturbations < 1:
        raise ContractViolation("n_perturbations must be >= 1")
    if not magnitude > 0:
        raise ContractViolation("perturbation magnitude must be positive")
    g, t = scn.grid, scn.t_grid
    base, _ = march(scn)
    data_size = sobolev_norm(scn.phi, 0.0) + boundary_norm(scn.h1, 0.0) + boundary_norm(scn.h2, 0.0)
    if data_size == 0:
        data_size = 1.0
    ecfg = EstimateConfig(ensemble_size=1, seed=seed, L_x=g.L_x, N_x=g.N_x, N_y=g.N_y)
    sol, dat = np.empty(n_perturbations), np.empty(n_perturbations)
    ramp = np.sin(np.pi * t / (2 * scn.T)) ** 2
    for j in range(n_perturbations):
        rng = _rng(ecfg, j, 7)
        dphi = sample_field(ecfg, j, g, stream=8).coeffs
        dh = [_x_profile(rng, g)[None, :] * (ramp * _cnormal(rng, 1)[0])[:, None] for _ in range(2)]
        dphi_f = SpectralField(g, dphi)
        dh1 = BoundaryData(g, t, dh[0], scn.h1.window)
        dh2 = BoundaryData(g, t, dh[1], scn.h2.window)
        size = sobolev_norm(dphi_f, 0.0) + boundary_norm(dh1, 0.0) + boundary_norm(dh2, 0.0)
        c = magnitude * data_size / size
        dphi_f, dh1, dh2 = SpectralField(g, c * dphi), dh1.scaled(c), dh2.scaled(c)
        pert = scn.with_data(SpectralField(g, scn.phi.coeffs + dphi_f.coeffs),
                             scn.h1 + dh1, scn.h2 + dh2)
        traj, _ = march(pert)
        k = min(len(traj), len(base))
        diff = Trajectory(g, t[:k], traj.coeffs[:k] - base.coeffs[:k])
        sol[j] = solution_norm(diff, dh1, dh2)
        dat[j] = c * size
    return DependenceTable(sol, dat)


__all__ = [
    "DependenceTable", "EstimateConfig", "FAMILIES", "GrowthCurve", "RatioStats",
    "dependence_probe", "ratio_Wb", "ratio_W0", "ratio_duhamel", "sample_boundary",
    "sample_field", "sample_forcing", "sharpness_brute_force", "sharpness_probe", "solution_norm",
]
