"""Grids, Fourier x sine transforms and the norm family used throughout.

A field on the strip cell ``[-L_x/2, L_x/2) x [0, 1]`` is represented as

    u(x, y) = sum_k sum_{n=1}^{N_y} c[k, n] * exp(i*pi*xi_k*x) * sin(n*pi*y)

with ``xi_k = 2k/L_x`` (FFT ordering in ``k``) and interior collocation nodes
``y_j = j/(N_y+1)``.  The sine part is a DST-I, so the y endpoints are never
grid points; boundary values enter only through the boundary operator or an
explicit linear lift (see :func:`lift_coefficients`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft


class ContractViolation(ValueError):
    """Raised when an operation receives data outside its documented domain."""


@dataclass(frozen=True)
class Grid:
    L_x: float
    N_x: int
    N_y: int

    def __post_init__(self):
        if not self.L_x > 0:
            raise ContractViolation(f"L_x must be positive, got {self.L_x}")
        if self.N_x < 4 or self.N_x % 2:
            raise ContractViolation(f"N_x must be even and >= 4, got {self.N_x}")
        if self.N_y < 1:
            raise ContractViolation(f"N_y must be >= 1, got {self.N_y}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N_x, self.N_y)

    @property
    def dx(self) -> float:
        return self.L_x / self.N_x

    @property
    def dy(self) -> float:
        return 1.0 / (self.N_y + 1)

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L_x + self.dx * np.arange(self.N_x)

    @property
    def y(self) -> np.ndarray:
        return self.dy * np.arange(1, self.N_y + 1)

    @property
    def k(self) -> np.ndarray:
        """Integer x-mode labels in FFT order."""
        return np.fft.fftfreq(self.N_x, d=1.0 / self.N_x)

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * self.k / self.L_x

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.N_y + 1, dtype=float)

    @property
    def cell_weight(self) -> float:
        """Continuous L^2 mass of one unit coefficient: L_x * int_0^1 sin^2."""
        return 0.5 * self.L_x

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def omega(self) -> np.ndarray:
        """Dispersion relation pi^2 (xi^2 + n^2) on the (k, n) mode table."""
        return np.pi ** 2 * (self.xi[:, None] ** 2 + self.n[None, :] ** 2)

    def refined(self, factor: int = 2) -> "Grid":
        """Same cell, ``factor`` times more x points and ~``factor`` times more sine modes."""
        return Grid(self.L_x, self.N_x * factor, (self.N_y + 1) * factor - 1)


@dataclass(frozen=True)
class WindowSpec:
    kind: str = "none"
    ramp_fraction: float = 0.1

    def __post_init__(self):
        if self.kind not in ("none", "smooth-bump"):
            raise ContractViolation(f"unknown window kind {self.kind!r}")
        if self.kind == "smooth-bump" and not 0 < self.ramp_fraction <= 0.5:
            raise ContractViolation("ramp_fraction must lie in (0, 0.5]")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.on_interval(t, t[0], t[-1])

    def on_interval(self, t: np.ndarray, t0: float, t1: float) -> np.ndarray:
        """Window values at ``t`` for a support interval [t0, t1]."""
        t = np.asarray(t, dtype=float)
        if self.kind == "none":
            return np.ones_like(t)
        ramp = self.ramp_fraction * (t1 - t0)
        return _smooth_step((t - t0) / ramp) * _smooth_step((t1 - t) / ramp)


def _smooth_step(s: np.ndarray) -> np.ndarray:
    # C-infinity step: 0 for s <= 0, 1 for s >= 1
    s = np.clip(s, 0.0, 1.0)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class NormRequest:
    s: float = 0.0
    r: float = 2.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.s < 0:
            raise ContractViolation("s must be >= 0")
        if not 2 <= self.r <= 4:
            raise ContractViolation("r must lie in [2, 4]")
        if self.sigma < 0:
            raise ContractViolation("sigma must be >= 0")


def _check_array(name: str, arr: np.ndarray, shape: tuple[int, ...]):
    if arr.shape != shape:
        raise ContractViolation(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite entries")


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))
        _check_array("coeffs", self.coeffs, self.grid.shape)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def mode(cls, grid: Grid, k: int, n: int, value: complex = 1.0) -> "SpectralField":
        c = np.zeros(grid.shape, dtype=complex)
        c[k % grid.N_x, n - 1] = value
        return cls(grid, c)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        _check_array("values", self.values, self.grid.shape)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "PhysicalField":
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Spectral coefficients sampled on a uniform time grid, shape (M+1, N_x, N_y)."""

    grid: Grid
    t: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))
        if self.coeffs.shape != (len(self.t),) + self.grid.shape:
            raise ContractViolation(
                f"trajectory shape {self.coeffs.shape} does not match "
                f"{(len(self.t),) + self.grid.shape}")

    def __len__(self):
        return len(self.t)

    def __getitem__(self, m: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[m])

    @property
    def dt(self) -> float:
        return uniform_step(self.t)

    @classmethod
    def constant(cls, field: SpectralField, t: np.ndarray) -> "Trajectory":
        return cls(field.grid, t, np.broadcast_to(field.coeffs, (len(t),) + field.grid.shape).copy())


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Boundary trace h(x, t) stored as x-Fourier coefficients, shape (M+1, N_x).

    Time is the leading axis so that ``xhat[m]`` is the trace at ``t_grid[m]``;
    the x convention matches :class:`SpectralField`:
    ``h(x, t_m) = sum_k xhat[m, k] exp(i*pi*xi_k*x)``.
    """

    grid: Grid
    t_grid: np.ndarray
    xhat: np.ndarray
    window: WindowSpec = field(default_factory=WindowSpec)

    def __post_init__(self):
        object.__setattr__(self, "t_grid", np.asarray(self.t_grid, dtype=float))
        object.__setattr__(self, "xhat", np.asarray(self.xhat, dtype=complex))
        uniform_step(self.t_grid)
        _check_array("xhat", self.xhat, (len(self.t_grid), self.grid.N_x))

    @classmethod
    def zeros(cls, grid: Grid, t_grid: np.ndarray, window: WindowSpec | None = None) -> "BoundaryData":
        return cls(grid, t_grid, np.zeros((len(t_grid), grid.N_x), dtype=complex),
                   window or WindowSpec())

    @classmethod
    def from_samples(cls, grid: Grid, t_grid: np.ndarray, values: np.ndarray,
                     window: WindowSpec | None = None) -> "BoundaryData":
        """Build from physical samples ``values[m, i] = h(x_i, t_m)``."""
        return cls(grid, t_grid, x_forward(np.asarray(values, dtype=complex), grid),
                   window or WindowSpec())

    @classmethod
    def from_function(cls, grid: Grid, t_grid: np.ndarray, fn,
                      window: WindowSpec | None = None) -> "BoundaryData":
        T, X = np.meshgrid(np.asarray(t_grid, dtype=float), grid.x, indexing="ij")
        return cls.from_samples(grid, t_grid, np.broadcast_to(fn(X, T), T.shape), window)

    def values(self) -> np.ndarray:
        """Physical samples h(x_i, t_m), shape (M+1, N_x)."""
        return x_inverse(self.xhat, self.grid)

    def at(self, t: float) -> np.ndarray:
        """x-Fourier coefficients at time ``t`` by linear interpolation in time."""
        tg = self.t_grid
        if t < tg[0] - 1e-12 * max(1.0, abs(tg[-1])) or t > tg[-1] * (1 + 1e-12) + 1e-14:
            raise ContractViolation(f"t={t} outside boundary time grid [{tg[0]}, {tg[-1]}]")
        h = uniform_step(tg)
        pos = (t - tg[0]) / h
        m = int(np.clip(np.floor(pos + 1e-9), 0, len(tg) - 1))
        w = pos - m
        if m >= len(tg) - 1 or abs(w) < 1e-9:
            return self.xhat[min(m, len(tg) - 1)].copy()
        return (1 - w) * self.xhat[m] + w * self.xhat[m + 1]

    def scaled(self, c: complex) -> "BoundaryData":
        return BoundaryData(self.grid, self.t_grid, c * self.xhat, self.window)

    def __add__(self, other: "BoundaryData") -> "BoundaryData":
        return BoundaryData(self.grid, self.t_grid, self.xhat + other.xhat, self.window)


def uniform_step(t: np.ndarray) -> float:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ContractViolation("time grid needs at least two samples")
    d = np.diff(t)
    if np.any(d <= 0):
        raise ContractViolation("time grid must be strictly increasing")
    h = (t[-1] - t[0]) / (len(t) - 1)
    if np.max(np.abs(d - h)) > 1e-9 * max(h, 1e-300):
        raise ContractViolation("time grid must be uniform")
    return float(h)


# ---------------------------------------------------------------- transforms

def _x_phase(grid: Grid) -> np.ndarray:
    # exp(i*pi*xi_k*x_0) with x_0 = -L_x/2 equals (-1)^k
    return np.where(grid.k.astype(int) % 2 == 0, 1.0, -1.0)


def x_forward(values: np.ndarray, grid: Grid, axis: int = -1) -> np.ndarray:
    """Physical samples along x -> coefficients c_k with u = sum c_k e^{i pi xi_k x}."""
    c = sfft.fft(values, axis=axis) / grid.N_x
    shape = [1] * c.ndim
    shape[axis] = grid.N_x
    return c * _x_phase(grid).reshape(shape)


def x_inverse(coeffs: np.ndarray, grid: Grid, axis: int = -1) -> np.ndarray:
    shape = [1] * coeffs.ndim
    shape[axis] = grid.N_x
    return sfft.ifft(coeffs * _x_phase(grid).reshape(shape), axis=axis) * grid.N_x


def _analysis(values: np.ndarray, grid: Grid) -> np.ndarray:
    # values[..., i, j] -> coeffs[..., k, n]
    c = sfft.dst(values, type=1, axis=-1) / (grid.N_y + 1)
    return x_forward(c, grid, axis=-2)


def _synthesis(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    v = x_inverse(coeffs, grid, axis=-2)
    return 0.5 * sfft.dst(v, type=1, axis=-1)


def forward_transform(f: PhysicalField) -> SpectralField:
    """x-FFT composed with DST-I in y; exact inverse of :func:`inverse_transform`."""
    if not isinstance(f, PhysicalField):
        raise ContractViolation("forward_transform expects a PhysicalField")
    return SpectralField(f.grid, _analysis(f.values, f.grid))


def inverse_transform(F: SpectralField) -> PhysicalField:
    if not isinstance(F, SpectralField):
        raise ContractViolation("inverse_transform expects a SpectralField")
    return PhysicalField(F.grid, _synthesis(F.coeffs, F.grid))


def to_physical(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Array version of :func:`inverse_transform`; leading axes are batched."""
    if coeffs.shape[-2:] != grid.shape:
        raise ContractViolation(f"coefficient block {coeffs.shape} does not end in {grid.shape}")
    return _synthesis(coeffs, grid)


def to_spectral(values: np.ndarray, grid: Grid) -> np.ndarray:
    if values.shape[-2:] != grid.shape:
        raise ContractViolation(f"value block {values.shape} does not end in {grid.shape}")
    return _analysis(values, grid)


# ------------------------------------------------------- linear boundary lift
#
# A field with boundary values b0 (y=0) and b1 (y=1) has sine coefficients
# decaying like 1/n.  Subtracting the linear lift b0(1-y) + b1*y leaves a
# remainder that vanishes at both walls, so its coefficients decay fast and its
# truncated series is accurate up to the wall.

def lift_coefficients(b0: np.ndarray, b1: np.ndarray, grid: Grid) -> np.ndarray:
    """Exact sine coefficients of ``b0*(1-y) + b1*y`` for x-coefficients b0, b1.

    Leading axes of ``b0``/``b1`` (e.g. time) are broadcast; output ends in (N_x, N_y).
    """
    n = grid.n
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    b0 = np.asarray(b0)[..., None]
    b1 = np.asarray(b1)[..., None]
    return 2.0 * (b0 - sign * b1) / (n * np.pi)


def lift_values(b0: np.ndarray, b1: np.ndarray, grid: Grid, y: np.ndarray | None = None) -> np.ndarray:
    """Physical values of the linear lift at x nodes and ``y`` (default: interior nodes)."""
    y = grid.y if y is None else np.asarray(y, dtype=float)
    x0 = x_inverse(np.asarray(b0), grid)[..., None]
    x1 = x_inverse(np.asarray(b1), grid)[..., None]
    return x0 * (1.0 - y) + x1 * y


def lifted_to_physical(coeffs: np.ndarray, b0: np.ndarray, b1: np.ndarray, grid: Grid) -> np.ndarray:
    """Nodal values of a field with known wall values, free of the 1/n truncation tail."""
    return lift_values(b0, b1, grid) + _synthesis(coeffs - lift_coefficients(b0, b1, grid), grid)


def lifted_to_spectral(values: np.ndarray, b0: np.ndarray, b1: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse of :func:`lifted_to_physical` (exact round trip at the nodes)."""
    return lift_coefficients(b0, b1, grid) + _analysis(values - lift_values(b0, b1, grid), grid)


def evaluate(coeffs: np.ndarray, grid: Grid, x: np.ndarray, y: np.ndarray,
             b0: np.ndarray | None = None, b1: np.ndarray | None = None) -> np.ndarray:
    """Evaluate the series at arbitrary tensor points (x, y); optional wall lift.

    ``coeffs`` may carry leading batch axes.  Returns shape (..., len(x), len(y)).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    Ex = np.exp(1j * np.pi * np.outer(x, grid.xi))           # (len x, N_x)
    Sy = np.sin(np.pi * np.outer(grid.n, y))                  # (N_y, len y)
    c = coeffs
    extra = 0.0
    if b0 is not None or b1 is not None:
        b0 = np.zeros(coeffs.shape[:-1], complex) if b0 is None else np.asarray(b0)
        b1 = np.zeros(coeffs.shape[:-1], complex) if b1 is None else np.asarray(b1)
        c = coeffs - lift_coefficients(b0, b1, grid)
        v0 = np.einsum("ik,...k->...i", Ex, b0)[..., None]
        v1 = np.einsum("ik,...k->...i", Ex, b1)[..., None]
        extra = v0 * (1.0 - y) + v1 * y
    return np.einsum("ik,...kn,nj->...ij", Ex, c, Sy) + extra


# ------------------------------------------------------------------- norms

def _weights(grid: Grid, s: float) -> np.ndarray:
    return (1.0 + grid.xi[:, None] ** 2 + grid.n[None, :] ** 2) ** s


def sobolev_norm(F: SpectralField, s: float) -> float:
    """(sum (1 + xi^2 + n^2)^s |c|^2 * L_x/2)^{1/2}; s = 0 is the L^2 norm on the cell."""
    if s < 0:
        raise ContractViolation("Sobolev order must be >= 0")
    return float(np.sqrt(np.sum(_weights(F.grid, s) * np.abs(F.coeffs) ** 2) * F.grid.cell_weight))


def sobolev_norms(coeffs: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    """Batched :func:`sobolev_norm` over leading axes."""
    if s < 0:
        raise ContractViolation("Sobolev order must be >= 0")
    return np.sqrt(np.sum(_weights(grid, s) * np.abs(coeffs) ** 2, axis=(-2, -1)) * grid.cell_weight)


def discrete_lr(values: np.ndarray, grid: Grid, r: float) -> np.ndarray:
    """Discrete L^r norm on the interior nodes, batched over leading axes."""
    return (np.sum(np.abs(values) ** r, axis=(-2, -1)) * grid.dx * grid.dy) ** (1.0 / r)


def _check_r(r: float):
    # [4/3, 2) admitted for the Hoelder-dual forcing norms of the Duhamel estimate
    if not 4.0 / 3.0 - 1e-12 <= r <= 4:
        raise ContractViolation(f"Lebesgue exponent r={r} outside [2, 4] (or dual range [4/3, 2])")


def wsr_norms(coeffs: np.ndarray, grid: Grid, s: float, r: float) -> np.ndarray:
    """Bessel-potential W^{s,r} norm, batched over leading axes."""
    _check_r(r)
    if s < 0:
        raise ContractViolation("Sobolev order must be >= 0")
    return discrete_lr(_synthesis(coeffs * _weights(grid, s / 2), grid), grid, r)


def wsr_norm(f: PhysicalField, s: float, r: float) -> float:
    """Apply (1 + xi^2 + n^2)^{s/2} spectrally, synthesize, take the discrete L^r norm."""
    _check_r(r)
    if s == 0:
        return float(discrete_lr(f.values, f.grid, r))
    return float(wsr_norms(_analysis(f.values, f.grid), f.grid, s, r))


def trapezoid_weights(t: np.ndarray) -> np.ndarray:
    h = uniform_step(t)
    w = np.full(len(t), h)
    w[0] = w[-1] = 0.5 * h
    return w


def lr_wsr_norm(traj: Trajectory, s: float, r: float) -> float:
    """(sum_m ||u(t_m)||_{W^{s,r}}^r w_m)^{1/r} with trapezoid weights; r = inf takes the max."""
    if np.isinf(r):
        return float(np.max(wsr_norms(traj.coeffs, traj.grid, s, 2.0)))
    per_t = wsr_norms(traj.coeffs, traj.grid, s, r)
    return float(np.sum(per_t ** r * trapezoid_weights(traj.t)) ** (1.0 / r))


def linf_hs_norm(traj: Trajectory, s: float) -> float:
    return float(np.max(sobolev_norms(traj.coeffs, traj.grid, s)))


# ----------------------------------------------------- space-time spectra
#
# Time transforms use the kernel exp(-i*pi^2*lambda*t), i.e. lambda is measured
# in units of the dispersion relation: free evolution of mode (xi, n) sits at
# lambda = -(xi^2 + n^2).  Normalization is Plancherel: unit weights reproduce
# the discrete space-time L^2 norm.

def time_frequencies(t: np.ndarray) -> np.ndarray:
    h = uniform_step(t)
    return 2.0 * np.pi * np.fft.fftfreq(len(t), d=h) / np.pi ** 2


def boundary_norm(h: BoundaryData, s: float) -> float:
    """Weighted (xi, lambda) norm of the windowed trace: a computable upper-bound
    surrogate for the infimum-over-extensions boundary norm."""
    if s < 0:
        raise ContractViolation("Sobolev order must be >= 0")
    t = h.t_grid
    dt = uniform_step(t)
    data = h.xhat * h.window(t)[:, None]
    spec = sfft.fft(data, axis=0)
    lam = np.abs(time_frequencies(t))[:, None]
    xi = np.abs(h.grid.xi)[None, :]
    w2 = (1 + lam + xi) * (1 + lam + xi ** 2) ** s
    total = np.sum(w2 * np.abs(spec) ** 2) * h.grid.L_x * dt / len(t)
    return float(np.sqrt(total))


def bourgain_norm(traj: Trajectory, sigma: float, s: float,
                  window: WindowSpec | None = None) -> float:
    """Discrete X^{sigma,s} norm of a windowed trajectory."""
    if len(traj) < 4:
        raise ContractViolation("Bourgain norm needs at least 4 time samples")
    if sigma < 0 or s < 0:
        raise ContractViolation("sigma and s must be >= 0")
    window = window or WindowSpec("smooth-bump")
    t = traj.t
    dt = uniform_step(t)
    data = traj.coeffs * window(t)[:, None, None]
    spec = sfft.fft(data, axis=0)
    lam = time_frequencies(t)[:, None, None]
    g = traj.grid
    xi = g.xi[None, :, None]
    n = g.n[None, None, :]
    w2 = (1 + np.abs(xi) + n) ** (2 * s) * (1 + np.abs(lam + xi ** 2 + n ** 2)) ** (2 * sigma)
    total = np.sum(w2 * np.abs(spec) ** 2) * g.cell_weight * dt / len(t)
    return float(np.sqrt(total))
