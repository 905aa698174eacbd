import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stripnls.operators import apply_W0, apply_Wb, boundary_trace, duhamel, integrate_forced, phi_functions
from stripnls.spectral import (BoundaryData, ContractViolation, Grid, SpectralField, Trajectory,
                               sobolev_norm)

from conftest import rel

G = Grid(8.0, 16, 7)
T_GRID = np.linspace(0.0, 0.5, 101)
OMEGA = G.omega()


def random_coeffs(seed, shape=G.shape):
    r = np.random.default_rng(seed)
    return r.standard_normal(shape) + 1j * r.standard_normal(shape)


class TestW0:
    def test_identity_at_zero(self):
        phi = SpectralField(G, random_coeffs(0))
        assert np.array_equal(apply_W0(phi, 0.0).coeffs, phi.coeffs)

    def test_single_mode_phase(self):
        phi = SpectralField.mode(G, 1, 1)
        got = apply_W0(phi, 0.5).coeffs[1, 0]
        expect = np.exp(-1j * np.pi ** 2 * (G.xi[1] ** 2 + 1) * 0.5)
        assert abs(got - expect) < 1e-14

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 31), st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 3))
    def test_group_and_unitarity(self, seed, t, s, order):
        phi = SpectralField(G, random_coeffs(seed))
        a = apply_W0(apply_W0(phi, t), s).coeffs
        b = apply_W0(phi, t + s).coeffs
        assert rel(a, b) < 1e-12
        assert abs(sobolev_norm(apply_W0(phi, t), order) - sobolev_norm(phi, order)) <= \
            1e-12 * sobolev_norm(phi, order)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 31), st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False))
    def test_linear(self, seed, c):
        a, b = random_coeffs(seed), random_coeffs(seed + 1)
        lhs = apply_W0(SpectralField(G, c * a + b), 0.3).coeffs
        rhs = c * apply_W0(SpectralField(G, a), 0.3).coeffs + apply_W0(SpectralField(G, b), 0.3).coeffs
        assert rel(lhs, rhs) < 1e-12


class TestDuhamel:
    def test_zero(self):
        f = Trajectory.constant(SpectralField.zeros(G), T_GRID)
        assert not np.any(duhamel(f).coeffs)

    def test_constant_forcing_closed_form(self):
        c = random_coeffs(3)
        out = duhamel(Trajectory.constant(SpectralField(G, c), T_GRID)).coeffs
        t = T_GRID[:, None, None]
        expect = c * (1 - np.exp(-1j * OMEGA * t)) / OMEGA
        assert rel(out, expect) < 1e-12

    def test_linear_forcing_closed_form(self):
        c = random_coeffs(4)
        t = T_GRID[:, None, None]
        f = Trajectory(G, T_GRID, c * t)
        z = 1j * OMEGA
        expect = 1j * c * (t / z - (1 - np.exp(-z * t)) / z ** 2)
        assert rel(duhamel(f).coeffs, expect) < 1e-12

    def test_time_derivative_consistency(self):
        # Phi' = i f - i omega Phi, checked by centred differences at second order
        errs = []
        for M in (100, 200):
            t = np.linspace(0, 0.2, M + 1)
            f = Trajectory(G, t, random_coeffs(5)[None] * np.cos(7 * t)[:, None, None])
            phi = duhamel(f).coeffs
            h = t[1] - t[0]
            deriv = (phi[2:] - phi[:-2]) / (2 * h)
            rhs = 1j * f.coeffs[1:-1] - 1j * OMEGA * phi[1:-1]
            # compare on the low modes where h*omega is small
            errs.append(np.max(np.abs((deriv - rhs)[:, :2, :2])))
        assert errs[0] / errs[1] > 3.5

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2 ** 31), st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False))
    def test_linear(self, seed, c):
        t = np.linspace(0, 0.1, 11)
        a = random_coeffs(seed, (11,) + G.shape)
        b = random_coeffs(seed + 1, (11,) + G.shape)
        lhs = duhamel(Trajectory(G, t, c * a + b)).coeffs
        rhs = c * duhamel(Trajectory(G, t, a)).coeffs + duhamel(Trajectory(G, t, b)).coeffs
        assert rel(lhs, rhs) < 1e-12

    def test_grid_must_start_at_zero(self):
        f = Trajectory.constant(SpectralField.zeros(G), T_GRID + 1)
        with pytest.raises(ContractViolation):
            duhamel(f)

    def test_phi_functions_branches_agree(self):
        z = np.array([0.49999, 0.50001]) * 1j
        p1, p2 = phi_functions(z)
        assert abs(p1[0] - p1[1]) < 1e-4 and abs(p2[0] - p2[1]) < 1e-4
        zz = np.array([0.3j, 2.0 + 1j])
        q1, q2 = phi_functions(zz)
        assert np.allclose(q1, (np.exp(zz) - 1) / zz, rtol=1e-14)
        assert np.allclose(q2, (np.exp(zz) - 1 - zz) / zz ** 2, rtol=1e-12)

    def test_initial_value_propagates(self):
        v0 = random_coeffs(6)
        out = integrate_forced(np.zeros((len(T_GRID),) + G.shape), T_GRID, OMEGA, v0)
        assert rel(out[-1], v0 * np.exp(-1j * OMEGA * T_GRID[-1])) < 1e-12


class TestWb:
    def test_zero(self):
        z = BoundaryData.zeros(G, T_GRID)
        assert not np.any(apply_Wb(z, z).coeffs)

    def test_constant_h1_closed_form(self):
        c = random_coeffs(7, (G.N_x,))
        h1 = BoundaryData(G, T_GRID, np.broadcast_to(c, (len(T_GRID), G.N_x)))
        out = apply_Wb(h1, BoundaryData.zeros(G, T_GRID)).coeffs
        t = T_GRID[:, None, None]
        n = G.n[None, None, :]
        expect = 2 * np.pi * n * c[None, :, None] * (1 - np.exp(-1j * OMEGA * t)) / OMEGA
        assert rel(out, expect) < 1e-12

    def test_constant_h2_sign(self):
        c = random_coeffs(8, (G.N_x,))
        h = BoundaryData(G, T_GRID, np.broadcast_to(c, (len(T_GRID), G.N_x)))
        z = BoundaryData.zeros(G, T_GRID)
        a, b = apply_Wb(h, z).coeffs, apply_Wb(z, h).coeffs
        sign = np.where(G.n % 2 == 0, 1.0, -1.0)
        assert rel(b, -sign * a) < 1e-14

    def test_mode_decoupling(self):
        base = random_coeffs(9, (len(T_GRID), G.N_x))
        bumped = base.copy()
        bumped[:, 3] += 1.0
        z = BoundaryData.zeros(G, T_GRID)
        d = apply_Wb(BoundaryData(G, T_GRID, bumped), z).coeffs - apply_Wb(BoundaryData(G, T_GRID, base), z).coeffs
        others = np.delete(d, 3, axis=1)
        assert np.max(np.abs(others)) < 1e-13 and np.max(np.abs(d[:, 3])) > 0.1

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2 ** 31), st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False))
    def test_linear(self, seed, c):
        t = np.linspace(0, 0.1, 11)
        a = BoundaryData(G, t, random_coeffs(seed, (11, G.N_x)))
        b = BoundaryData(G, t, random_coeffs(seed + 1, (11, G.N_x)))
        lhs = apply_Wb(a.scaled(c) + b, b).coeffs
        rhs = c * apply_Wb(a, BoundaryData.zeros(G, t)).coeffs + apply_Wb(b, b).coeffs
        assert rel(lhs, rhs) < 1e-12

    def test_mismatched_time_grids(self):
        a = BoundaryData.zeros(G, T_GRID)
        b = BoundaryData.zeros(G, np.linspace(0, 1, 11))
        with pytest.raises(ContractViolation):
            apply_Wb(a, b)


class TestTrace:
    def test_zero(self):
        traj = Trajectory.constant(SpectralField.zeros(G), T_GRID[:3])
        assert not np.any(boundary_trace(traj, "y=0"))

    @pytest.mark.parametrize("side,n", [("y=0", 2), ("y=1", 3)])
    def test_single_mode(self, side, n):
        phi = SpectralField.mode(G, 1, n, 0.5 + 0.5j)
        traj = Trajectory.constant(phi, T_GRID[:2])
        eps = 0.03
        y = eps if side == "y=0" else 1 - eps
        expect = (0.5 + 0.5j) * np.exp(1j * np.pi * G.xi[1] * G.x) * np.sin(n * np.pi * y)
        assert np.max(np.abs(boundary_trace(traj, side, eps)[0] - expect)) < 1e-14

    def test_wb_trace_approaches_wall_data(self):
        # trace error of the sine series near the wall shrinks as N_y grows
        errs = []
        for ny in (15, 31, 63):
            g = Grid(12.0, 32, ny)
            t = np.linspace(0, 0.1, 101)
            h1 = BoundaryData.from_function(g, t, lambda X, T: np.exp(-X ** 2) * np.sin(5 * np.pi * T) ** 2)
            traj = apply_Wb(h1, BoundaryData.zeros(g, t))
            tr = boundary_trace(traj, "y=0", 0.5 / (ny + 1))
            errs.append(np.sqrt(np.mean(np.abs(tr - h1.values()) ** 2)))
        assert errs[2] < errs[1] < errs[0]

    def test_bad_side(self):
        traj = Trajectory.constant(SpectralField.zeros(G), T_GRID[:2])
        with pytest.raises(ContractViolation):
            boundary_trace(traj, "x=0")
