"""Acceptance criteria 1-10.  Each test reports through the ``criterion`` fixture,
which prints one PASS/FAIL line per criterion at the end of the run."""
import numpy as np
import pytest

from stripnls.cli import main
from stripnls.diagnostics import energy_balance, mass_balance, measured_order, trace_inequality_margin
from stripnls.estimates import EstimateConfig, dependence_probe, ratio_duhamel, ratio_W0, ratio_Wb, sharpness_probe
from stripnls.fd_oracle import FdGrid, cn_solve, compare
from stripnls.formats import read_snapshot, write_snapshot
from stripnls.operators import apply_Wb, duhamel
from stripnls.solver import Scenario, march, picard_window
from stripnls.spectral import BoundaryData, Grid, PhysicalField, SpectralField, Trajectory, lifted_to_physical

from conftest import gaussian_sine, rel, small_defocusing

REF = Grid(12.0, 128, 32)
WALL = lambda x, t: 0.5 * np.exp(-x ** 2) * np.sin(5 * np.pi * t) ** 2  # noqa: E731


@pytest.fixture(scope="module")
def reference_run():
    scn = small_defocusing(REF, T=0.1, dt=1e-3, window_dt=0.01)
    traj, report = march(scn)
    return scn, traj, report


def test_1_exact_linear_propagation(criterion):
    g = Grid(8.0, 32, 15)
    xi = g.xi[1]
    scn = Scenario.from_functions(g, 0.0, 3, lambda X, Y: np.exp(1j * np.pi * xi * X) * np.sin(np.pi * Y),
                                  None, None, T=0.5, dt=1e-3, window_dt=0.05)
    traj, _ = march(scn)
    expect = scn.phi.coeffs * np.exp(-1j * np.pi ** 2 * (xi ** 2 + 1) * 0.5)
    err = rel(traj.coeffs[-1], expect)
    criterion(1, err < 1e-12, f"relative error at t=0.5 {err:.2e} (< 1e-12)")


def test_2_closed_form_integrals(criterion):
    g = Grid(8.0, 32, 15)
    t = np.linspace(0.0, 0.5, 201)
    rng = np.random.default_rng(2)
    omega = g.omega()
    c = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    phi_t = duhamel(Trajectory.constant(SpectralField(g, c), t)).coeffs
    tt = t[:, None, None]
    e1 = rel(phi_t, c * (1 - np.exp(-1j * omega * tt)) / omega)
    hk = rng.standard_normal(g.N_x) + 1j * rng.standard_normal(g.N_x)
    h = BoundaryData(g, t, np.broadcast_to(hk, (len(t), g.N_x)))
    z = BoundaryData.zeros(g, t)
    n = g.n[None, None, :]
    sign = np.where(g.n % 2 == 0, 1.0, -1.0)[None, None, :]
    wb_form = 2 * np.pi * n * hk[None, :, None] * (1 - np.exp(-1j * omega * tt)) / omega
    e2 = rel(apply_Wb(h, z).coeffs, wb_form)
    e3 = rel(apply_Wb(z, h).coeffs, -sign * wb_form)
    worst = max(e1, e2, e3)
    criterion(2, worst < 1e-12, f"Duhamel {e1:.1e}, Wb(h1) {e2:.1e}, Wb(h2) {e3:.1e} (< 1e-12)")


def test_3_oracle_equivalence(reference_run, criterion):
    scn, traj, _ = reference_run
    errs = []
    for M_x, M_y, dt in [(128, 33, 1e-3), (256, 65, 1e-3)]:
        fd = cn_solve(scn, FdGrid(12.0, M_x, M_y, dt), save_times=[0.1])
        errs.append(compare(traj, fd, [0.1], scn.h1, scn.h2)[0].l2)
    ok = errs[1] < 1e-4 and errs[1] < errs[0]
    criterion(3, ok, f"L2 diff at t=0.1: FD 128x33 {errs[0]:.2e}, FD 256x65 {errs[1]:.2e} (< 1e-4, decreasing)")


def test_4_contraction(reference_run, criterion):
    _, _, report = reference_run
    rho = report.contraction_factors
    ok_nl = len(rho) == len(report.windows) and max(rho) < 0.5
    lin = small_defocusing(REF, T=0.02, window_dt=0.01)
    lin.lam = 0.0
    its = [picard_window(lin, t0, t0 + 0.01, lin.phi).iterations for t0 in (0.0,)]
    _, lin_report = march(lin)
    ok_lin = its == [1] and all(i == 1 for i in lin_report.iterations)
    criterion(4, ok_nl and ok_lin,
              f"max rho {max(rho):.2e} over {len(rho)} windows (< 1/2); lambda=0 iterations {lin_report.iterations}")


def _conservation(lam, dt):
    scn = Scenario.from_functions(REF, lam, 3, gaussian_sine(), None, None, T=0.1, dt=dt, window_dt=0.01)
    traj, _ = march(scn)
    m, e = mass_balance(traj, scn.h1, scn.h2), energy_balance(traj, scn)
    return (np.max(np.abs(m.residual)), np.max(np.abs(m.value)),
            np.max(np.abs(e.residual)), np.max(np.abs(e.value)))


def test_5_conservation(criterion):
    m0, M0, e0, E0 = _conservation(0.0, 1e-3)
    ok_lin = m0 < 1e-6 * M0 and e0 < 1e-9 * E0
    drift = [_conservation(-1.0, dt) for dt in (2e-3, 1e-3, 5e-4)]
    mass_rel = [d[0] / d[1] for d in drift]
    mass_order = measured_order([d[0] for d in drift])
    energy_order = measured_order([d[2] for d in drift])
    ok_nl = max(mass_rel) < 1e-6 and min(mass_order) >= 1 and min(energy_order) >= 1
    criterion(5, ok_lin and ok_nl,
              f"lambda=0 mass {m0 / M0:.1e}, energy {e0 / E0:.1e}; lambda=-1 mass {max(mass_rel):.1e}, "
              f"orders mass {np.round(mass_order, 2).tolist()} energy {np.round(energy_order, 2).tolist()} (>= 1)")


def test_6_strichartz_stability(criterion):
    cfg = EstimateConfig(ensemble_size=100, seed=0)
    changes = {}
    for label, fn in [("W0-lr", lambda c: ratio_W0(c, "lr")), ("duhamel", ratio_duhamel), ("Wb", ratio_Wb)]:
        a, b = fn(cfg).max, fn(cfg.refined()).max
        changes[label] = abs(b / a - 1)
    linf = ratio_W0(cfg, "linf")
    linf_err = float(np.max(np.abs(linf.ratios - 1)))
    ok = max(changes.values()) < 0.1 and linf_err < 1e-12
    criterion(6, ok, ", ".join(f"{k} {100 * v:.2f}%" for k, v in changes.items())
              + f" (< 10%); W0 Linf ratio |r-1| <= {linf_err:.1e}")


def test_7a_sharpness_plateau(criterion):
    c = sharpness_probe(2.5, 200, 0.25, N_values=[50, 200])
    change = abs(c.ratio[1] / c.ratio[0] - 1)
    criterion(7, change < 0.05, f"beta=2.5 ratio change N=50->200 {100 * change:.3f}% (< 5%)")


def test_7b_sharpness_growth(criterion):
    c = sharpness_probe(1.5, 100, 0.25, N_values=[10, 100])
    growth = c.ratio[1] / c.ratio[0] - 1
    criterion(7, growth >= 0.25, f"beta=1.5 sigma=0.25 ratio growth N=10->100 {100 * growth:.1f}% (>= 25%)")


def test_8_continuous_dependence(criterion):
    scn = small_defocusing(REF, T=0.1, window_dt=0.01)
    table = dependence_probe(scn, n_perturbations=20, magnitude=1e-3, seed=0)
    ok = np.all(np.isfinite(table.ratios)) and table.spread < 10
    criterion(8, ok, f"20 perturbations, ratio range [{table.ratios.min():.3f}, {table.ratios.max():.3f}], "
                     f"max/min {table.spread:.3f} (< 10)")


def test_9_trace_inequality(reference_run, criterion):
    runs = {"reference": reference_run[:2]}
    for name, h1, amp, p in [("boundary-driven", WALL, 0.0, 3), ("driven+data p=4", WALL, 0.3, 4)]:
        scn = Scenario.from_functions(Grid(12.0, 128, 32), -1.0, p, gaussian_sine(amp), h1, None,
                                      T=0.2, dt=1e-3, window_dt=0.02)
        runs[name] = (scn, march(scn)[0])
    worst = {}
    for name, (scn, traj) in runs.items():
        tm = trace_inequality_margin(traj, scn)
        worst[name] = float(np.min(tm.margin) / tm.scale) if tm.scale else 0.0
    ok = all(v >= -1e-6 for v in worst.values())
    criterion(9, ok, ", ".join(f"{k} min margin/scale {v:.3f}" for k, v in worst.items()) + " (>= -1e-6)")


def test_10_determinism_and_formats(tmp_path, reference_run, criterion):
    cfg = tmp_path / "est.cfg"
    cfg.write_text("L_x = 12\nN_x = 32\nN_y = 15\nT = 0.01\ndt = 1e-3\nlambda = 0\np = 3\n"
                   "ensemble_size = 10\nest_N_x = 32\nest_N_y = 7\nest_n_t = 65\nseed = 42\n")
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [main(["estimates", "--config", str(cfg), "--out", str(o)]) for o in outs]
    names = sorted(p.name for p in outs[0].glob("*.csv"))
    identical = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    scn, traj, _ = reference_run
    vals = lifted_to_physical(traj.coeffs[-1], scn.h1.at(0.1), scn.h2.at(0.1), REF)
    path = write_snapshot(tmp_path / "u.nlss", PhysicalField(REF, vals))
    snap = read_snapshot(path)
    bit_exact = snap.values.tobytes() == vals.astype("<c16").tobytes() and snap.L_x == REF.L_x
    rewritten = write_snapshot(tmp_path / "v.nlss", snap.to_field()).read_bytes() == path.read_bytes()
    ok = codes == [0, 0] and len(names) == 5 and identical and bit_exact and rewritten
    criterion(10, ok, f"{len(names)} CSV files byte-identical={identical}; snapshot bit-exact={bit_exact and rewritten}")
