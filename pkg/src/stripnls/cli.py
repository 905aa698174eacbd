"""``strip-nls <command> --config <file> [--out <dir>] [--set key=value ...] [--seed N]``.

Exit status: 0 on success, 2 when a solve flags blow-up, 1 on any error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, estimates
from .config import COMMANDS, ConfigError, RunConfig, parse_config, serialize
from .fd_oracle import FdGrid, cn_solve, compare
from .formats import LAYOUT_FD, write_csv, write_snapshot
from .solver import SolveReport, linear_run, march
from .spectral import PhysicalField, lifted_to_physical

EXIT_OK, EXIT_ERROR, EXIT_BLOWUP = 0, 1, 2
NORM_COLUMNS = ("t", "l2", "hs", "l4_running")
RATIO_COLUMNS = ("sample_id", "lhs_norm", "rhs_norm", "ratio")
CURVE_COLUMNS = ("N", "lhs_norm", "rhs_norm", "ratio")


def _header(cfg: RunConfig) -> dict:
    head = {"command": cfg.command}
    head.update(cfg.resolved())
    return head


def _write_report(out: Path, cfg: RunConfig, body: str):
    lines = ["[config]"] + [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}"
                             for k, v in _header(cfg).items()]
    (out / "report.txt").write_text("\n".join(lines) + "\n\n" + body, encoding="utf-8")


def _snapshots(out: Path, traj, scn, every: int):
    g = traj.grid
    steps = list(range(0, len(traj), every)) if every else []
    if len(traj) - 1 not in steps:
        steps.append(len(traj) - 1)
    for m in steps:
        t = traj.t[m]
        vals = lifted_to_physical(traj.coeffs[m], scn.h1.at(t), scn.h2.at(t), g)
        write_snapshot(out / f"u_{m:06d}.nlss", PhysicalField(g, vals))


def _solve_outputs(out: Path, cfg: RunConfig, scn, traj, report: SolveReport, extra: str = ""):
    write_csv(out / "norms.csv", NORM_COLUMNS,
              np.column_stack([report.t, report.l2, report.hs, report.l4_running]))
    bal = diagnostics.balance_report(traj, scn)
    write_csv(out / "balance.csv", bal.COLUMNS, bal.rows())
    _snapshots(out, traj, scn, cfg["snapshot_every"])
    body = report.to_text() + extra
    _write_report(out, cfg, body)
    return bal


def _cmd_solve(cfg, scn, out, linear=False):
    traj, report = linear_run(scn) if linear else march(scn)
    _solve_outputs(out, cfg, scn, traj, report)
    return EXIT_BLOWUP if report.blowup else EXIT_OK


def _cmd_diagnose(cfg, scn, out):
    traj, report = march(scn)
    m = diagnostics.mass_balance(traj, scn.h1, scn.h2)
    e = diagnostics.energy_balance(traj, scn)
    grow = diagnostics.h1_growth_monitor(traj, scn)
    lines = ["", "[diagnostics]",
             f"max_abs_mass_residual = {float(np.max(np.abs(m.residual)))!r}",
             f"max_abs_energy_residual = {float(np.max(np.abs(e.residual)))!r}",
             f"sup_h1_norm = {float(grow.running_sup[-1])!r}",
             f"phi_h1 = {grow.phi_h1!r}",
             f"h1_data_h1 = {grow.h1_data_h1!r}",
             f"h2_data_h1 = {grow.h2_data_h1!r}"]
    if scn.lam < 0:
        tm = diagnostics.trace_inequality_margin(traj, scn)
        lines += [f"min_trace_margin = {float(np.min(tm.margin))!r}",
                  f"trace_rhs_scale = {tm.scale!r}"]
    lines += [f"quadrature_dt = {scn.dt!r}", f"quadrature_dx = {scn.grid.dx!r}",
              f"quadrature_dy = {scn.grid.dy!r}"]
    _solve_outputs(out, cfg, scn, traj, report, "\n".join(lines) + "\n")
    return EXIT_BLOWUP if report.blowup else EXIT_OK


def _estimate_config(cfg: RunConfig) -> estimates.EstimateConfig:
    return estimates.EstimateConfig(
        ensemble_size=cfg["ensemble_size"], seed=cfg["seed"], r=cfg["est_r"], s=cfg["est_s"],
        sigma=cfg["est_sigma"], T=cfg["est_T"], n_t=cfg["est_n_t"], family=cfg["family"],
        L_x=cfg["est_L_x"], N_x=cfg["est_N_x"], N_y=cfg["est_N_y"])


def _cmd_estimates(cfg, scn, out):
    ecfg = _estimate_config(cfg)
    tag = f"r{ecfg.r:g}_s{ecfg.s:g}_sigma{ecfg.sigma:g}"
    results = [
        ("W0-lr", estimates.ratio_W0(ecfg, "lr")),
        ("W0-linf", estimates.ratio_W0(ecfg, "linf")),
        (f"duhamel-q{cfg['duhamel_q']:g}", estimates.ratio_duhamel(ecfg, cfg["duhamel_q"])),
        ("Wb", estimates.ratio_Wb(ecfg)),
    ]
    summary = []
    lines = ["[estimates]", f"theta_r = {ecfg.theta_r!r}", f"resolution = {results[0][1].resolution}",
             "# op max mean"]
    for i, (name, st) in enumerate(results):
        write_csv(out / f"ratios_{name}_{tag}.csv", RATIO_COLUMNS, st.rows())
        summary.append([i, ecfg.r, ecfg.s, ecfg.sigma, st.max, st.mean])
        lines.append(f"{name} {st.max!r} {st.mean!r}")
    if cfg["dependence_runs"]:
        table = estimates.dependence_probe(scn, cfg["dependence_runs"], cfg["dependence_magnitude"],
                                           seed=cfg["seed"])
        write_csv(out / f"ratios_dependence_{tag}.csv", RATIO_COLUMNS, table.rows())
        lines.append(f"dependence_spread = {table.spread!r}")
    write_csv(out / "ratios.csv", ("op_index", "r", "s", "sigma", "max_ratio", "mean_ratio"), summary)
    lines.append("# op_index: " + ", ".join(f"{i}={n}" for i, (n, _) in enumerate(results)))
    _write_report(out, cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_sharpness(cfg, scn, out):
    curve = estimates.sharpness_probe(cfg["beta"], cfg["N_max"], cfg["sharp_sigma"])
    write_csv(out / "ratios.csv", CURVE_COLUMNS, curve.rows())
    tag = f"beta{curve.beta:g}_sigma{curve.sigma:g}"
    write_csv(out / f"ratios_sharpness_{tag}.csv", CURVE_COLUMNS, curve.rows())
    r = curve.ratio
    lines = ["[sharpness]", f"beta = {curve.beta!r}", f"sigma = {curve.sigma!r}",
             f"monotone_nondecreasing = {str(bool(np.all(np.diff(r) >= 0))).lower()}",
             f"ratio_first = {float(r[0])!r}", f"ratio_last = {float(r[-1])!r}"]
    _write_report(out, cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_oracle(cfg, scn, out):
    if scn.data is None:
        raise ConfigError(None, "oracle-compare needs analytic data families (not file references)")
    traj, report = march(scn)
    fd_dt = cfg["fd_dt"] or scn.dt
    fdgrid = FdGrid(scn.grid.L_x, cfg["fd_M_x"], cfg["fd_M_y"], fd_dt)
    raw = cfg["compare_times"].strip()
    times = [float(v) for v in raw.split(",")] if raw else [scn.T]
    fd = cn_solve(scn, fdgrid, save_times=times)
    rows = compare(traj, fd, times, scn.h1, scn.h2)
    write_csv(out / "oracle.csv", ("t", "l2_diff", "linf_diff"), [[r.t, r.l2, r.linf] for r in rows])
    write_snapshot(out / "fd_final.nlss", fd.values[-1], fdgrid.L_x, layout=LAYOUT_FD)
    lines = ["", "[oracle]", f"fd_grid = {fdgrid.M_x}x{fdgrid.M_y}", f"fd_dt = {fd_dt!r}"]
    lines += [f"t={r.t!r} l2_diff={r.l2!r} linf_diff={r.linf!r}" for r in rows]
    _solve_outputs(out, cfg, scn, traj, report, "\n".join(lines) + "\n")
    return EXIT_BLOWUP if report.blowup else EXIT_OK


HANDLERS = {
    "solve": _cmd_solve,
    "linear": lambda c, s, o: _cmd_solve(c, s, o, linear=True),
    "diagnose": _cmd_diagnose,
    "estimates": _cmd_estimates,
    "sharpness": _cmd_sharpness,
    "oracle-compare": _cmd_oracle,
}


def run(cfg: RunConfig, scn) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[cfg.command](cfg, scn, out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strip-nls", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="flat key = value config file")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--print-config", action="store_true",
                    help="print the resolved config and exit")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(None, f"config file {str(path)!r} does not exist")
        overrides = list(args.overrides) + ([f"seed={args.seed}"] if args.seed is not None else [])
        cfg, scn = parse_config(path.read_text(encoding="utf-8"), args.command, str(path), args.out,
                                overrides, build=not args.print_config)
        if args.print_config:
            sys.stdout.write(serialize(cfg))
            return EXIT_OK
        return run(cfg, scn)
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit status 1
        print(f"strip-nls: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
