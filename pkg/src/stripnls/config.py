"""Flat ``key = value`` run configuration.

One setting per line, ``#`` starts a comment, blank lines are ignored.
Initial and wall data are chosen by family name (``zero``, ``gaussian-bump``,
``single-mode``, ``file``) with ``<prefix>_<param>`` keys for parameters.
Every error message carries the offending line number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .formats import LAYOUT_TRACE, read_snapshot
from .spectral import BoundaryData, Grid, SpectralField, WindowSpec, lifted_to_spectral, to_spectral, x_forward

COMMANDS = ("solve", "linear", "estimates", "sharpness", "oracle-compare", "diagnose")
PHI_FAMILIES = ("zero", "gaussian-bump", "single-mode", "file")
H_FAMILIES = ("zero", "gaussian-bump", "single-mode", "file")


class ConfigError(ValueError):
    def __init__(self, line: int | None, message: str):
        self.line = line
        where = f"line {line}: " if line is not None else "config: "
        super().__init__(where + message)


@dataclass(frozen=True)
class Key:
    kind: type
    default: Any = None
    required: bool = False
    choices: tuple = ()
    minimum: float | None = None
    help: str = ""


def _data_keys(prefix: str, families: tuple, time_profile: bool) -> dict[str, Key]:
    keys = {
        prefix: Key(str, "zero", choices=families, help="data family"),
        f"{prefix}_amplitude": Key(float, 0.1),
        f"{prefix}_x0": Key(float, 0.0),
        f"{prefix}_width": Key(float, 1.0, minimum=1e-12),
        f"{prefix}_mode_k": Key(int, 0),
        f"{prefix}_file": Key(str, ""),
    }
    if time_profile:
        keys[f"{prefix}_freq"] = Key(float, 5.0, help="time profile sin^2(pi*freq*t)")
        keys[f"{prefix}_window"] = Key(str, "none", choices=("none", "smooth-bump"))
        keys[f"{prefix}_ramp"] = Key(float, 0.1, minimum=1e-12)
    else:
        keys[f"{prefix}_mode_n"] = Key(int, 1, minimum=1)
    return keys


SCHEMA: dict[str, Key] = {
    "L_x": Key(float, required=True, minimum=1e-12),
    "N_x": Key(int, required=True, minimum=4),
    "N_y": Key(int, required=True, minimum=1),
    "T": Key(float, required=True, minimum=1e-300),
    "dt": Key(float, required=True, minimum=1e-300),
    "lambda": Key(float, required=True),
    "p": Key(float, required=True),
    "window_dt": Key(float, 0.0, help="0 means T"),
    "picard_tol": Key(float, 1e-10, minimum=0.0),
    "picard_max_iter": Key(int, 50, minimum=1),
    "s_monitor": Key(float, 1.0, minimum=0.0),
    "r": Key(float, 4.0),
    "compat_threshold": Key(float, 1e-6, minimum=0.0),
    "blowup_threshold": Key(float, math.inf, minimum=0.0),
    "snapshot_every": Key(int, 0, minimum=0, help="steps between snapshots; 0 writes the final one"),
    "seed": Key(int, 0),
    **_data_keys("phi", PHI_FAMILIES, time_profile=False),
    **_data_keys("h1", H_FAMILIES, time_profile=True),
    **_data_keys("h2", H_FAMILIES, time_profile=True),
    # estimates
    "ensemble_size": Key(int, 100, minimum=1),
    "family": Key(str, "gaussian", choices=("gaussian", "bandlimited", "single-mode")),
    "est_r": Key(float, 4.0),
    "est_s": Key(float, 0.0, minimum=0.0),
    "est_sigma": Key(float, 0.75),
    "est_T": Key(float, 0.1, minimum=1e-300),
    "est_n_t": Key(int, 201, minimum=4),
    "est_L_x": Key(float, 16.0, minimum=1e-12),
    "est_N_x": Key(int, 64, minimum=4),
    "est_N_y": Key(int, 15, minimum=1),
    "duhamel_q": Key(float, 4.0),
    "dependence_runs": Key(int, 0, minimum=0),
    "dependence_magnitude": Key(float, 1e-3, minimum=0.0),
    # sharpness
    "beta": Key(float, 1.5, minimum=1e-300),
    "N_max": Key(int, 200, minimum=1),
    "sharp_sigma": Key(float, 0.25, minimum=0.0),
    # oracle
    "fd_M_x": Key(int, 256, minimum=4),
    "fd_M_y": Key(int, 65, minimum=3),
    "fd_dt": Key(float, 0.0, help="0 means dt"),
    "compare_times": Key(str, "", help="comma-separated times; empty means T"),
}


def _convert(name: str, raw: str, line: int | None) -> Any:
    key = SCHEMA[name]
    if key.kind is str:
        value = raw
        if key.choices and value not in key.choices:
            raise ConfigError(line, f"invalid value {raw!r} for {name!r}; expected one of {', '.join(key.choices)}")
        return value
    try:
        if key.kind is int:
            as_float = float(raw)
            if not as_float.is_integer():
                raise ValueError
            value = int(as_float)
        else:
            value = float(raw)
    except ValueError:
        raise ConfigError(line, f"malformed number for {name!r}: {raw!r}") from None
    if name == "p" and not value >= 3:
        raise ConfigError(line, "p must be ≥ 3")
    if key.minimum is not None and not value >= key.minimum:
        raise ConfigError(line, f"{name} must be ≥ {key.minimum:g}, got {raw!r}")
    return value


@dataclass(eq=True)
class RunConfig:
    settings: dict[str, Any]
    command: str = "solve"
    config_path: str | None = None
    out_dir: str = "."
    lines: dict[str, int] = field(default_factory=dict, compare=False)

    def __getitem__(self, name: str) -> Any:
        return self.settings[name]

    def with_overrides(self, pairs: list[str]) -> "RunConfig":
        """Apply ``key=value`` strings, type-checked against the schema."""
        settings = dict(self.settings)
        for pair in pairs:
            if "=" not in pair:
                raise ConfigError(None, f"override {pair!r} is not key=value")
            name, raw = (s.strip() for s in pair.split("=", 1))
            if name not in SCHEMA:
                raise ConfigError(None, f"unknown key {name!r} in override")
            settings[name] = _convert(name, raw, None)
        return RunConfig(settings, self.command, self.config_path, self.out_dir, dict(self.lines))

    def resolved(self) -> dict[str, Any]:
        return {k: self.settings[k] for k in SCHEMA}


def parse_settings(text: str) -> tuple[dict[str, Any], dict[str, int]]:
    settings: dict[str, Any] = {}
    lines: dict[str, int] = {}
    nlines = 0
    for nlines, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(nlines, f"expected 'key = value', got {raw_line.strip()!r}")
        name, raw = (s.strip() for s in line.split("=", 1))
        if name not in SCHEMA:
            raise ConfigError(nlines, f"unknown key {name!r}")
        if name in settings:
            raise ConfigError(nlines, f"duplicate key {name!r} (first set on line {lines[name]})")
        if raw == "" and SCHEMA[name].kind is not str:
            raise ConfigError(nlines, f"missing value for {name!r}")
        settings[name] = _convert(name, raw, nlines)
        lines[name] = nlines
    for name, key in SCHEMA.items():
        if name in settings:
            continue
        if key.required:
            raise ConfigError(nlines + 1, f"missing required key {name!r}")
        settings[name] = key.default
    return settings, lines


def serialize(cfg: RunConfig | dict) -> str:
    settings = cfg.settings if isinstance(cfg, RunConfig) else cfg
    out = []
    for name in SCHEMA:
        v = settings[name]
        out.append(f"{name} = {v!r}" if isinstance(v, float) else f"{name} = {v}")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------- data families

def _gaussian(x, amp, x0, width):
    return amp * np.exp(-((x - x0) / width) ** 2)


def _phi_function(s: dict, grid_L: float):
    fam = s["phi"]
    amp, x0, w = s["phi_amplitude"], s["phi_x0"], s["phi_width"]
    n, k = s["phi_mode_n"], s["phi_mode_k"]
    if fam == "zero":
        return lambda x, y: np.zeros(np.broadcast(x, y).shape, dtype=complex)
    if fam == "gaussian-bump":
        return lambda x, y: _gaussian(x, amp, x0, w) * np.sin(n * np.pi * y) + 0j
    if fam == "single-mode":
        xi = 2.0 * k / grid_L
        return lambda x, y: amp * np.exp(1j * np.pi * xi * x) * np.sin(n * np.pi * y)
    return None


def _h_function(s: dict, prefix: str, grid_L: float):
    fam = s[prefix]
    amp, x0, w = s[f"{prefix}_amplitude"], s[f"{prefix}_x0"], s[f"{prefix}_width"]
    freq, k = s[f"{prefix}_freq"], s[f"{prefix}_mode_k"]
    # sin^2 ramp: zero value and zero slope at t = 0, so sine-mode initial data stay compatible
    ramp = lambda t: np.sin(np.pi * freq * t) ** 2  # noqa: E731
    if fam == "zero":
        return None
    if fam == "gaussian-bump":
        return lambda x, t: _gaussian(x, amp, x0, w) * ramp(t) + 0j
    if fam == "single-mode":
        xi = 2.0 * k / grid_L
        return lambda x, t: amp * np.exp(1j * np.pi * xi * x) * ramp(t)
    return None


def _resolve_path(name: str, base: Path | None) -> Path:
    p = Path(name)
    if not p.is_absolute() and base is not None:
        p = base / p
    return p


def build_scenario(cfg: RunConfig):
    """Scenario from resolved settings; file-backed data carry no analytic callables."""
    from .solver import Scenario

    s = cfg.settings
    line = cfg.lines.get
    try:
        grid = Grid(s["L_x"], s["N_x"], s["N_y"])
    except ValueError as exc:
        raise ConfigError(line("N_x"), str(exc)) from None
    T, dt = s["T"], s["dt"]
    nsteps = T / dt
    if abs(nsteps - round(nsteps)) > 1e-8 * max(1.0, nsteps):
        raise ConfigError(line("dt"), f"T={T!r} is not an integer multiple of dt={dt!r}")
    window_dt = s["window_dt"] or T
    base = Path(cfg.config_path).parent if cfg.config_path else None
    kw = dict(picard_tol=s["picard_tol"], picard_max_iter=s["picard_max_iter"],
              s_monitor=s["s_monitor"], r=s["r"], compat_threshold=s["compat_threshold"],
              blowup_threshold=s["blowup_threshold"])
    phi_fn = _phi_function(s, grid.L_x)
    h_fns = [_h_function(s, pre, grid.L_x) for pre in ("h1", "h2")]
    file_backed = phi_fn is None or any(s[pre] == "file" for pre in ("h1", "h2"))
    windows = [WindowSpec(s[f"{pre}_window"], s[f"{pre}_ramp"]) for pre in ("h1", "h2")]
    try:
        if not file_backed:
            scn = Scenario.from_functions(grid, s["lambda"], s["p"], phi_fn, h_fns[0], h_fns[1],
                                          T=T, dt=dt, window_dt=window_dt, **kw)
            return scn.with_windows(*windows)
        t = dt * np.arange(int(round(nsteps)) + 1)
        if phi_fn is None:
            snap = read_snapshot(_resolve_path(s["phi_file"], base))
            phi = SpectralField(grid, to_spectral(snap.to_field(grid).values, grid))
        else:
            X, Y = grid.mesh()
            nodal = np.broadcast_to(phi_fn(X, Y), grid.shape).astype(complex)
            b0 = x_forward(np.broadcast_to(phi_fn(grid.x, 0.0), (grid.N_x,)).astype(complex), grid)
            b1 = x_forward(np.broadcast_to(phi_fn(grid.x, 1.0), (grid.N_x,)).astype(complex), grid)
            phi = SpectralField(grid, lifted_to_spectral(nodal, b0, b1, grid))
        hs = []
        for pre, fn, win in zip(("h1", "h2"), h_fns, windows):
            if s[pre] == "file":
                hs.append(_trace_from_file(_resolve_path(s[f"{pre}_file"], base), grid, t, win))
            elif fn is None:
                hs.append(BoundaryData.zeros(grid, t, win))
            else:
                hs.append(BoundaryData.from_function(grid, t, fn, win))
        return Scenario(grid=grid, lam=s["lambda"], p=s["p"], phi=phi, h1=hs[0], h2=hs[1], T=T,
                        window_dt=window_dt, **kw)
    except (OSError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(None, str(exc)) from None


def _trace_from_file(path: Path, grid: Grid, t: np.ndarray, window: WindowSpec) -> BoundaryData:
    snap = read_snapshot(path)
    if snap.layout != LAYOUT_TRACE:
        raise ConfigError(None, f"{path}: boundary data must use the trace layout")
    if snap.values.shape != (len(t), grid.N_x):
        raise ConfigError(None, f"{path}: trace table {snap.values.shape} does not match "
                                f"({len(t)} times, {grid.N_x} x nodes)")
    return BoundaryData.from_samples(grid, t, snap.values, window)


def parse_config(text: str, command: str = "solve", config_path: str | None = None,
                 out_dir: str = ".", overrides: list[str] | None = None, build: bool = True):
    """Parse config text into a :class:`RunConfig` and (optionally) its Scenario."""
    if command not in COMMANDS:
        raise ConfigError(None, f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    settings, lines = parse_settings(text)
    cfg = RunConfig(settings, command, config_path, out_dir, lines)
    if overrides:
        cfg = cfg.with_overrides(overrides)
    scn = build_scenario(cfg) if build else None
    return cfg, scn


__all__ = ["COMMANDS", "ConfigError", "Key", "RunConfig", "SCHEMA", "build_scenario",
           "parse_config", "parse_settings", "serialize"]
