"""Binary field snapshots and plot-ready CSV tables.

Snapshot layout (little-endian): magic ``NLSS``; u32 version word; u32 N_x;
u32 N_y; f64 L_x; then N_x * N_y row-major complex pairs (f64 re, f64 im).
The low 16 bits of the version word hold the format version (1); the high 16
bits name the node layout:

* 0: spectral grid, interior y nodes j/(N_y+1), j = 1..N_y;
* 1: finite-difference grid, y nodes j/(N_y-1), j = 0..N_y-1, wall rows included;
* 2: boundary trace table, rows are time samples, columns are x nodes.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import ContractViolation, Grid, PhysicalField

MAGIC = b"NLSS"
VERSION = 1
LAYOUT_SPECTRAL, LAYOUT_FD, LAYOUT_TRACE = 0, 1, 2
_HEADER = struct.Struct("<4sIIId")


class SnapshotError(ValueError):
    """Malformed or incompatible snapshot file."""


@dataclass(frozen=True, eq=False)
class Snapshot:
    L_x: float
    values: np.ndarray
    layout: int = LAYOUT_SPECTRAL

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_field(self, grid: Grid | None = None) -> PhysicalField:
        if self.layout != LAYOUT_SPECTRAL:
            raise SnapshotError("only spectral-layout snapshots convert to a PhysicalField")
        g = grid or Grid(self.L_x, *self.values.shape)
        if g.shape != self.values.shape or g.L_x != self.L_x:
            raise SnapshotError(f"snapshot {self.values.shape} on L_x={self.L_x} does not match grid "
                                f"{g.shape} on L_x={g.L_x}")
        return PhysicalField(g, self.values)


def encode_snapshot(values: np.ndarray, L_x: float, layout: int = LAYOUT_SPECTRAL) -> bytes:
    values = np.asarray(values, dtype=complex)
    if values.ndim != 2:
        raise ContractViolation("snapshot values must be two-dimensional")
    if not np.all(np.isfinite(values)):
        raise ContractViolation("snapshot values must be finite")
    nx, ny = values.shape
    head = _HEADER.pack(MAGIC, VERSION | (layout << 16), nx, ny, float(L_x))
    return head + np.ascontiguousarray(values).astype("<c16").tobytes()


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise SnapshotError("file shorter than the snapshot header")
    magic, word, nx, ny, L_x = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    version, layout = word & 0xFFFF, word >> 16
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if layout not in (LAYOUT_SPECTRAL, LAYOUT_FD, LAYOUT_TRACE):
        raise SnapshotError(f"unknown layout {layout}")
    body = data[_HEADER.size:]
    if len(body) != 16 * nx * ny:
        raise SnapshotError(f"payload has {len(body)} bytes, expected {16 * nx * ny}")
    values = np.frombuffer(body, dtype="<c16").reshape(nx, ny).astype(complex)
    return Snapshot(L_x, values, layout)


def write_snapshot(path, field: PhysicalField | np.ndarray, L_x: float | None = None,
                   layout: int = LAYOUT_SPECTRAL) -> Path:
    if isinstance(field, PhysicalField):
        values, L_x = field.values, field.grid.L_x
    else:
        if L_x is None:
            raise ContractViolation("L_x is required when writing a raw array")
        values = field
    path = Path(path)
    path.write_bytes(encode_snapshot(values, L_x, layout))
    return path


def read_snapshot(path) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())


def write_csv(path, columns, rows) -> Path:
    """Comma-separated table, '.' decimal, 17 significant digits per value."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size and rows.shape[1] != len(columns):
        raise ContractViolation(f"{rows.shape[1]} columns of data for {len(columns)} names")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_number(v) for v in row) + "\n")
    return path


def format_number(v: float) -> str:
    return "nan" if np.isnan(v) else f"{v:.16e}"


def read_csv(path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    cols = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln], dtype=float)
    return cols, data.reshape(-1, len(cols))


__all__ = [
    "LAYOUT_FD", "LAYOUT_SPECTRAL", "LAYOUT_TRACE", "MAGIC", "Snapshot", "SnapshotError", "VERSION",
    "decode_snapshot", "encode_snapshot", "format_number", "read_csv", "read_snapshot",
    "write_csv", "write_snapshot",
]
