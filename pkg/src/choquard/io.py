"""CHQF binary field files and small CSV/report writers."""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import Grid

MAGIC = b"CHQF"
VERSION = 1


class FormatError(ValueError):
    pass


def write_chqf(path, grid: Grid, u) -> None:
    u = np.ascontiguousarray(u, dtype="<f8")
    if u.shape != grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid {grid.shape}")
    n = grid.ndim
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IB", VERSION, n))
        fh.write(struct.pack(f"<{n}Q", *grid.shape))
        fh.write(struct.pack("<d", grid.spacing))
        fh.write(struct.pack(f"<{n}d", *grid.origin))
        fh.write(u.tobytes(order="C"))


def read_chqf(path) -> tuple[Grid, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    version, n = struct.unpack_from("<IB", data, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    off = 9
    dims = struct.unpack_from(f"<{n}Q", data, off)
    off += 8 * n
    (h,) = struct.unpack_from("<d", data, off)
    off += 8
    origin = struct.unpack_from(f"<{n}d", data, off)
    off += 8 * n
    count = int(np.prod(dims))
    if len(data) - off != 8 * count:
        raise FormatError(f"{path}: expected {count} values, found {(len(data) - off) // 8}")
    if len(set(dims)) != 1:
        raise FormatError(f"{path}: only cubic grids are supported, got dims {dims}")
    grid = Grid(n, int(dims[0]), dims[0] * h / 2.0)
    if not np.allclose(origin, grid.origin, rtol=0, atol=1e-12 * max(1.0, grid.half_width)):
        raise FormatError(f"{path}: origin {origin} is not the box corner {tuple(grid.origin)}")
    u = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(dims).astype(float)
    return grid, u


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(np.float64(x))) if not np.isfinite(x) else f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_report(path, items: dict) -> None:
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k}: {fmt(v)}\n")


def read_report(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if ":" in line:
            k, v = line.split(":", 1)
            out[k.strip()] = v.strip()
    return out
