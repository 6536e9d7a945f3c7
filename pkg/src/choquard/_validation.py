"""Argument checks shared across modules."""

from __future__ import annotations

import numpy as np


def check_field(grid, u, name="u") -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise ValueError(f"{name} has shape {u.shape}, grid expects {grid.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError(f"{name} has non-finite values")
    return u


def check_point(ndim, z, name="z") -> np.ndarray:
    z = np.asarray(z, dtype=float).ravel()
    if z.size != ndim:
        raise ValueError(f"{name} must have {ndim} components, got {z.size}")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} has non-finite components")
    return z


def check_unit(ndim, z, name="z") -> np.ndarray:
    z = check_point(ndim, z, name)
    n = np.linalg.norm(z)
    if n == 0:
        raise ValueError(f"{name} must be nonzero")
    return z / n


def check_positive(x, name) -> float:
    x = float(x)
    if not x > 0:
        raise ValueError(f"{name} must be positive, got {x}")
    return x


def check_range(x, lo, hi, name, closed=(True, True)) -> float:
    x = float(x)
    ok_lo = x >= lo if closed[0] else x > lo
    ok_hi = x <= hi if closed[1] else x < hi
    if not (ok_lo and ok_hi):
        raise ValueError(f"{name}={x} outside {'[' if closed[0] else '('}{lo}, {hi}{']' if closed[1] else ')'}")
    return x
