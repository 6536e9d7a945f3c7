"""Consistency checks of the discrete energy on random fields."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import energy as en
from .grid import Grid, integrate
from .riesz import get_kernel

__all__ = ["SelfCheck", "direct_D", "convolution_check", "nehari_check", "gradient_check", "energy_suite"]


@dataclass
class SelfCheck:
    name: str
    passed: bool
    worst: float
    tol: float
    count: int

    def row(self) -> str:
        return f"{self.name:<14} {'PASS' if self.passed else 'FAIL':<5} worst={self.worst:.3e} tol={self.tol:.0e} n={self.count}"


def direct_D(grid: Grid, alpha: float, u, p: float) -> float:
    """``D(u)`` by the direct pair sum over all nodes (small grids only)."""
    if grid.size > 5000:
        raise ValueError("direct sum is limited to 5000 nodes")
    k = get_kernel(grid, alpha)
    pts = np.indices(grid.shape).reshape(grid.ndim, -1).T
    w = (np.abs(np.asarray(u, dtype=float)) ** p).ravel()
    total = 0.0
    for i in range(len(pts)):
        off = pts - pts[i]
        vals = np.array([k.value(tuple(o)) for o in off])
        total += w[i] * np.dot(vals, w)
    return float(total * grid.cell_volume**2)


def _random(grid, rng):
    u = rng.standard_normal(grid.shape)
    # smooth a little so the spectral norms stay moderate
    return en.gf.helmholtz_inverse(grid, u) * 5.0


def convolution_check(ndims=(2, 3), n_points: int = 8, n_fields: int = 3, alpha: float = 1.0,
                      p: float = 2.0, seed: int = 0, tol: float = 1e-10) -> SelfCheck:
    rng = np.random.default_rng(seed)
    worst, count = 0.0, 0
    for n in ndims:
        g = Grid(n, n_points, 2.0)
        pb = en.Problem(g, alpha, p)
        for _ in range(n_fields):
            u = rng.standard_normal(g.shape)
            a, b = en.D(pb, u), direct_D(g, alpha, u, p)
            worst = max(worst, abs(a - b) / abs(b))
            count += 1
    return SelfCheck("convolution", worst <= tol, worst, tol, count)


def nehari_check(n_fields: int = 10_000, n_points: int = 16, seed: int = 0, tol: float = 1e-12,
                 alpha: float = 1.0, p: float = 2.0) -> SelfCheck:
    """Defect and closed-form energy of ``pi(u)`` for random fields."""
    g = Grid(2, n_points, 4.0)
    pb = en.Problem(g, alpha, p)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_fields):
        u = rng.standard_normal(g.shape)
        v = en.nehari_project(pb, u)
        br = en.J_V(pb, v)
        worst = max(worst, abs(br.defect) / br.norm_sq,
                    abs(en.energy_on_nehari(pb, u) - br.J) / abs(br.J))
    return SelfCheck("nehari", worst <= tol, worst, tol, n_fields)


def gradient_check(n_pairs: int = 100, n_points: int = 16, seed: int = 0, tol: float = 1e-5,
                   alpha: float = 1.0, p: float = 2.0, step: float = 1e-4) -> SelfCheck:
    """Central differences of ``J_V`` against ``<residual, v>``."""
    g = Grid(2, n_points, 4.0)
    pb = en.Problem(g, alpha, p)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        u, v = _random(g, rng), _random(g, rng)
        fd = (en.J_V(pb, u + step * v).J - en.J_V(pb, u - step * v).J) / (2 * step)
        an = integrate(g, en.residual(pb, u) * v)
        worst = max(worst, abs(fd - an) / max(abs(an), 1e-300))
    return SelfCheck("gradient", worst <= tol, worst, tol, n_pairs)


def energy_suite(seed: int = 0, trials: int = 10_000) -> list[SelfCheck]:
    return [convolution_check(seed=seed), nehari_check(n_fields=trials, seed=seed),
            gradient_check(seed=seed)]
