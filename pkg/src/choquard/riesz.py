"""Riesz potential ``|x|^{-alpha} * w`` by zero-padded FFT convolution."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .grid import Grid, integrate


@lru_cache(maxsize=None)
def unit_cell_average(ndim: int, alpha: float, order: int = 16) -> float:
    """Mean of ``|x|^{-alpha}`` over the unit cube ``[-1/2, 1/2)^N``.

    The cube minus its concentric half-size copy is integrated by tensor
    Gauss-Legendre on 4^N - 2^N sub-cubes; the singular core follows from
    homogeneity, ``int_{c/2} = 2^{alpha-N} int_c``.
    """
    if not 0 < alpha < ndim:
        raise ValueError(f"alpha must lie in (0, {ndim}), got {alpha}")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = nodes / 8.0  # sub-cube of side 1/4
    weights = weights / 8.0
    centers = (np.arange(4) - 1.5) / 4.0
    total = 0.0
    grids = np.meshgrid(*([nodes] * ndim), indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k in range(ndim):
        s = [1] * ndim
        s[k] = order
        wgrid = wgrid * weights.reshape(s)
    for c in np.stack(np.meshgrid(*([centers] * ndim), indexing="ij"), -1).reshape(-1, ndim):
        if np.all(np.abs(c) < 0.25):
            continue
        r2 = sum((g + ck) ** 2 for g, ck in zip(grids, c))
        total += float(np.sum(wgrid * r2 ** (-alpha / 2)))
    return total / (1.0 - 2.0 ** (alpha - ndim))


class RieszKernel:
    """Samples of ``|x|^{-alpha}`` on the doubled grid, plus their transform.

    ``K(0)`` is the cell average of the singular kernel.
    """

    def __init__(self, grid: Grid, alpha: float):
        if not 0 < alpha < grid.ndim:
            raise ValueError(f"alpha must lie in (0, N={grid.ndim}), got {alpha}")
        self.grid = grid
        self.alpha = float(alpha)
        m, h, n = grid.n_points, grid.spacing, grid.ndim
        self.padded_shape = (2 * m,) * n
        off = np.arange(2 * m)
        off = np.where(off < m, off, off - 2 * m) * h
        r2 = 0.0
        for k in range(n):
            s = [1] * n
            s[k] = 2 * m
            r2 = r2 + (off**2).reshape(s)
        with np.errstate(divide="ignore"):
            samples = np.asarray(r2, dtype=float) ** (-self.alpha / 2)
        samples[(0,) * n] = unit_cell_average(n, self.alpha) * h ** (-self.alpha)
        self.samples = samples
        self.center_value = float(samples[(0,) * n])
        self._hat = sfft.rfftn(samples)

    def value(self, offset_cells) -> float:
        """Kernel sample for an integer cell offset."""
        idx = tuple(int(o) % (2 * self.grid.n_points) for o in offset_cells)
        return float(self.samples[idx])

    def convolve(self, w) -> np.ndarray:
        """Linear convolution ``h^N sum_y K(x-y) w(y)`` on the grid."""
        g = self.grid
        wh = sfft.rfftn(w, s=self.padded_shape)
        out = sfft.irfftn(wh * self._hat, s=self.padded_shape)
        return g.cell_volume * out[(slice(0, g.n_points),) * g.ndim]


@lru_cache(maxsize=8)
def _cached_kernel(ndim, n_points, half_width, alpha):
    return RieszKernel(Grid(ndim, n_points, half_width), alpha)


def get_kernel(grid: Grid, alpha: float) -> RieszKernel:
    """Kernel cached per (grid, alpha)."""
    return _cached_kernel(grid.ndim, grid.n_points, grid.half_width, float(alpha))


def riesz_convolve(kernel: RieszKernel, w) -> np.ndarray:
    if np.shape(w) != kernel.grid.shape:
        raise ValueError(f"field shape {np.shape(w)} does not match kernel grid {kernel.grid.shape}")
    return kernel.convolve(w)


def D_energy(kernel: RieszKernel, u, p: float) -> float:
    """The double integral of ``|u(x)|^p |u(y)|^p / |x-y|^alpha``."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    up = np.abs(u) ** p
    return integrate(kernel.grid, riesz_convolve(kernel, up) * up)


def hls_check(kernel: RieszKernel, u, p: float) -> tuple[float, float]:
    """Return ``(D(u), |u|_{pr}^{2p})`` with ``r = 2N/(2N - alpha)``."""
    n, alpha = kernel.grid.ndim, kernel.alpha
    r = 2 * n / (2 * n - alpha)
    upper = np.inf if n <= 2 else 2 * n / (n - 2)
    if not 2 < p * r < upper:
        raise ValueError(f"p*r = {p * r:.6g} outside (2, {upper:.6g})")
    d = D_energy(kernel, u, p)
    lq = integrate(kernel.grid, np.abs(u) ** (p * r)) ** (1.0 / (p * r))
    return d, lq ** (2 * p)
