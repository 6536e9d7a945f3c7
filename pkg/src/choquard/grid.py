"""Uniform periodic grids on [-L, L)^N, quadrature and spectral operators.

Fields are plain ``numpy`` arrays of shape ``grid.shape`` (row-major, last
axis fastest).  Masks are boolean arrays of the same shape, ``True`` inside
the domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class Grid:
    """Node-centred grid ``x_j = -L + j h``, ``h = 2L/M``, on every axis."""

    ndim: int
    n_points: int
    half_width: float
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.ndim < 1:
            raise ValueError(f"ndim must be positive, got {self.ndim}")
        m = self.n_points
        if m < 8 or m & (m - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {m}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    h = spacing

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_points,) * self.ndim

    @property
    def size(self) -> int:
        return self.n_points**self.ndim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.ndim

    @property
    def origin(self) -> np.ndarray:
        """Coordinates of the first node (the box corner)."""
        return np.full(self.ndim, -self.half_width)

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n_points)

    @cached_property
    def center_index(self) -> tuple[int, ...]:
        return (self.n_points // 2,) * self.ndim

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for k in range(self.ndim):
            s = [1] * self.ndim
            s[k] = self.n_points
            out.append(self.axis.reshape(s))
        return out

    def radius(self, center=None) -> np.ndarray:
        if "radius" not in self._cache or center is not None:
            xs = self.coords()
            if center is not None:
                xs = [x - c for x, c in zip(xs, center)]
            r = np.sqrt(sum(x * x for x in xs))
            r = np.broadcast_to(r, self.shape).copy()
            if center is not None:
                return r
            self._cache["radius"] = r
        return self._cache["radius"]

    def points(self) -> np.ndarray:
        """All node coordinates, shape (M**N, N)."""
        return np.stack(np.meshgrid(*([self.axis] * self.ndim), indexing="ij"), -1).reshape(-1, self.ndim)

    # spectral symbols, rfft layout on the last axis
    @cached_property
    def _xi_sq(self) -> np.ndarray:
        m, h = self.n_points, self.spacing
        full = (2 * np.pi * sfft.fftfreq(m, d=h)) ** 2
        half = (2 * np.pi * sfft.rfftfreq(m, d=h)) ** 2
        ks = []
        for k in range(self.ndim):
            s = [1] * self.ndim
            if k == self.ndim - 1:
                s[k] = half.size
                ks.append(half.reshape(s))
            else:
                s[k] = m
                ks.append(full.reshape(s))
        return sum(ks)

    @cached_property
    def _rfft_weight(self) -> np.ndarray:
        # multiplicity of each half-spectrum mode in the full spectrum
        m = self.n_points
        w = np.full(m // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        s = [1] * self.ndim
        s[-1] = w.size
        return w.reshape(s)

    def is_lattice_vector(self, v, tol: float = 1e-9) -> bool:
        q = np.asarray(v, dtype=float) / self.spacing
        return bool(np.all(np.abs(q - np.round(q)) <= tol))

    def same_as(self, other: "Grid") -> bool:
        return (self.ndim, self.n_points, self.half_width) == (other.ndim, other.n_points, other.half_width)


def integrate(grid: Grid, f) -> float:
    """Midpoint rule ``h^N * sum(f)`` on the periodic box."""
    return float(grid.cell_volume * np.sum(f))


def rfft(grid: Grid, u):
    return sfft.rfftn(u, s=grid.shape)


def irfft(grid: Grid, uh):
    return sfft.irfftn(uh, s=grid.shape)


def gradient_sq_integral(grid: Grid, u) -> float:
    """``int |grad u|^2`` by Parseval on the discrete Fourier transform."""
    uh = rfft(grid, u)
    s = np.sum(grid._rfft_weight * grid._xi_sq * (uh.real**2 + uh.imag**2))
    return float(grid.cell_volume * s / grid.size)


def neg_laplacian(grid: Grid, u) -> np.ndarray:
    return irfft(grid, grid._xi_sq * rfft(grid, u))


def helmholtz_inverse(grid: Grid, r) -> np.ndarray:
    """Apply ``(-Laplace + 1)^{-1}`` spectrally."""
    return irfft(grid, rfft(grid, r) / (grid._xi_sq + 1.0))


def helmholtz(grid: Grid, u) -> np.ndarray:
    return irfft(grid, (grid._xi_sq + 1.0) * rfft(grid, u))


def apply_mask(u, mask) -> np.ndarray:
    if mask is None:
        return np.asarray(u)
    return np.where(mask, u, 0.0)


def ball_complement_mask(grid: Grid, radius: float) -> np.ndarray:
    """Exterior of the closed ball of the given radius."""
    if radius >= grid.half_width:
        raise ValueError("obstacle must lie strictly inside the box")
    return grid.radius() > radius


def box_complement_mask(grid: Grid, half_side: float) -> np.ndarray:
    """Exterior of the closed cube ``[-a, a]^N``."""
    if half_side >= grid.half_width:
        raise ValueError("obstacle must lie strictly inside the box")
    xs = grid.coords()
    inside = np.ones(grid.shape, dtype=bool)
    for x in xs:
        inside &= np.abs(x) <= half_side
    return ~inside


def interpolate(grid: Grid, u, x) -> float | np.ndarray:
    """Multilinear interpolation at one point ``x`` or at rows of ``x``.

    Points outside the box are wrapped periodically.
    """
    u = np.asarray(u)
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    m, h = grid.n_points, grid.spacing
    t = (pts + grid.half_width) / h
    base = np.floor(t)
    frac = t - base
    base = base.astype(np.int64)
    out = np.zeros(len(pts))
    for corner in product((0, 1), repeat=grid.ndim):
        c = np.asarray(corner)
        w = np.prod(np.where(c, frac, 1.0 - frac), axis=1)
        idx = tuple(((base[:, k] + c[k]) % m) for k in range(grid.ndim))
        out += w * u[idx]
    if np.ndim(x) == 1:
        return float(out[0])
    return out


def shift(grid: Grid, u, zeta) -> np.ndarray:
    """Translate: returns ``u(x - zeta)`` with periodic wrap.

    Whole-cell vectors use an exact roll; other vectors use the Fourier
    shift, which preserves every quadratic form of the spectral calculus.
    """
    zeta = np.asarray(zeta, dtype=float)
    q = zeta / grid.spacing
    if np.all(np.abs(q - np.round(q)) <= 1e-9):
        return np.roll(u, tuple(int(v) for v in np.round(q)), axis=tuple(range(grid.ndim)))
    m, h = grid.n_points, grid.spacing
    uh = rfft(grid, u)
    phase = 0.0
    for k in range(grid.ndim):
        freqs = sfft.rfftfreq(m, d=h) if k == grid.ndim - 1 else sfft.fftfreq(m, d=h)
        s = [1] * grid.ndim
        s[k] = freqs.size
        phase = phase + (2 * np.pi * freqs * zeta[k]).reshape(s)
    return irfft(grid, uh * np.exp(-1j * phase))


def _resample_axis(uh, ax, m0, m1):
    # positive and negative frequencies are copied; the Nyquist bin is split
    # between +-m0/2 going up and folded back going down
    def sl(a, b):
        return (slice(None),) * ax + (slice(a, b),)

    shape = list(uh.shape)
    shape[ax] = m1
    out = np.zeros(shape, dtype=complex)
    if m1 >= m0:
        h = m0 // 2
        out[sl(0, h)] = uh[sl(0, h)]
        out[sl(m1 - h + 1, m1)] = uh[sl(h + 1, m0)]
        out[sl(h, h + 1)] = 0.5 * uh[sl(h, h + 1)]
        out[sl(m1 - h, m1 - h + 1)] = 0.5 * uh[sl(h, h + 1)]
    else:
        h = m1 // 2
        out[sl(0, h)] = uh[sl(0, h)]
        out[sl(h + 1, m1)] = uh[sl(m0 - h + 1, m0)]
        out[sl(h, h + 1)] = uh[sl(h, h + 1)] + uh[sl(m0 - h, m0 - h + 1)]
    return out


def spectral_resample(u, src: Grid, dst: Grid) -> np.ndarray:
    """Fourier interpolation between grids with the same box and dimension.

    Downsampling after upsampling returns the input exactly.
    """
    if src.ndim != dst.ndim or src.half_width != dst.half_width:
        raise ValueError("resampling needs the same box")
    m0, m1 = src.n_points, dst.n_points
    uh = sfft.fftn(u)
    for ax in range(src.ndim):
        uh = _resample_axis(uh, ax, m0, m1)
    return sfft.ifftn(uh).real * (m1 / m0) ** src.ndim
