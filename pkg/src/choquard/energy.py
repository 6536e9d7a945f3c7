"""The functional J_V, its gradient, the Nehari manifold and the projection pi.

All functions take a :class:`Problem` first and grid fields as arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid as gf
from .grid import Grid, integrate
from .potential import Potential, check_V0
from .riesz import RieszKernel, get_kernel
from .symmetry import SymmetryGroup

NEHARI_TOL = 1e-8


class Problem:
    """Data of ``-Lap u + (1 + V) u = (|x|^-alpha * |u|^p) |u|^{p-2} u`` in Omega.

    ``mask`` is ``None`` for the whole space; ``group`` is ``None`` for no
    symmetry constraint.
    """

    def __init__(self, grid: Grid, alpha: float, p: float, potential: Potential | None = None,
                 mask=None, group: SymmetryGroup | None = None, kernel: RieszKernel | None = None):
        n = grid.ndim
        if not 0 < alpha < n:
            raise ValueError(f"alpha must lie in (0, {n}), got {alpha}")
        upper = np.inf if n <= 2 else (2 * n - alpha) / (n - 2)
        if not 2 <= p < upper:
            raise ValueError(f"p must lie in [2, {upper:.6g}), got {p}")
        self.grid = grid
        self.alpha = float(alpha)
        self.p = float(p)
        self.potential = potential if potential is not None else Potential.zero()
        self.V = self.potential.evaluate(grid)
        if not check_V0(self.V):
            raise ValueError("(V0) violated: 1 + V must be positive on the grid")
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != grid.shape:
                raise ValueError("mask shape does not match the grid")
            if mask.all():
                mask = None
        self.mask = mask
        self.group = group
        if group is not None:
            if group.ndim != n:
                raise ValueError("group dimension differs from the grid")
            self._check_invariance()
        self.kernel = kernel if kernel is not None else get_kernel(grid, alpha)
        if not self.kernel.grid.same_as(grid) or self.kernel.alpha != self.alpha:
            raise ValueError("kernel does not match grid/alpha")
        self.trivial_metric = self.mask is None and not np.any(self.V)

    def _check_invariance(self):
        for e in self.group.elements:
            if not e.is_grid_exact:
                continue
            idx_err = np.max(np.abs(self.group.act(self.grid, type(e)(e.matrix, 1), self.V) - self.V))
            if idx_err > 1e-10 * max(1.0, np.max(np.abs(self.V))):
                raise ValueError("potential is not invariant under the group")
            if self.mask is not None:
                m = self.group.act(self.grid, type(e)(e.matrix, 1), self.mask.astype(float))
                if np.any((m > 0.5) != self.mask):
                    raise ValueError("domain mask is not invariant under the group")

    def with_(self, **kw) -> "Problem":
        args = dict(grid=self.grid, alpha=self.alpha, p=self.p, potential=self.potential,
                    mask=self.mask, group=self.group)
        args.update(kw)
        if args["grid"] is self.grid and args["alpha"] == self.alpha:
            args["kernel"] = self.kernel
        return Problem(**args)

    def __repr__(self):
        return (f"Problem(N={self.grid.ndim}, M={self.grid.n_points}, L={self.grid.half_width}, "
                f"alpha={self.alpha}, p={self.p}, V={self.potential.describe()}, "
                f"obstacle={'yes' if self.mask is not None else 'no'}, group={self.group})")


@dataclass
class EnergyBreakdown:
    grad_sq: float
    potential_sq: float
    D: float
    p: float

    @property
    def norm_sq(self) -> float:
        return self.grad_sq + self.potential_sq

    @property
    def J(self) -> float:
        return 0.5 * self.norm_sq - self.D / (2 * self.p)

    @property
    def defect(self) -> float:
        return self.norm_sq - self.D


def mask(pb: Problem, u) -> np.ndarray:
    return gf.apply_mask(u, pb.mask)


def inner_V(pb: Problem, u, v) -> float:
    g = pb.grid
    return integrate(g, v * gf.neg_laplacian(g, u)) + integrate(g, (1.0 + pb.V) * u * v)


def norm_V_sq(pb: Problem, u) -> float:
    g = pb.grid
    return gf.gradient_sq_integral(g, u) + integrate(g, (1.0 + pb.V) * u * u)


def nonlocal_potential(pb: Problem, u) -> np.ndarray:
    """``|x|^-alpha * |u|^p`` on the grid."""
    return pb.kernel.convolve(np.abs(u) ** pb.p)


def D(pb: Problem, u, conv=None) -> float:
    if conv is None:
        conv = nonlocal_potential(pb, u)
    return integrate(pb.grid, conv * np.abs(u) ** pb.p)


def nonlinearity(pb: Problem, u, conv=None) -> np.ndarray:
    """``(|x|^-alpha * |u|^p) |u|^{p-2} u``, masked to Omega."""
    if conv is None:
        conv = nonlocal_potential(pb, u)
    p = pb.p
    f = conv * u if p == 2 else conv * np.abs(u) ** (p - 2) * u
    return mask(pb, f)


def J_V(pb: Problem, u, conv=None) -> EnergyBreakdown:
    g = pb.grid
    return EnergyBreakdown(
        grad_sq=gf.gradient_sq_integral(g, u),
        potential_sq=integrate(g, (1.0 + pb.V) * u * u),
        D=D(pb, u, conv),
        p=pb.p,
    )


def residual(pb: Problem, u, conv=None) -> np.ndarray:
    """Strong form ``(-Lap + 1 + V) u - N(u)`` masked to Omega (the L2 gradient of J_V)."""
    g = pb.grid
    return mask(pb, gf.helmholtz(g, u) + pb.V * u) - nonlinearity(pb, u, conv)


def apply_operator(pb: Problem, u) -> np.ndarray:
    """``A_V u = mask((-Lap + 1 + V) u)``, the operator of the V scalar product."""
    return mask(pb, gf.helmholtz(pb.grid, u) + pb.V * u)


def precondition(pb: Problem, r) -> np.ndarray:
    """``(-Lap + 1)^{-1} r``, masked to Omega."""
    return mask(pb, gf.helmholtz_inverse(pb.grid, r))


def riesz_map(pb: Problem, r, x0=None, rtol: float = 1e-12, maxiter: int = 500) -> np.ndarray:
    """Solve ``A_V w = r`` on fields vanishing outside Omega.

    ``w`` is the V-gradient representing the functional ``v -> int r v``.
    Exact spectral inverse without mask and potential; otherwise
    preconditioned CG with :func:`precondition`.
    """
    if pb.trivial_metric:
        return gf.helmholtz_inverse(pb.grid, r)
    b = mask(pb, r)
    x = np.zeros_like(b) if x0 is None else mask(pb, x0)
    res = b - apply_operator(pb, x)
    z = precondition(pb, res)
    rz = float(np.vdot(res, z))
    bnorm = float(np.vdot(b, precondition(pb, b)))
    if bnorm == 0.0:
        return np.zeros_like(b)
    d = z.copy()
    for _ in range(maxiter):
        if rz <= rtol**2 * bnorm:
            break
        ad = apply_operator(pb, d)
        step = rz / float(np.vdot(d, ad))
        x += step * d
        res -= step * ad
        z = precondition(pb, res)
        rz_new = float(np.vdot(res, z))
        d = z + (rz_new / rz) * d
        rz = rz_new
    return x


def nehari_factor(pb: Problem, u, norm_sq=None, d=None) -> float:
    if norm_sq is None:
        norm_sq = norm_V_sq(pb, u)
    if d is None:
        d = D(pb, u)
    if not d > 0 or not norm_sq > 0:
        raise ValueError("Nehari projection needs u != 0 with D(u) > 0")
    return (norm_sq / d) ** (1.0 / (2.0 * (pb.p - 1.0)))


def nehari_project(pb: Problem, u) -> np.ndarray:
    """``pi(u) = (||u||_V^2 / D(u))^{1/(2(p-1))} u``."""
    return nehari_factor(pb, u) * np.asarray(u)


def energy_on_nehari(pb: Problem, u, norm_sq=None, d=None) -> float:
    """Closed form of ``J_V(pi(u))``."""
    if norm_sq is None:
        norm_sq = norm_V_sq(pb, u)
    if d is None:
        d = D(pb, u)
    if not d > 0 or not norm_sq > 0:
        raise ValueError("energy on the Nehari manifold needs u != 0 with D(u) > 0")
    p = pb.p
    return (p - 1) / (2 * p) * (norm_sq / d ** (1.0 / p)) ** (p / (p - 1))


def constraint_gradient(pb: Problem, u, conv=None, w=None) -> np.ndarray:
    """V-gradient of ``Phi(u) = ||u||_V^2 - D(u)``: ``2u - 2p A_V^{-1} N(u)``."""
    if w is None:
        w = riesz_map(pb, nonlinearity(pb, u, conv))
    return 2.0 * np.asarray(u) - 2.0 * pb.p * w


def tangent_project(pb: Problem, u, g, conv=None, normal=None) -> np.ndarray:
    """Remove from ``g`` its V-component along ``grad Phi(u)``."""
    norm_sq = norm_V_sq(pb, u)
    if conv is None:
        conv = nonlocal_potential(pb, u)
    d = D(pb, u, conv)
    if abs(norm_sq - d) > NEHARI_TOL * norm_sq:
        raise ValueError("tangent projection needs u on the Nehari manifold")
    n = constraint_gradient(pb, u, conv) if normal is None else normal
    nn = inner_V(pb, n, n)
    if not nn > 1e-300:
        raise RuntimeError("degenerate constraint gradient on the Nehari manifold")
    return np.asarray(g) - (inner_V(pb, g, n) / nn) * n
