"""Test functions built from the ground state: cutoffs, translates, the
symmetric sums theta and sigma, and their energy diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import energy as en
from . import grid as gf
from ._validation import check_field, check_positive, check_unit
from .groundstate import GroundState, I_interaction
from .grid import Grid, integrate
from .symmetry import SymmetryGroup, mu_bounds

__all__ = [
    "Cutoff", "Construction", "omega_S", "omega_S_gaps", "v_Rz", "default_parameters", "theta",
    "sigma", "chi_sigma_ratio", "escape_sequence", "lemma54", "obstacle_radius", "xi_pair",
]


def _blend(t):
    """Cubic Hermite step ``3t^2 - 2t^3`` and its first two derivatives on [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    inside = (t > 0) & (t < 1)
    return 3 * t * t - 2 * t**3, np.where(inside, 6 * t * (1 - t), 0.0), np.where(inside, 6 - 12 * t, 0.0)


@dataclass(frozen=True)
class Cutoff:
    """Radial cutoff about ``center``.

    ball:    1 on ``|y| <= (1 - eps) scale``, 0 on ``|y| >= scale``.
    annulus: 0 on ``|y| <= R0``, 1 on ``|y| >= 2 R0``.
    """

    kind: str
    eps: float = 0.5
    R0: float = 1.0
    scale: float = 1.0
    center: tuple | None = None

    def __post_init__(self):
        if self.kind == "ball":
            if not 0 < self.eps <= 1:
                raise ValueError("ball cutoff needs eps in (0, 1]")
            check_positive(self.scale, "scale")
        elif self.kind == "annulus":
            check_positive(self.R0, "R0")
        else:
            raise ValueError(f"unknown cutoff kind {self.kind!r}")

    def radial(self, r):
        """``(chi, chi', chi'')`` as functions of the radius."""
        r = np.asarray(r, dtype=float)
        if self.kind == "ball":
            w = self.eps * self.scale
            b, db, d2b = _blend((r - (1 - self.eps) * self.scale) / w)
            return 1.0 - b, -db / w, -d2b / w**2
        b, db, d2b = _blend((r - self.R0) / self.R0)
        return b, db / self.R0, d2b / self.R0**2

    def _r(self, grid: Grid):
        return grid.radius(center=self.center) if self.center is not None else grid.radius()

    def __call__(self, grid: Grid) -> np.ndarray:
        return self.radial(self._r(grid))[0]

    def laplacian(self, grid: Grid) -> np.ndarray:
        """``chi'' + (N-1)/r chi'`` evaluated from the exact profile."""
        r = self._r(grid)
        _, d1, d2 = self.radial(r)
        safe = np.where(r > 0, r, 1.0)
        return d2 + np.where(r > 0, (grid.ndim - 1) * d1 / safe, (grid.ndim - 1) * d2)


@dataclass
class Construction:
    kind: str
    params: dict
    field: np.ndarray = dc_field(repr=False)
    diagnostics: dict = dc_field(default_factory=dict)


def _check_grid(pb: en.Problem, gs: GroundState):
    if not pb.grid.same_as(gs.grid):
        raise ValueError("problem and ground state live on different grids")
    if pb.alpha != gs.alpha or pb.p != gs.p:
        raise ValueError("problem and ground state have different alpha/p")


def omega_S(gs: GroundState, S: float, eps: float = 0.5) -> np.ndarray:
    """``omega^S(x) = chi(x / S) omega(x)`` with the ball cutoff."""
    check_positive(S, "S")
    return Cutoff("ball", eps=eps, scale=S)(gs.grid) * gs.omega


def omega_S_gaps(gs: GroundState, S: float, eps: float = 0.5) -> tuple[float, float]:
    """``(| ||omega||^2 - ||omega^S||^2 |, |D(omega) - D(omega^S)|)``."""
    w = omega_S(gs, S, eps)
    pb = gs.problem
    return abs(gs.norm_sq - en.norm_V_sq(pb, w)), abs(gs.D - en.D(pb, w))


def v_Rz(gs: GroundState, R: float, z, rho: float, eps: float) -> np.ndarray:
    """``v_{R,z}(x) = omega^{rho R}(x - R z)``; support in the closed ball of radius ``rho R``."""
    c = R * np.asarray(z, dtype=float)
    chi = Cutoff("ball", eps=eps, scale=rho * R, center=tuple(c))(gs.grid)
    return chi * gf.shift(gs.grid, gs.omega, c)


def default_parameters(mu: float, lam: float, nu=None, eps=None) -> dict:
    """``nu``, ``eps`` and ``rho`` for the cutoff translates.

    ``nu`` defaults to the midpoint of ``(lam / mu, 1)`` and ``eps`` to half
    of its admissible bound ``(mu nu - lam) / (mu nu + lam)``.
    """
    if not 0 < lam < mu:
        raise ValueError(f"need 0 < lambda < mu, got lambda={lam}, mu={mu}")
    if nu is None:
        nu = 0.5 * (lam / mu + 1.0)
    if not lam / mu < nu < 1:
        raise ValueError(f"nu must lie in ({lam / mu:.6g}, 1)")
    eps_max = (mu * nu - lam) / (mu * nu + lam)
    if eps is None:
        eps = 0.5 * eps_max
    if not 0 < eps < eps_max:
        raise ValueError(f"eps must lie in (0, {eps_max:.6g})")
    return {"nu": nu, "eps": eps, "rho": (mu * nu + lam) / (4 * nu), "mu": mu, "lam": lam}


def _signed_orbit(group: SymmetryGroup, z):
    try:
        return group.signed_orbit(z)
    except ValueError as exc:
        raise ValueError(f"theta undefined: {exc}") from None


def theta(pb: en.Problem, gs: GroundState, z, R: float, lam: float, nu=None, eps=None,
          mu=None) -> Construction:
    """``theta(z) = sum over g z in Gamma z of phi(g) v_{R, g z}``.

    ``mu`` is ``mu_Gamma(Z)``; the default takes ``Z = Gamma z``.
    """
    _check_grid(pb, gs)
    group = pb.group
    if group is None:
        raise ValueError("theta needs a symmetry group on the problem")
    z = check_unit(pb.grid.ndim, z)
    pts, signs = _signed_orbit(group, z)
    if mu is None:
        mu = group.mu(z)
    prm = default_parameters(mu, lam, nu, eps)
    rho = prm["rho"]
    L = pb.grid.half_width
    if R * (1 + rho) > 0.8 * L + 1e-12:
        raise ValueError(f"R(1+rho) = {R * (1 + rho):.6g} exceeds 0.8 L = {0.8 * L:.6g}")
    if not R * mu > 2 * rho * R:
        raise ValueError("translates would overlap: R mu <= 2 rho R")
    parts = [v_Rz(gs, R, q, rho, prm["eps"]) for q in pts]
    for i in range(len(parts)):
        for j in range(i):
            if np.any(parts[i] * parts[j] != 0):
                raise ValueError("supports of the translates overlap")
    th = sum(s * v for s, v in zip(signs, parts))
    masked = en.mask(pb, th)
    loss = float(np.max(np.abs(masked - th)))
    v = en.mask(pb, parts[0])
    n_v, d_v = en.norm_V_sq(pb, v), en.D(pb, v)
    n_t, d_t = en.norm_V_sq(pb, masked), en.D(pb, masked)
    ell = len(pts)
    e_theta = en.energy_on_nehari(pb, masked, n_t, d_t)
    diag = {
        "ell": ell, "orbit_size": ell, "mask_loss": loss,
        "norm_sq": n_t, "norm_sq_single": n_v, "norm_split_error": abs(n_t - ell * n_v) / n_t,
        "norm_split_single_error": max(abs(en.norm_V_sq(pb, en.mask(pb, q)) - n_v) for q in parts) / n_v,
        "D": d_t, "D_single": d_v, "D_excess": d_t - ell * d_v,
        "energy": e_theta, "energy_single": en.energy_on_nehari(pb, v, n_v, d_v),
        "threshold": ell * gs.energy, "margin": ell * gs.energy - e_theta,
        "support_radius": rho * R, "equivariance_error": group.equivariance_error(pb.grid, masked),
    }
    prm.update({"R": R, "z": z.tolist()})
    return Construction("theta", prm, masked, diag)


def xi_pair(group: SymmetryGroup, z) -> tuple[np.ndarray, float]:
    """Closest pair ``g z != h z`` with ``g, h`` in ``G = ker phi`` (exhaustive search)."""
    pts = group.kernel().orbit(z)
    if len(pts) == 1:
        return np.zeros_like(pts[0]), 0.0
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    d[np.eye(len(pts), dtype=bool)] = np.inf
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return pts[i] - pts[j], float(d[i, j])


def sigma(pb: en.Problem, gs: GroundState, z, R: float) -> Construction:
    """``sigma_{Rz} = sum over g z in Gamma z of phi(g) omega_{R g z}`` with eps, eps-hat."""
    _check_grid(pb, gs)
    group = pb.group
    if group is None:
        raise ValueError("sigma needs a symmetry group on the problem")
    z = check_unit(pb.grid.ndim, z)
    L = pb.grid.half_width
    if R > 0.6 * L + 1e-12:
        raise ValueError(f"R = {R} exceeds 0.6 L = {0.6 * L}")
    pts, signs = _signed_orbit(group, z)
    translates = [gf.shift(gs.grid, gs.omega, R * q) for q in pts]
    s = sum(sg * t for sg, t in zip(signs, translates))
    eps_same = eps_hat = 0.0
    for i in range(len(pts)):
        for j in range(len(pts)):
            if i == j:
                continue
            val = I_interaction(gs, R * (pts[i] - pts[j]), strict=False)
            if signs[i] == signs[j]:
                eps_same += val
            else:
                eps_hat += val
    if not group.is_epimorphism:
        eps_hat = 0.0
    diag = {
        "ell": len(pts), "eps": eps_same, "eps_hat": eps_hat,
        "eps_ratio": eps_hat / eps_same if eps_same > 0 else np.inf,
        "equivariance_error": group.equivariance_error(pb.grid, s) if group.is_grid_exact else np.nan,
    }
    return Construction("sigma", {"R": R, "z": z.tolist()}, s, diag)


def obstacle_radius(pb: en.Problem) -> float | None:
    """Radius of the smallest origin ball holding the masked-out nodes."""
    if pb.mask is None:
        return None
    return float(np.max(pb.grid.radius()[~pb.mask]))


def chi_sigma_ratio(pb: en.Problem, gs: GroundState, z, R: float, R0=None) -> dict:
    """``||chi sigma||_V^2 / D(chi sigma)^{1/p}`` against ``(ell ||omega||^2)^{(p-1)/p}``.

    ``chi`` is the annulus cutoff with inner radius ``R0`` (default: the
    obstacle radius; ``chi = 1`` without obstacle).
    """
    con = sigma(pb, gs, z, R)
    if R0 is None:
        R0 = obstacle_radius(pb)
    chi = 1.0 if R0 is None else Cutoff("annulus", R0=R0)(pb.grid)
    u = en.mask(pb, chi * con.field)
    n, d = en.norm_V_sq(pb, u), en.D(pb, u)
    if not d > 0:
        raise ValueError("D(chi sigma) vanished")
    p = pb.p
    ell = con.diagnostics["ell"]
    ratio = n / d ** (1.0 / p)
    bound = (ell * gs.norm_sq) ** ((p - 1) / p)
    energy = (p - 1) / (2 * p) * ratio ** (p / (p - 1))
    return {
        "R": R, "ratio": ratio, "bound": bound, "margin": bound - ratio, "energy": energy,
        "threshold": ell * gs.energy, "energy_margin": ell * gs.energy - energy, "ell": ell,
        "eps": con.diagnostics["eps"], "eps_hat": con.diagnostics["eps_hat"], "field": u,
    }


def escape_sequence(pb: en.Problem, gs: GroundState, x_n, R_obstacle=None) -> Construction:
    """``u_n(x) = chi((x - x_n) / r_n) omega(x - x_n)`` with ``r_n = (|x_n| - R) / 2``.

    ``chi`` is 1 on the unit ball and 0 outside radius 2.  Without an
    obstacle and ``x_n = 0`` the cutoff is inactive and ``u_n = omega``.
    """
    _check_grid(pb, gs)
    x_n = np.asarray(x_n, dtype=float)
    if R_obstacle is None:
        R_obstacle = obstacle_radius(pb)
    L = pb.grid.half_width
    if R_obstacle is None and not np.any(x_n):
        u = gs.omega.copy()
        r_n = np.inf
    else:
        R_ob = 0.0 if R_obstacle is None else R_obstacle
        dist = float(np.linalg.norm(x_n))
        if dist <= R_ob:
            raise ValueError(f"|x_n| = {dist} must exceed the obstacle radius {R_ob}")
        r_n = 0.5 * (dist - R_ob)
        if dist + r_n > 0.8 * L + 1e-12:
            raise ValueError(f"|x_n| + r_n = {dist + r_n:.6g} exceeds 0.8 L")
        chi = Cutoff("ball", eps=0.5, scale=2 * r_n, center=tuple(x_n))(pb.grid)
        u = chi * gf.shift(pb.grid, gs.omega, x_n)
    u = en.mask(pb, u)
    diag = {"r_n": r_n, "energy": en.energy_on_nehari(pb, u), "c_inf": gs.energy}
    return Construction("escape", {"x_n": x_n.tolist()}, u, diag)


def lemma54(pb: en.Problem, u, cutoff: Cutoff) -> dict:
    """Both cutoff inequalities for ``u``; slacks are relative to the larger side."""
    g = pb.grid
    u = check_field(g, u)
    chi = cutoff(g)
    lhs1 = en.norm_V_sq(pb, chi * u)
    rhs1 = en.norm_V_sq(pb, u) - integrate(g, chi * cutoff.laplacian(g) * u * u)
    up = np.abs(u) ** pb.p
    conv = pb.kernel.convolve(up)
    lhs2 = en.D(pb, chi * u)
    rhs2 = integrate(g, conv * up) - 2.0 * integrate(g, (1.0 - chi**pb.p) * up * conv)
    return {
        "norm_lhs": lhs1, "norm_rhs": rhs1, "norm_slack": (rhs1 - lhs1) / max(abs(lhs1), abs(rhs1)),
        "D_lhs": lhs2, "D_rhs": rhs2, "D_slack": (lhs2 - rhs2) / max(abs(lhs2), abs(rhs2)),
    }


def cross_interaction(gs: GroundState, group: SymmetryGroup, z, R: float) -> float:
    """Largest ``int (K * (|sum_G w_{R zeta}|^p + |sum_G w_{R gamma zeta}|^p)) w_{Rgz}^{p-1} w_{Rhz}``
    over pairs with ``phi(g) != phi(h)``."""
    if not group.is_epimorphism:
        raise ValueError("needs phi onto Z/2")
    z = np.asarray(z, dtype=float)
    G = group.kernel()
    gamma = group.odd_elements()[0].matrix
    pg = gs.p
    sh = lambda c: gf.shift(gs.grid, gs.omega, c)  # noqa: E731
    a = sum(sh(R * q) for q in G.orbit(z))
    b = sum(sh(R * gamma @ q) for q in G.orbit(z))
    conv = gs.problem.kernel.convolve(np.abs(a) ** pg + np.abs(b) ** pg)
    pts, signs = group.signed_orbit(z)
    best = 0.0
    for i in range(len(pts)):
        for j in range(len(pts)):
            if signs[i] != signs[j]:
                f = sh(R * pts[i]) ** (pg - 1) * sh(R * pts[j])
                best = max(best, integrate(gs.grid, conv * f))
    return best


def potential_overlap(pb: en.Problem, con: Construction) -> float:
    """``int V^+ sigma^2``."""
    return integrate(pb.grid, np.maximum(pb.V, 0.0) * con.field**2)


def compact_overlap(pb: en.Problem, con: Construction, f, q: float) -> float:
    """``int f |sigma|^q`` for a compactly supported ``f``."""
    return integrate(pb.grid, check_field(pb.grid, f, "f") * np.abs(con.field) ** q)


def gamma_bounds(group: SymmetryGroup, Z) -> tuple[float, float]:
    """``(mu_Gamma(Z), mu^Gamma(Z))``."""
    return mu_bounds(group, Z)
