"""Equivariant minimisation of J_V on the Nehari manifold with certificates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import energy as en
from . import testfn as tf
from .descent import nehari_descent
from .groundstate import GroundState
from .symmetry import SymmetryGroup

log = logging.getLogger(__name__)

__all__ = ["SolveReport", "Certificate", "minimize", "certify", "EquivariantSolver", "initial_field",
           "stabilizer", "check_commute"]


@dataclass
class SolveReport:
    u: np.ndarray = field(repr=False)
    energy: float
    norm_sq: float
    D: float
    nehari_defect: float
    tangent_residual: float
    lagrange_multiplier: float
    equivariance_error: float
    grid_exact: bool
    min_u: float
    max_u: float
    ell: int
    c_inf: float
    threshold: float
    level: float
    margin: float
    initial_energy: float
    max_energy: float
    iterations: int
    converged: bool
    stabilized: bool = False
    trace: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k not in ("u", "trace")}


@dataclass
class Certificate:
    converged: bool
    equivariant: bool
    positive: bool
    sign_changing: bool
    below_threshold: bool
    small_residual: bool


def _report(pb: en.Problem, u, res, gs: GroundState | None, u0_energy: float,
            stabilized: bool = False) -> SolveReport:
    group = pb.group
    ell = group.ell() if group is not None else 1
    c_inf = gs.energy if gs is not None else np.nan
    br = en.J_V(pb, u)
    p = pb.p
    level = (p - 1) / (2 * p) * br.D
    conv = en.nonlocal_potential(pb, u)
    g = en.riesz_map(pb, en.residual(pb, u, conv))
    normal = (2.0 - 2.0 * p) * u + 2.0 * p * g
    mult = en.inner_V(pb, g, normal) / en.inner_V(pb, normal, normal)
    energies = [row[1] for row in res.trace]
    return SolveReport(
        u=u, energy=br.J, norm_sq=br.norm_sq, D=br.D, nehari_defect=abs(br.defect) / br.norm_sq,
        tangent_residual=res.tangent_residual, lagrange_multiplier=float(mult),
        equivariance_error=group.equivariance_error(pb.grid, u) if group is not None else 0.0,
        grid_exact=group.is_grid_exact if group is not None else True,
        min_u=float(np.min(u)), max_u=float(np.max(u)), ell=ell, c_inf=c_inf,
        threshold=ell * c_inf, level=level, margin=ell * c_inf - level,
        initial_energy=u0_energy, max_energy=max(energies) if energies else br.J,
        iterations=res.iterations, converged=res.converged, stabilized=stabilized, trace=res.trace,
    )


def stabilizer(pb: en.Problem, z) -> SymmetryGroup | None:
    """``Gamma`` enlarged by the coordinate reflections fixing ``z``.

    Returns ``None`` unless every added reflection commutes with ``Gamma``,
    leaves ``V`` and the mask invariant and is consistent with ``phi``.
    Critical points in the smaller subspace are still critical points
    (symmetric criticality); the extra symmetry removes the near-zero
    rotational modes of radially symmetric exterior problems.
    """
    group = pb.group
    if group is None or not group.is_grid_exact:
        return None
    n = pb.grid.ndim
    z = np.asarray(z, dtype=float)
    gens = []
    for j in np.flatnonzero(np.abs(z) < 1e-14):
        d = np.ones(n)
        d[j] = -1.0
        gens.append(np.diag(d))
    if not gens:
        return None
    if any(np.max(np.abs(g @ e.matrix - e.matrix @ g)) > 1e-12 for g in gens for e in group.elements):
        return None
    extra = SymmetryGroup.from_generators(gens, name="axis")
    for e in extra.elements:
        if pb.mask is not None and not np.array_equal(extra.act(pb.grid, e, pb.mask.astype(float)), pb.mask):
            return None
        if np.max(np.abs(extra.act(pb.grid, e, pb.V) - pb.V)) > 1e-12 * (1 + np.max(np.abs(pb.V))):
            return None
    try:
        return SymmetryGroup.from_generators(
            [e.matrix for e in group.elements] + gens, [e.sign for e in group.elements] + [1] * len(gens),
            name=f"{group.name} x axis")
    except ValueError:
        return None


def check_commute(pb: en.Problem, seed: int = 0) -> float:
    """``|| P_mask P_phi u - P_phi P_mask u ||_inf`` on a random field."""
    if pb.group is None or pb.mask is None:
        return 0.0
    u = np.random.default_rng(seed).standard_normal(pb.grid.shape)
    a = en.mask(pb, pb.group.equivariant_project(pb.grid, u))
    b = pb.group.equivariant_project(pb.grid, en.mask(pb, u))
    return float(np.max(np.abs(a - b)))


def minimize(pb: en.Problem, u0, gs: GroundState | None = None, tol: float = 1e-7,
             max_iter: int = 20_000, method: str = "cg", callback=None, stabilize_z=None) -> SolveReport:
    """Minimise ``J_V`` over the Nehari manifold of the equivariant subspace.

    ``stabilize_z`` adds the coordinate reflections fixing that point when
    :func:`stabilizer` allows it.  Hits the iteration cap with a report
    flagged non-converged.
    """
    group = pb.group
    project = None
    stab = stabilizer(pb, stabilize_z) if stabilize_z is not None else None
    if group is not None:
        err = check_commute(pb)
        if group.is_grid_exact and err > 1e-12:
            raise ValueError(f"mask and group projection do not commute ({err:.2e})")
        acting = stab if stab is not None else group
        project = lambda f: acting.equivariant_project(pb.grid, f)  # noqa: E731
    start = en.mask(pb, np.asarray(u0, dtype=float))
    if project is not None:
        start = en.mask(pb, project(start))
    if not np.any(start):
        raise ValueError("initial field vanishes after masking and projection")
    e0 = en.energy_on_nehari(pb, start)
    res = nehari_descent(pb, start, project=project, tol=tol, max_iter=max_iter, method=method,
                         callback=callback, raise_on_fail=False)
    u = res.u
    if group is None or not group.is_epimorphism:
        # positive solutions are reported with positive maximum
        if abs(np.min(u)) > abs(np.max(u)):
            u = -u
    return _report(pb, u, res, gs, e0, stab is not None)


def certify(report: SolveReport, gs: GroundState | None = None, tol: float = 1e-7) -> Certificate:
    scale = max(abs(report.min_u), abs(report.max_u))
    equi_tol = 1e-8 if report.grid_exact else 1e-3
    margin = report.margin if gs is None else report.ell * gs.energy - report.level
    return Certificate(
        converged=report.converged,
        equivariant=report.equivariance_error <= equi_tol,
        positive=report.min_u >= -1e-8 * scale,
        sign_changing=report.min_u < -1e-6 * scale and report.max_u > 1e-6 * scale,
        below_threshold=bool(margin > 0),
        small_residual=report.tangent_residual <= tol,
    )


def initial_field(pb: en.Problem, gs: GroundState, kind: str = "theta", z=None, R: float = 6.0,
                  lam: float | None = None) -> np.ndarray:
    """Seed from ``theta(z)`` or ``chi sigma_{Rz}``."""
    if z is None:
        z = np.eye(pb.grid.ndim)[0]
    if kind == "theta":
        if lam is None:
            lam = pb.potential.rate if pb.potential.variant == "exp_well" else 1.0
        return tf.theta(pb, gs, z, R, lam).field
    if kind == "chi_sigma":
        return tf.chi_sigma_ratio(pb, gs, z, R)["field"]
    raise ValueError(f"unknown initializer {kind!r}")


class EquivariantSolver(BaseEstimator):
    """Estimator wrapper around :func:`minimize`.

    ``fit(u0)`` seeds from ``u0`` when given, else from ``initializer``.
    ``stabilize`` restricts the descent to the stabilizer of ``z``.
    """

    def __init__(self, problem=None, ground_state=None, initializer="theta", z=None, R=6.0, lam=None,
                 tol=1e-7, max_iter=20_000, method="cg", stabilize=True):
        self.problem = problem
        self.ground_state = ground_state
        self.initializer = initializer
        self.z = z
        self.R = R
        self.lam = lam
        self.tol = tol
        self.max_iter = max_iter
        self.method = method
        self.stabilize = stabilize

    def fit(self, u0=None):
        if self.problem is None:
            raise ValueError("EquivariantSolver needs a problem")
        if u0 is None:
            if self.ground_state is None:
                raise ValueError("seeding from a test function needs the ground state")
            u0 = initial_field(self.problem, self.ground_state, self.initializer, self.z, self.R, self.lam)
        z = np.eye(self.problem.grid.ndim)[0] if self.z is None else np.asarray(self.z, dtype=float)
        self.report_ = minimize(self.problem, u0, self.ground_state, tol=self.tol,
                                max_iter=self.max_iter, method=self.method,
                                stabilize_z=z if self.stabilize else None)
        self.certificate_ = certify(self.report_, self.ground_state, self.tol)
        self.u_ = self.report_.u
        self.energy_ = self.report_.energy
        self.n_iter_ = self.report_.iterations
        return self
