"""Ground state of the limit problem ``-Lap u + u = (|x|^-alpha * |u|^p)|u|^{p-2} u``.

Also the decay-law fit, the phase integral Q and the interaction integrals
I(zeta), A(zeta) built from the ground state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import energy as en
from . import grid as gf
from ._validation import check_field, check_point, check_range
from .descent import ConvergenceError, nehari_descent
from .grid import Grid, integrate
from .symmetry import SymmetryGroup

log = logging.getLogger(__name__)

__all__ = [
    "GroundState", "GroundStateSolver", "solve_limit", "Q_integral", "Q_values", "DecayLawFit",
    "fit_decay", "I_interaction", "A_perturbation", "ConvergenceError",
]


def axis_reflections(ndim: int) -> SymmetryGroup:
    gens = [np.diag([-1.0 if j == k else 1.0 for j in range(ndim)]) for k in range(ndim)]
    return SymmetryGroup.from_generators(gens, name="axis reflections")


@dataclass
class GroundState:
    """Positive ground state ``omega`` on ``grid`` with its energy ``c_inf``."""

    grid: Grid
    alpha: float
    p: float
    omega: np.ndarray = field(repr=False)
    energy: float
    norm_sq: float
    D: float
    tangent_residual: float
    iterations: int = 0
    trace: list = field(default_factory=list, repr=False)

    @property
    def c_inf(self) -> float:
        return self.energy

    @cached_property
    def problem(self) -> en.Problem:
        return en.Problem(self.grid, self.alpha, self.p)

    @cached_property
    def potential_field(self) -> np.ndarray:
        """``|x|^-alpha * omega^p``."""
        return en.nonlocal_potential(self.problem, self.omega)

    @cached_property
    def residual_l2(self) -> float:
        """``||residual(omega)||_2 / ||omega||_2``."""
        r = en.residual(self.problem, self.omega, self.potential_field)
        return float(np.sqrt(np.sum(r * r) / np.sum(self.omega**2)))

    def nehari_defect(self) -> float:
        return abs(self.norm_sq - self.D) / self.norm_sq

    @cached_property
    def _shells(self):
        g = self.grid
        k = np.indices(g.shape) - g.n_points // 2
        k2 = np.sum(k * k, axis=0).ravel()
        r_max2 = (g.n_points // 2) ** 2  # complete shells only
        keep = k2 < r_max2
        k2 = k2[keep]
        vals = self.omega.ravel()[keep]
        uniq, inv = np.unique(k2, return_inverse=True)
        cnt = np.bincount(inv)
        mean = np.bincount(inv, weights=vals) / cnt
        hi = np.full(uniq.size, -np.inf)
        lo = np.full(uniq.size, np.inf)
        np.maximum.at(hi, inv, vals)
        np.minimum.at(lo, inv, vals)
        return np.sqrt(uniq) * g.spacing, mean, hi - lo

    def profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Shell means ``(r, omega(r))`` over nodes with equal ``|k|^2``."""
        r, mean, _ = self._shells
        return r, mean

    def axis_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Values along the positive first axis, ``r = 0, h, ..., L - h``."""
        g = self.grid
        c = g.n_points // 2
        idx = (slice(c, None),) + (c,) * (g.ndim - 1)
        return g.spacing * np.arange(g.n_points - c), self.omega[idx].copy()

    def radial_spread(self) -> float:
        """Largest spread of omega over a shell, relative to ``max omega``."""
        _, _, spread = self._shells
        return float(np.max(spread) / np.max(self.omega))

    def certificates(self) -> dict:
        mx = float(np.max(self.omega))
        return {
            "c_inf": self.energy,
            "nehari_defect": self.nehari_defect(),
            "energy_identity": abs(self.energy - (self.p - 1) / (2 * self.p) * self.norm_sq) / self.energy,
            "tangent_residual": self.tangent_residual,
            "residual_l2": self.residual_l2,
            "min_over_max": float(np.min(self.omega)) / mx,
            "radial_spread": self.radial_spread(),
            "centered": bool(np.unravel_index(np.argmax(self.omega), self.grid.shape) == self.grid.center_index),
        }


def _seed_field(grid: Grid, seed, width: float) -> np.ndarray:
    if seed is None:
        return np.exp(-grid.radius() ** 2 / (2 * width**2))
    if isinstance(seed, (int, np.integer)):
        rng = np.random.default_rng(int(seed))
        w = width * rng.uniform(0.7, 1.4)
        c = rng.uniform(-0.5, 0.5, grid.ndim)
        base = np.exp(-grid.radius(center=c) ** 2 / (2 * w**2))
        return base * (1.0 + 0.1 * rng.uniform(size=grid.shape))
    return np.abs(check_field(grid, seed, "seed"))


def _recenter(grid: Grid, u: np.ndarray) -> np.ndarray:
    peak = np.unravel_index(np.argmax(u), grid.shape)
    return np.roll(u, tuple(c - q for c, q in zip(grid.center_index, peak)), axis=tuple(range(grid.ndim)))


class GroundStateSolver(BaseEstimator):
    """Nehari descent for the limit problem.

    ``symmetrize`` restricts iterates to fields even in every coordinate,
    which contains the radial ground state and removes the translation
    modes.  ``coarse_start`` first solves on the half-resolution grid and
    interpolates spectrally.
    """

    def __init__(self, ndim=3, alpha=1.0, p=2.0, half_width=16.0, n_points=128, tol=1e-8,
                 max_iter=10_000, seed_width=2.0, symmetrize=True, coarse_start=True, method="cg"):
        self.ndim = ndim
        self.alpha = alpha
        self.p = p
        self.half_width = half_width
        self.n_points = n_points
        self.tol = tol
        self.max_iter = max_iter
        self.seed_width = seed_width
        self.symmetrize = symmetrize
        self.coarse_start = coarse_start
        self.method = method

    @property
    def grid(self) -> Grid:
        return Grid(self.ndim, self.n_points, self.half_width)

    def _solve(self, grid, u0, tol):
        pb = en.Problem(grid, self.alpha, self.p)
        project = None
        if self.symmetrize:
            refl = axis_reflections(grid.ndim)
            project = lambda f: refl.equivariant_project(grid, f)  # noqa: E731
        return pb, nehari_descent(pb, u0, project=project, tol=tol, max_iter=self.max_iter,
                                  method=self.method)

    def fit(self, seed=None):
        """``seed``: None (centred Gaussian), an int (randomised positive seed) or a field."""
        grid = self.grid
        if self.coarse_start and grid.n_points >= 64 and not isinstance(seed, np.ndarray):
            coarse = Grid(grid.ndim, grid.n_points // 2, grid.half_width)
            _, res0 = self._solve(coarse, _seed_field(coarse, seed, self.seed_width), max(self.tol, 1e-6))
            u0 = gf.spectral_resample(res0.u, coarse, grid)
        else:
            u0 = _seed_field(grid, seed, self.seed_width)
        pb, res = self._solve(grid, u0, self.tol)
        u = res.u if np.sum(res.u) > 0 else -res.u
        u = _recenter(grid, u)
        self.result_ = GroundState(
            grid=grid, alpha=float(self.alpha), p=float(self.p), omega=u,
            energy=res.energy, norm_sq=en.norm_V_sq(pb, u), D=en.D(pb, u),
            tangent_residual=res.tangent_residual, iterations=res.iterations, trace=res.trace,
        )
        self.omega_ = u
        self.energy_ = res.energy
        self.n_iter_ = res.iterations
        return self


def solve_limit(grid: Grid, alpha: float, p: float, seed=None, **kw) -> GroundState:
    """Ground state of the limit problem on ``grid``."""
    est = GroundStateSolver(ndim=grid.ndim, alpha=alpha, p=p, half_width=grid.half_width,
                            n_points=grid.n_points, **kw)
    return est.fit(seed).result_


# decay laws

def _q_integrand(s, delta, alpha):
    return np.sqrt(max(0.0, 1.0 - (delta / s) ** alpha))


def Q_integral(t: float, delta: float, alpha: float) -> float:
    """``Q(t) = int_delta^t sqrt(1 - delta^alpha / s^alpha) ds``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if t < delta:
        raise ValueError(f"Q(t) needs t >= delta, got t={t} < {delta}")
    if t == delta:
        return 0.0
    val, _ = quad(_q_integrand, delta, t, args=(delta, alpha), epsabs=1e-10, epsrel=1e-12, limit=200)
    return float(val)


def Q_values(ts, delta: float, alpha: float) -> np.ndarray:
    """``Q`` at many points, accumulated between sorted abscissae."""
    ts = np.asarray(ts, dtype=float)
    order = np.argsort(ts)
    out = np.empty_like(ts)
    acc, prev = 0.0, delta
    for i in order:
        t = ts[i]
        if t < delta:
            raise ValueError(f"Q(t) needs t >= delta, got t={t} < {delta}")
        if t > prev:
            acc += quad(_q_integrand, prev, t, args=(delta, alpha), epsabs=1e-11, epsrel=1e-12)[0]
            prev = t
        out[i] = acc
    return out


def delta_of(c_inf: float, alpha: float) -> float:
    """``delta`` with ``delta^alpha = (4 - alpha) c_inf``."""
    return ((4.0 - alpha) * c_inf) ** (1.0 / alpha)


class DecayLawFit(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``log w + (N-1)/2 log r = -slope * x(r) + c``.

    ``model="exponential"``: ``x = rate * r``; ``model="phase"``: ``x = Q(r)``
    with the given ``delta`` and ``alpha``.  ``slope_`` near 1 confirms the law.
    """

    def __init__(self, model="exponential", ndim=3, rate=1.0, delta=None, alpha=1.0):
        self.model = model
        self.ndim = ndim
        self.rate = rate
        self.delta = delta
        self.alpha = alpha

    def _abscissa(self, r):
        r = np.asarray(r, dtype=float)
        if self.model == "exponential":
            return self.rate * r
        if self.model == "phase":
            if self.delta is None:
                raise ValueError("phase model needs delta")
            return Q_values(r, self.delta, self.alpha)
        raise ValueError(f"unknown decay model {self.model!r}")

    def fit(self, r, w):
        r = np.asarray(r, dtype=float).ravel()
        w = np.asarray(w, dtype=float).ravel()
        if r.size != w.size or r.size < 2:
            raise ValueError("need matching r and w with at least two samples")
        if np.any(w <= 0):
            raise ValueError("profile must be positive in the fit window")
        y = np.log(w) + 0.5 * (self.ndim - 1) * np.log(r)
        x = -self._abscissa(r)
        A = np.stack([x, np.ones_like(x)], 1)
        (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ np.array([slope, icpt])
        self.slope_ = float(slope)
        self.intercept_ = float(icpt)
        spread = np.sqrt(np.mean((y - y.mean()) ** 2))
        self.misfit_ = float(np.sqrt(np.mean(resid**2)) / spread) if spread > 0 else 0.0
        self.n_samples_ = int(r.size)
        return self

    def predict(self, r):
        check_is_fitted(self, "slope_")
        r = np.asarray(r, dtype=float)
        y = -self.slope_ * self._abscissa(r) + self.intercept_
        return np.exp(y - 0.5 * (self.ndim - 1) * np.log(r))


@dataclass
class DecayFit:
    window: tuple
    model: str
    slope: float
    intercept: float
    misfit: float
    n_samples: int


def fit_decay(gs: GroundState, window=(6.0, 12.0), model=None, rate=1.0, floor=1e-14) -> DecayFit:
    """Fit the decay law to the shell profile of ``gs`` over ``window``.

    ``model`` defaults to the phase law for ``p = 2`` and the exponential law
    otherwise.
    """
    r1, r2 = map(float, window)
    L = gs.grid.half_width
    if r1 < 2.0 or r2 > 0.8 * L or r1 >= r2:
        raise ValueError(f"fit window [{r1}, {r2}] must lie inside [2, {0.8 * L}]")
    if model is None:
        model = "phase" if gs.p == 2 else "exponential"
    r, w = gs.profile()
    sel = (r >= r1) & (r <= r2)
    if np.any(w[sel] < floor):
        raise ValueError("profile reaches the noise floor inside the window; shrink it")
    if sel.sum() < 20:
        raise ValueError(f"window holds {sel.sum()} profile samples, need at least 20")
    est = DecayLawFit(model=model, ndim=gs.grid.ndim, rate=rate,
                      delta=delta_of(gs.energy, gs.alpha), alpha=gs.alpha).fit(r[sel], w[sel])
    return DecayFit((r1, r2), model, est.slope_, est.intercept_, est.misfit_, est.n_samples_)


# interaction integrals

def _check_shift(gs: GroundState, zeta, strict: bool = True) -> np.ndarray:
    zeta = check_point(gs.grid.ndim, zeta, "zeta")
    if strict and np.linalg.norm(zeta) > gs.grid.half_width / 2 + 1e-12:
        raise ValueError(f"|zeta| = {np.linalg.norm(zeta):.6g} exceeds L/2 = {gs.grid.half_width / 2}")
    return zeta


def shifted(gs: GroundState, zeta) -> np.ndarray:
    """``omega_zeta(x) = omega(x - zeta)``."""
    return gf.shift(gs.grid, gs.omega, zeta)


def I_interaction(gs: GroundState, zeta, strict: bool = True) -> float:
    """``I(zeta) = int (|x|^-alpha * omega^p) omega^{p-1} omega_zeta``.

    ``strict`` enforces ``|zeta| <= L/2``, where both factors are resolved.
    """
    zeta = _check_shift(gs, zeta, strict)
    return integrate(gs.grid, gs.potential_field * gs.omega ** (gs.p - 1) * shifted(gs, zeta))


def overlap(gs: GroundState, zeta) -> float:
    """``int omega^{p-1} omega_zeta``."""
    zeta = _check_shift(gs, zeta)
    return integrate(gs.grid, gs.omega ** (gs.p - 1) * shifted(gs, zeta))


def A_perturbation(gs: GroundState, V_plus, zeta) -> float:
    """``A(zeta) = int V^+ omega_zeta^2`` (``V_plus`` is clipped at zero)."""
    zeta = _check_shift(gs, zeta)
    v = np.maximum(check_field(gs.grid, V_plus, "V_plus"), 0.0)
    return integrate(gs.grid, v * shifted(gs, zeta) ** 2)


def compact_moment(gs: GroundState, f, zeta, q: float) -> float:
    """``int f omega_zeta^q`` for a compactly supported ``f``."""
    zeta = _check_shift(gs, zeta)
    check_range(q, 1.0, np.inf, "q", closed=(False, True))
    return integrate(gs.grid, check_field(gs.grid, f, "f") * shifted(gs, zeta) ** q)


def weighted(values, radii, a: float, ndim: int) -> np.ndarray:
    """``values * r^{(N-1)/2} e^{a r}``."""
    radii = np.asarray(radii, dtype=float)
    return np.asarray(values) * radii ** (0.5 * (ndim - 1)) * np.exp(a * radii)
