"""Finite-window trend checks of the decay and interaction estimates.

Limits ``|zeta| -> infinity`` cannot be taken on a box, so each estimate is
checked as a strict monotone trend (or a positive floor) over sampled radii.
Shifts are whole-cell lattice vectors along ``e1`` unless stated otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import energy as en
from . import groundstate as gsm
from . import testfn as tf
from .grid import Grid, integrate
from .groundstate import GroundState
from .potential import Potential

log = logging.getLogger(__name__)

__all__ = [
    "TrendCheck", "lattice_radii", "decay_dichotomy", "overlap_trend", "interaction_trend",
    "interaction_floor", "perturbation_trend", "compact_trend", "q_bounds", "cutoff_gap_trend",
    "escape_trend", "lemma54_random", "sigma_trends", "limit_suite",
]


@dataclass
class TrendCheck:
    name: str
    kind: str  # "decreasing", "increasing", "positive" or "bound"
    xs: np.ndarray
    values: np.ndarray
    passed: bool
    note: str = ""

    def row(self) -> str:
        v = np.asarray(self.values, dtype=float)
        span = f"{v[0]:.4g} .. {v[-1]:.4g}" if v.size else "-"
        return f"{self.name:<28} {self.kind:<10} {'PASS' if self.passed else 'FAIL':<5} {span} {self.note}"


def _strict(values, kind: str) -> bool:
    d = np.diff(np.asarray(values, dtype=float))
    if kind == "decreasing":
        return bool(np.all(d < 0))
    if kind == "increasing":
        return bool(np.all(d > 0))
    raise ValueError(kind)


def _trend(name, kind, xs, values, note=""):
    values = np.asarray(values, dtype=float)
    ok = bool(np.all(np.isfinite(values))) and _strict(values, kind)
    return TrendCheck(name, kind, np.asarray(xs, dtype=float), values, ok, note)


def lattice_radii(grid: Grid, lo: float, hi: float, step: float | None = None) -> np.ndarray:
    """Radii in ``[lo, hi]`` that are whole multiples of ``step`` (a multiple of ``h``)."""
    h = grid.spacing
    step = h if step is None else step
    if not grid.is_lattice_vector(np.r_[step, np.zeros(grid.ndim - 1)]):
        raise ValueError(f"step {step} is not a multiple of h = {h}")
    k0, k1 = int(np.ceil(lo / step - 1e-9)), int(np.floor(hi / step + 1e-9))
    return step * np.arange(k0, k1 + 1)


def _e1(ndim):
    return np.eye(ndim)[0]


# For p = 2 the weights carry a polynomial factor from the profile,
# so the a = 0.5 trends only turn monotone beyond |zeta| of about 9.
SHIFT_WINDOW = (10.0, 16.0)


def _shift_radii(gs, radii, window=SHIFT_WINDOW):
    if radii is None:
        lo, hi = window
        if hi > gs.grid.half_width / 2 + 1e-12:
            raise ValueError(f"shift window end {hi} exceeds L/2 = {gs.grid.half_width / 2}; "
                             f"use L >= {2 * hi:g}")
        radii = lattice_radii(gs.grid, lo, hi, 1.0)
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise ValueError("a trend needs at least 3 radii")
    return radii


# profile and interaction estimates of the limit problem

def decay_dichotomy(gs: GroundState, window=None, rates=(0.5, 1.5)) -> list[TrendCheck]:
    """``omega(r) r^{(N-1)/2} e^{a r}`` decreasing for ``a < 1`` and increasing for ``a > 1``."""
    L = gs.grid.half_width
    lo, hi = window if window is not None else (6.0, 0.8 * L)
    if hi > 0.8 * L + 1e-12:
        raise ValueError(f"window end {hi} exceeds 0.8 L = {0.8 * L}")
    r, w = gs.profile()
    sel = (r >= lo) & (r <= hi)
    out = []
    for a in rates:
        kind = "decreasing" if a < 1 else "increasing"
        out.append(_trend(f"profile a={a:g}", kind, r[sel], gsm.weighted(w[sel], r[sel], a, gs.grid.ndim),
                          f"[{lo:g}, {hi:g}] {int(sel.sum())} shells"))
    return out


def overlap_trend(gs: GroundState, a: float = 0.5, radii=None, window=SHIFT_WINDOW) -> TrendCheck:
    radii = _shift_radii(gs, radii, window)
    e = _e1(gs.grid.ndim)
    vals = [gsm.overlap(gs, r * e) for r in radii]
    return _trend(f"overlap a={a:g}", "decreasing", radii, gsm.weighted(vals, radii, a, gs.grid.ndim))


def interaction_trend(gs: GroundState, a: float = 0.5, radii=None, window=SHIFT_WINDOW) -> TrendCheck:
    radii = _shift_radii(gs, radii, window)
    e = _e1(gs.grid.ndim)
    vals = [gsm.I_interaction(gs, r * e) for r in radii]
    return _trend(f"interaction a={a:g}", "decreasing", radii, gsm.weighted(vals, radii, a, gs.grid.ndim))


def interaction_floor(gs: GroundState, a: float = 1.2, radii=None) -> TrendCheck:
    """Minimum of ``I(zeta) |zeta|^{(N-1)/2} e^{a|zeta|}`` over ``[1, L/2]``; must stay positive."""
    if radii is None:
        radii = lattice_radii(gs.grid, 1.0, gs.grid.half_width / 2, 0.5 if gs.grid.is_lattice_vector(
            np.r_[0.5, np.zeros(gs.grid.ndim - 1)]) else None)
    e = _e1(gs.grid.ndim)
    vals = gsm.weighted([gsm.I_interaction(gs, r * e) for r in radii], radii, a, gs.grid.ndim)
    k = float(np.min(vals))
    return TrendCheck(f"interaction floor a={a:g}", "positive", np.asarray(radii), vals, bool(k > 0),
                      f"min {k:.6g}")


def perturbation_trend(gs: GroundState, V: Potential | None = None, M: float = 1.5, radii=None,
                       window=SHIFT_WINDOW) -> TrendCheck:
    V = V if V is not None else Potential.exp_bump(1.0, 2.0)
    if V.variant == "exp_bump" and not V.kappa > M:
        raise ValueError(f"need kappa > M, got kappa={V.kappa}, M={M}")
    radii = _shift_radii(gs, radii, window)
    vp = np.maximum(V.evaluate(gs.grid), 0.0)
    e = _e1(gs.grid.ndim)
    vals = [gsm.A_perturbation(gs, vp, r * e) for r in radii]
    return _trend(f"perturbation M={M:g}", "decreasing", radii, gsm.weighted(vals, radii, M, gs.grid.ndim))


def compact_trend(gs: GroundState, a: float = 0.5, q: float | None = None, radius: float = 1.0,
                  radii=None, window=(4.0, 8.0)) -> TrendCheck:
    q = gs.p if q is None else q
    radii = _shift_radii(gs, radii, window)
    f = tf.Cutoff("ball", eps=0.5, scale=radius)(gs.grid)
    e = _e1(gs.grid.ndim)
    vals = [gsm.compact_moment(gs, f, r * e, q) for r in radii]
    return _trend(f"compact moment q={q:g}", "decreasing", radii,
                  gsm.weighted(vals, radii, q * a, gs.grid.ndim))


def q_bounds(delta: float, alpha: float, nu: float = 0.9, ts=None) -> TrendCheck:
    """``nu (t - s_nu) <= Q(t) <= t - delta`` on sampled ``t``, ``s_nu = delta / (1 - nu^2)^{1/alpha}``."""
    s_nu = delta / (1 - nu * nu) ** (1 / alpha)
    ts = np.linspace(delta, 4 * s_nu, 60) if ts is None else np.asarray(ts, dtype=float)
    Q = gsm.Q_values(ts, delta, alpha)
    upper = ts - delta - Q
    lower = np.where(ts >= s_nu, Q - nu * (ts - s_nu), np.inf)
    slack = np.minimum(upper, lower)
    ok = bool(np.all(slack >= -1e-10)) and bool(np.all(np.diff(Q) > 0)) and Q[0] == 0
    return TrendCheck("Q bounds", "bound", ts, slack, ok, f"nu={nu:g} min slack {float(np.min(slack)):.3g}")


def cutoff_gap_trend(gs: GroundState, S_values=(4.0, 6.0, 8.0), eps: float = 0.5) -> list[TrendCheck]:
    gaps = np.array([tf.omega_S_gaps(gs, S, eps) for S in S_values])
    return [_trend("cutoff norm gap", "decreasing", S_values, gaps[:, 0]),
            _trend("cutoff D gap", "decreasing", S_values, gaps[:, 1])]


def escape_trend(pb: en.Problem, gs: GroundState, radii=(4.0, 6.0, 8.0)) -> TrendCheck:
    """``J_V(pi(u_n)) - c_inf`` decreasing along ``|x_n|``."""
    e = _e1(pb.grid.ndim)
    vals = [tf.escape_sequence(pb, gs, r * e).diagnostics["energy"] - gs.energy for r in radii]
    return _trend("escape energy gap", "decreasing", radii, vals)


def lemma54_random(pb: en.Problem, cutoffs, n_fields: int = 100, seed: int = 0, width: float = 3.0) -> dict:
    """Worst relative slack of both cutoff inequalities over random smooth fields."""
    rng = np.random.default_rng(seed)
    grid = pb.grid
    worst = {}
    for cut in cutoffs:
        lo_n, lo_d = np.inf, np.inf
        for _ in range(n_fields):
            u = _random_field(grid, rng, width)
            r = tf.lemma54(pb, u, cut)
            lo_n = min(lo_n, r["norm_slack"])
            lo_d = min(lo_d, r["D_slack"])
        worst[cut.kind] = (lo_n, lo_d)
    return worst


def _random_field(grid: Grid, rng, width: float) -> np.ndarray:
    """Sum of a few random signed Gaussians plus band-limited noise."""
    X = grid.coords()
    u = np.zeros(grid.shape)
    for _ in range(3):
        c = rng.uniform(-0.4, 0.4, grid.ndim) * grid.half_width
        s = rng.uniform(0.5, 1.5) * width
        r2 = sum((x - ci) ** 2 for x, ci in zip(X, c))
        u += rng.normal() * np.exp(-r2 / (2 * s * s))
    return u


# symmetric sums of translates

def sigma_trends(pb: en.Problem, gs: GroundState, z, radii=(4.0, 6.0, 8.0), f=None) -> list[TrendCheck]:
    """Ratios to ``eps_{Rz}`` decreasing along ``R``.

    Covers ``eps_hat / eps``, the cross interaction (onto ``phi`` only),
    ``int V^+ sigma^2`` and ``int f |sigma|^p``.
    """
    if f is None:
        f = tf.Cutoff("ball", eps=0.5, scale=2.0)(pb.grid)
    group = pb.group
    rows = {"eps_hat": [], "cross": [], "potential": [], "compact": []}
    for R in radii:
        con = tf.sigma(pb, gs, z, R)
        eps = con.diagnostics["eps"]
        rows["eps_hat"].append(con.diagnostics["eps_hat"] / eps)
        if group.is_epimorphism:
            rows["cross"].append(tf.cross_interaction(gs, group, z, R) / eps)
        rows["potential"].append(tf.potential_overlap(pb, con) / eps)
        rows["compact"].append(tf.compact_overlap(pb, con, f, pb.p) / eps)
    out = [
        _trend("eps_hat / eps", "decreasing", radii, rows["eps_hat"]),
        _trend("V+ sigma^2 / eps", "decreasing", radii, rows["potential"]),
        _trend("f sigma^p / eps", "decreasing", radii, rows["compact"]),
    ]
    if rows["cross"]:
        out.insert(1, _trend("cross / eps", "decreasing", radii, rows["cross"]))
    return out


def limit_suite(gs: GroundState, wide: GroundState | None = None,
                shift_window=SHIFT_WINDOW) -> list[TrendCheck]:
    """All limit-problem checks (no potential, no obstacle).

    Profile checks use ``gs``; shift trends use ``wide`` when given, a
    ground state whose box holds ``|zeta|`` up to the end of ``shift_window``.
    """
    far = gs if wide is None else wide
    out = decay_dichotomy(gs)
    out += [overlap_trend(far, window=shift_window), interaction_trend(far, window=shift_window),
            interaction_floor(gs), perturbation_trend(far, window=shift_window), compact_trend(gs)]
    if gs.p == 2:
        out.append(q_bounds(gsm.delta_of(gs.energy, gs.alpha), gs.alpha))
    out += cutoff_gap_trend(gs)
    return out
