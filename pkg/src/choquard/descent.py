"""Projected gradient descent of J_V on the Nehari manifold.

Shared by the ground-state and equivariant solvers.  Each accepted step is
``u <- pi(u - s grad_V J(u))`` with the direction optionally restricted to
an invariant subspace; the step ``s`` is chosen by Armijo backtracking on
the closed form of ``J_V(pi(.))``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import energy as en

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
BACKTRACK = 0.5
GROW = 2.0
S_MAX = 16.0
# energy changes below this relative size are roundoff
ROUNDOFF = 20 * np.finfo(float).eps


class ConvergenceError(RuntimeError):
    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


@dataclass
class DescentResult:
    u: np.ndarray
    energy: float
    norm_sq: float
    D: float
    tangent_residual: float
    gradient_residual: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    seconds: float = 0.0


class _State:
    __slots__ = ("u", "conv", "norm_sq", "D", "energy", "g", "gg", "rel_g", "rel_t")

    def __init__(self, pb, u, conv=None):
        self.u = u
        self.conv = en.nonlocal_potential(pb, u) if conv is None else conv
        self.norm_sq = en.norm_V_sq(pb, u)
        self.D = en.D(pb, u, self.conv)
        self.energy = en.energy_on_nehari(pb, u, self.norm_sq, self.D)


def _on_nehari(pb, v):
    conv = en.nonlocal_potential(pb, v)
    n = en.norm_V_sq(pb, v)
    d = en.D(pb, v, conv)
    t = en.nehari_factor(pb, v, n, d)
    s = _State.__new__(_State)
    s.u = t * v
    s.conv = t**pb.p * conv
    s.norm_sq = t * t * n
    s.D = t ** (2 * pb.p) * d
    s.energy = en.energy_on_nehari(pb, v, n, d)
    return s


def _refine(pb, st, trial, d, s, slope):
    """One quadratic-interpolation step on ``J(pi(u + s d))``.

    Without it CG directions overshoot the unit-curvature modes and the
    iteration degenerates into restarted steepest descent.
    """
    curv = 2.0 * (trial.energy - st.energy - s * slope) / (s * s)
    if not curv > 0:
        return trial, s
    s_star = -slope / curv
    if abs(s_star - s) <= 0.1 * s:
        return trial, s
    alt = _on_nehari(pb, st.u + s_star * d)
    if alt.energy < trial.energy:
        return alt, s_star
    return trial, s


def nehari_descent(pb: en.Problem, u0, project=None, tol: float = 1e-8, max_iter: int = 10_000,
                   step: float = 1.0, method: str = "cg", callback=None,
                   raise_on_fail: bool = True) -> DescentResult:
    """Minimise ``J_V`` over the Nehari manifold starting from ``u0``.

    ``project`` maps fields onto the admissible subspace (group projection);
    the mask of ``pb`` is always applied.  ``method`` is ``"gradient"``
    (steepest descent in the V metric) or ``"cg"`` (Polak-Ribiere+ with
    restarts).  Stops when the tangent gradient satisfies
    ``||grad_N J||_V <= tol ||u||_V``.
    """
    if method not in ("gradient", "cg"):
        raise ValueError(f"unknown descent method {method!r}")
    t0 = time.perf_counter()

    def admissible(f):
        f = en.mask(pb, f)
        return f if project is None else en.mask(pb, project(f))

    def gradient(st, x0=None, rel=1.0):
        r = en.residual(pb, st.u, st.conv)
        g = admissible(en.riesz_map(pb, r, x0=x0, rtol=min(1e-6, 1e-3 * rel)))
        gg = en.inner_V(pb, g, g)
        # A_V^{-1} N(u) = u - g, hence grad Phi = (2 - 2p) u + 2p g
        normal = (2.0 - 2.0 * pb.p) * st.u + 2.0 * pb.p * g
        gt = g - en.inner_V(pb, g, normal) / en.inner_V(pb, normal, normal) * normal
        st.g, st.gg = g, gg
        st.rel_g = np.sqrt(max(gg, 0.0) / st.norm_sq)
        st.rel_t = np.sqrt(max(en.inner_V(pb, gt, gt), 0.0) / st.norm_sq)

    u = admissible(np.array(u0, dtype=float))
    if not np.any(u):
        raise ValueError("initial field vanishes after masking and projection")
    st = _on_nehari(pb, u)
    gradient(st)
    trace = []
    s = step
    it = 0
    d = None
    converged = False
    while True:
        trace.append((it, st.energy, st.rel_t, s))
        if callback is not None:
            callback(it, st)
        if st.rel_t <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        if d is None or method == "gradient":
            d = -st.g
        slope = en.inner_V(pb, st.g, d)
        if slope >= 0:
            d = -st.g
            slope = -st.gg
        accepted = False
        for _ in range(60):
            trial = _on_nehari(pb, st.u + s * d)
            de = trial.energy - st.energy
            if de <= ARMIJO_C * s * slope and de < 0:
                if abs(de) > ROUNDOFF * abs(st.energy):
                    trial, s = _refine(pb, st, trial, d, s, slope)
                gradient(trial, st.g, st.rel_g)
                accepted = True
                break
            if abs(de) <= ROUNDOFF * abs(st.energy):
                # energy differences are roundoff: secant step on the slope,
                # accepted when the gradient shrinks
                gradient(trial, st.g, st.rel_g)
                t_slope = en.inner_V(pb, trial.g, d)
                if t_slope > slope:
                    s_sec = s * slope / (slope - t_slope)
                    if abs(s_sec - s) > 0.1 * s:
                        alt = _on_nehari(pb, st.u + s_sec * d)
                        gradient(alt, trial.g, st.rel_g)
                        if alt.gg < trial.gg:
                            trial, s = alt, s_sec
                if trial.gg < st.gg:
                    accepted = True
                    break
            s *= BACKTRACK
        if not accepted:
            log.warning("line search failed at iteration %d (rel gradient %.3e)", it, st.rel_t)
            break
        if not trial.D > 0 or not np.isfinite(trial.energy):
            raise ConvergenceError("iterate collapsed to zero")
        if method == "cg":
            beta = max(0.0, (trial.gg - en.inner_V(pb, trial.g, st.g)) / st.gg)
            d = -trial.g + beta * d
            new_slope = en.inner_V(pb, trial.g, d)
            log.debug("it %d s %.3g beta %.3g slope %.3e new_slope %.3e", it, s, beta, slope, new_slope)
            # after a restart the last accepted step is already a curvature estimate
            s = min(GROW * s * slope / new_slope, S_MAX) if new_slope < 0 else s
        else:
            s = min(GROW * s, S_MAX)
        st = trial
    res = DescentResult(
        u=st.u, energy=st.energy, norm_sq=st.norm_sq, D=st.D, tangent_residual=float(st.rel_t),
        gradient_residual=float(st.rel_g), iterations=it, converged=converged, trace=trace,
        seconds=time.perf_counter() - t0,
    )
    if not converged and raise_on_fail:
        raise ConvergenceError(
            f"no convergence after {it} iterations: tangent residual {st.rel_t:.3e} > {tol:.1e}", res)
    return res
