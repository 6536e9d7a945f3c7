"""Radial shooting for the three-dimensional Choquard ground state (alpha=1, p=2).

With ``Phi = |x|^{-1} * w^2`` one has ``-Laplace Phi = 4 pi w^2``, so the
ground state solves the radial system

    w'' + (2/r) w' = w - Phi w,     Phi'' + (2/r) Phi' = -4 pi w^2.

We integrate the scale-free form ``-Laplace w = psi w``, ``-Laplace psi =
4 pi w^2`` from ``w(0) = 1`` and bisect on ``psi(0)`` for the nodeless
decaying branch, then rescale so that ``psi(inf) = -1``.  This path is
independent of the grid solver and serves as its oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp, trapezoid


@dataclass
class RadialGroundState:
    r: np.ndarray
    w: np.ndarray
    energy: float
    norm_sq: float
    l2_sq: float
    psi0: float


def _rhs(r, y):
    w, dw, psi, dpsi = y
    return [dw, -2.0 * dw / r - psi * w, dpsi, -2.0 * dpsi / r - 4.0 * np.pi * w * w]


def _shoot(psi0, r_max, rtol=1e-12):
    r0 = 1e-6
    y0 = [1.0 - psi0 * r0**2 / 6, -psi0 * r0 / 3, psi0 - 4 * np.pi * r0**2 / 6, -4 * np.pi * r0 / 3]

    def crossed(r, y):
        return y[0]

    crossed.terminal = True
    crossed.direction = -1

    def turned(r, y):
        return y[1]

    turned.terminal = True
    turned.direction = 1
    sol = solve_ivp(_rhs, (r0, r_max), y0, method="DOP853", rtol=rtol, atol=1e-14,
                    events=(crossed, turned), dense_output=True)
    if sol.t_events[0].size:
        return +1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def shoot_ground_state(r_max: float = 60.0, iters: int = 200) -> RadialGroundState:
    lo, hi = 0.0, 10.0
    while _shoot(hi, r_max)[0] <= 0:
        hi *= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        side, _ = _shoot(mid, r_max)
        if side > 0:
            hi = mid
        else:
            lo = mid
    _, sol = _shoot(lo, r_max)
    # cut where the decaying branch is lost (w turning up)
    t_end = sol.t[-1]
    r = np.linspace(1e-6, t_end, 200001)
    w, dw, psi, dpsi = sol.sol(r)
    k = int(np.argmin(w))
    r, w, dw, psi, dpsi = r[: k + 1], w[: k + 1], dw[: k + 1], psi[: k + 1], dpsi[: k + 1]
    # outside the mass, psi = psi_inf + mass / r exactly
    cut = np.nonzero(w < 1e-7 * w[0])[0]
    j = int(cut[0]) if cut.size else len(r) - 1
    psi_inf = psi[j] + r[j] * dpsi[j]
    lam = 1.0 / np.sqrt(-psi_inf)
    shell = 4.0 * np.pi * r**2
    d = lam**3 * trapezoid((psi - psi_inf) * w**2 * shell, r)
    grad = lam**3 * trapezoid(dw**2 * shell, r)
    l2 = lam * trapezoid(w**2 * shell, r)
    return RadialGroundState(
        r=r / lam,
        w=lam**2 * w,
        energy=0.25 * d,
        norm_sq=grad + l2,
        l2_sq=l2,
        psi0=lo,
    )
