"""Randomised checks of the elementary inequalities behind the energy estimates.

Each check draws nonnegative tuples uniformly from ``[0, 10]`` with a seeded
generator and reports the worst relative slack ``(lhs - rhs) / scale``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["TrialSpec", "CheckResult", "RatioResult", "check_l0", "check_l1", "check_razon", "run_all"]

HIGH = 10.0


@dataclass
class TrialSpec:
    trials: int = 10_000
    sizes: tuple = (2, 3, 5)
    exponents: tuple = (2.0, 2.5, 3.0)
    seed: int = 0
    tol: float = 1e-12

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(int(n) != n or n < 1 for n in self.sizes):
            raise ValueError("tuple sizes must be integers >= 1")
        if any(p < 2 for p in self.exponents):
            raise ValueError("exponents must be >= 2")


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_slack: float
    violations: int
    trials: int
    detail: dict = field(default_factory=dict)

    def row(self) -> str:
        return f"{self.name:<12} {'PASS' if self.passed else 'FAIL':<5} worst_slack={self.worst_slack:.3e} violations={self.violations}/{self.trials}"


def _slack(lhs, rhs, scale):
    return (lhs - rhs) / np.maximum(scale, np.finfo(float).tiny)


def _cross(x, y):
    """``sum_{i != k} x_i y_k`` along the last axis."""
    return np.sum(x, axis=-1) * np.sum(y, axis=-1) - np.sum(x * y, axis=-1)


def l0_i(a, p):
    """Return ``(lhs, rhs, scale)`` for the power-of-sum inequality."""
    a = np.asarray(a, dtype=float)
    lhs = np.sum(a, axis=-1) ** p
    rhs = np.sum(a**p, axis=-1) + (p - 1) * _cross(a ** (p - 1), a)
    return lhs, rhs, np.maximum(np.abs(lhs), np.abs(rhs))


def l0_ii(a, b, p):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    lhs = np.abs(a - b) ** p
    pos = a**p + b**p
    rhs = pos - p * (a ** (p - 1) * b + a * b ** (p - 1))
    return lhs, rhs, np.maximum(lhs, pos)


def l1_product(a, b, p):
    """Product inequality for ``A^p B^p``; with ``p = 2`` it is the quadratic case."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    lhs = np.sum(a, axis=-1) ** p * np.sum(b, axis=-1) ** p
    rhs = np.sum(a**p * b**p, axis=-1) + (p - 1) * (
        _cross(a**p * b ** (p - 1), b) + _cross(b**p * a ** (p - 1), a))
    return lhs, rhs, np.maximum(np.abs(lhs), np.abs(rhs))


def l1_difference(a, at, b, bt, p):
    a, at, b, bt = (np.asarray(x, dtype=float) for x in (a, at, b, bt))
    n = a.shape[-1]
    A, At, B, Bt = (np.sum(x, axis=-1) for x in (a, at, b, bt))
    lhs = np.abs(A - At) ** p * np.abs(B - Bt) ** p
    pos = A**p * B**p + At**p * Bt**p
    c = p * n ** (p - 1)
    neg = c * (B**p + Bt**p) * (np.sum(a ** (p - 1), axis=-1) * At + np.sum(at ** (p - 1), axis=-1) * A) \
        + c * (A**p + At**p) * (np.sum(b ** (p - 1), axis=-1) * Bt + np.sum(bt ** (p - 1), axis=-1) * B)
    return lhs, pos - neg, np.maximum(lhs, pos)


def _run(name, spec, draw, parts):
    rng = np.random.default_rng(spec.seed)
    worst, bad, total = np.inf, 0, 0
    per = {}
    for p in spec.exponents:
        for n in spec.sizes:
            args = draw(rng, n)
            for label, fn in parts:
                lhs, rhs, scale = fn(args, p)
                s = _slack(lhs, rhs, scale)
                w = float(np.min(s))
                per[f"{label} p={p:g} n={n}"] = w
                worst = min(worst, w)
                bad += int(np.sum(s < -spec.tol))
                total += s.size
    return CheckResult(name, bad == 0, worst, bad, total, per)


def check_l0(spec: TrialSpec | None = None) -> CheckResult:
    spec = spec or TrialSpec()

    def draw(rng, n):
        return rng.uniform(0, HIGH, (spec.trials, n)), rng.uniform(0, HIGH, (spec.trials, 2))

    parts = [
        ("sum", lambda args, p: l0_i(args[0], p)),
        ("difference", lambda args, p: l0_ii(args[1][:, 0], args[1][:, 1], p)),
    ]
    return _run("l0", spec, draw, parts)


def check_l1(spec: TrialSpec | None = None) -> CheckResult:
    spec = spec or TrialSpec()

    def draw(rng, n):
        return rng.uniform(0, HIGH, (4, spec.trials, n))

    parts = [
        ("product", lambda x, p: l1_product(x[0], x[1], p)),
        ("quadratic", lambda x, p: l1_product(x[0], x[1], 2.0)),
        ("difference", lambda x, p: l1_difference(x[0], x[2], x[1], x[3], p)),
    ]
    return _run("l1", spec, draw, parts)


@dataclass
class RatioResult:
    status: str  # "pass", "fail" or "inapplicable"
    slope: float
    c0: float
    t0: float
    worst_slack: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def row(self) -> str:
        return (f"{'razon':<12} {self.status.upper():<5} slope={self.slope:.6g} c0={self.c0:.6g} "
                f"t0={self.t0:.6g} worst_slack={self.worst_slack:.3e}")


def _square(t):
    return t * t


def _neg_square(t):
    return -t * t


def check_razon(a: float = 1.0, beta: float = 0.5, b: float = 4.0, samples: int = 4000,
                o_num: Callable = _square, o_den: Callable = _neg_square, t_max: float = 1.0,
                tol: float = 1e-12) -> RatioResult:
    """Check ``psi(t) <= a^(1-beta) - c0 t`` near ``0+``.

    ``psi(t) = (a + t + o_num(t)) / (a + b t + o_den(t))^beta``.  The one-sided
    slope is estimated from the smallest samples; ``c0`` is half its size and
    ``t0`` the first sample where the bound breaks (or ``t_max``).
    """
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if samples < 10:
        raise ValueError("need at least 10 samples")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    ts = np.unique(np.concatenate([np.geomspace(1e-9 * t_max, t_max, samples // 2),
                                   np.linspace(0, t_max, samples - samples // 2 + 1)[1:]]))
    den = a + b * ts + o_den(ts)
    if np.any(den <= 0):
        # the o-terms push the base negative: shrink the window to where psi is defined
        ts = ts[: np.argmax(den <= 0)]
        den = den[: ts.size]
    psi = (a + ts + o_num(ts)) / den**beta
    top = a ** (1 - beta)
    small = ts[:8]
    slope = float(np.median((psi[:8] - top) / small))
    if beta * b <= 1:
        return RatioResult("inapplicable", slope, 0.0, 0.0, np.nan, ts.size)
    if slope >= 0:
        return RatioResult("fail", slope, 0.0, 0.0, np.nan, ts.size)
    c0 = -0.5 * slope
    slack = (top - c0 * ts - psi) / top
    broken = np.flatnonzero(slack < -tol)
    t0 = float(ts[broken[0]]) if broken.size else float(ts[-1])
    inside = ts < t0 if broken.size else np.ones_like(ts, dtype=bool)
    worst = float(np.min(slack[inside]))
    return RatioResult("pass" if t0 > 0 and worst >= -tol else "fail", slope, c0, t0, worst, ts.size)


def run_all(spec: TrialSpec | None = None) -> list:
    spec = spec or TrialSpec()
    return [check_l0(spec), check_l1(spec), check_razon(), check_razon(4.0, 0.5, 3.0)]
