"""Potentials V (with V_inf = 1) and the hypothesis checks (V0)-(V4)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .symmetry import SymmetryGroup, mu_bounds, sigma_sample


@dataclass(frozen=True)
class Potential:
    """``variant`` is one of ``zero``, ``exp_well``, ``exp_bump``, ``sampled``.

    exp_well:  ``V(x) = -c0 exp(-lam max(|x|, r0))``
    exp_bump:  ``V(x) = c0 exp(-kappa |x|)``
    """

    variant: str = "zero"
    c0: float = 0.0
    rate: float = 0.0
    r0: float = 0.0
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)
    grid: Grid | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.variant not in ("zero", "exp_well", "exp_bump", "sampled"):
            raise ValueError(f"unknown potential variant {self.variant!r}")
        if self.variant in ("exp_well", "exp_bump"):
            if not self.c0 > 0:
                raise ValueError("c0 must be positive")
            if not self.rate > 0:
                raise ValueError("decay rate must be positive")
            if self.r0 < 0:
                raise ValueError("r0 must be nonnegative")
        if self.variant == "sampled" and (self.samples is None or self.grid is None):
            raise ValueError("sampled potential needs a grid and samples")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def exp_well(cls, c0, lam, r0=0.0):
        return cls("exp_well", float(c0), float(lam), float(r0))

    @classmethod
    def exp_bump(cls, c0, kappa):
        return cls("exp_bump", float(c0), float(kappa))

    @classmethod
    def sampled(cls, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError("sampled potential shape does not match its grid")
        return cls("sampled", samples=values, grid=grid)

    @property
    def lam(self) -> float:
        return self.rate

    @property
    def kappa(self) -> float:
        return self.rate

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.variant == "zero":
            return np.zeros_like(r)
        if self.variant == "exp_well":
            return -self.c0 * np.exp(-self.rate * np.maximum(r, self.r0))
        if self.variant == "exp_bump":
            return self.c0 * np.exp(-self.rate * r)
        raise ValueError("sampled potentials have no radial form")

    def evaluate(self, grid: Grid) -> np.ndarray:
        if self.variant == "sampled":
            if not grid.same_as(self.grid):
                raise ValueError("sampled potential lives on a different grid")
            return np.array(self.samples)
        return self.radial(grid.radius())

    def describe(self) -> str:
        if self.variant == "zero":
            return "zero"
        if self.variant == "exp_well":
            return f"exp_well {self.c0:g} {self.rate:g} {self.r0:g}"
        if self.variant == "exp_bump":
            return f"exp_bump {self.c0:g} {self.rate:g}"
        return "sampled"


def check_V0(values) -> bool:
    """``inf (1 + V) > 0`` on the grid."""
    return bool(np.min(1.0 + np.asarray(values)) > 0)


@dataclass
class HypothesisReport:
    V0: bool
    V1: bool
    V2: bool
    V3: bool
    V4: bool
    mu_upper_G: float
    mu_lower_G: float
    mu_lower_Gamma_Z: float
    mu_upper_Gamma_Z: float
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "notes"} | {"notes": "; ".join(self.notes)}


def check_hypotheses(V: Potential, group: SymmetryGroup, Z=None, grid: Grid | None = None) -> HypothesisReport:
    """Evaluate (V0)-(V4) with the orbit-distance bounds they involve.

    ``mu^G``/``mu_G`` are taken over sampled Sigma of ``G = ker phi``;
    ``mu_Gamma(Z)``/``mu^Gamma(Z)`` over the sample ``Z`` (default: sampled
    Sigma of Gamma).
    """
    notes = []
    G = group.kernel()
    sig_G = sigma_sample(G)
    lo_G, hi_G = mu_bounds(G, sig_G)
    if Z is None:
        Z = sigma_sample(group)
    lo_Z, hi_Z = mu_bounds(group, Z)
    if not group.ell_certified:
        notes.append("ell sampled, not certified")
    if grid is not None:
        v0 = check_V0(V.evaluate(grid))
    elif V.variant == "exp_well":
        v0 = V.c0 * np.exp(-V.rate * V.r0) < 1
    elif V.variant == "sampled":
        v0 = check_V0(V.samples)
    else:
        v0 = True
    well = V.variant == "exp_well"
    bump = V.variant in ("exp_bump", "zero")
    rate = V.rate
    # the zero potential satisfies V <= c0 e^{-kappa|x|} for every kappa
    if V.variant == "zero":
        rate = np.inf
    if V.variant == "sampled":
        notes.append("sampled potential: decay hypotheses not checked")
    return HypothesisReport(
        V0=bool(v0),
        V1=bool(well and 0 < rate < hi_G),
        V2=bool(well and 0 < rate < lo_Z),
        V3=bool(bump and rate > lo_G),
        V4=bool(bump and rate > hi_Z),
        mu_upper_G=hi_G,
        mu_lower_G=lo_G,
        mu_lower_Gamma_Z=lo_Z,
        mu_upper_Gamma_Z=hi_Z,
        notes=notes,
    )


def parse_potential(spec: str, grid: Grid | None = None) -> Potential:
    """``zero | exp_well c0 lambda r0 | exp_bump c0 kappa | file <path.chqf>``."""
    parts = spec.split()
    if not parts:
        raise ValueError("empty potential spec")
    kind, args = parts[0], parts[1:]
    if kind == "zero" and not args:
        return Potential.zero()
    if kind == "exp_well" and len(args) in (2, 3):
        return Potential.exp_well(*map(float, args))
    if kind == "exp_bump" and len(args) == 2:
        return Potential.exp_bump(*map(float, args))
    if kind == "file" and len(args) == 1:
        from .io import read_chqf

        g, v = read_chqf(args[0])
        if grid is not None and not g.same_as(grid):
            raise ValueError(f"potential file {args[0]} lives on a different grid")
        return Potential.sampled(g, v)
    raise ValueError(f"bad potential spec {spec!r}")
