"""Finite orthogonal groups with a sign homomorphism, orbit geometry and
equivariant projection of grid fields.

A group element acts on functions by ``(g u)(x) = phi(g) u(g^{-1} x)``; a
field is equivariant when ``u(g x) = phi(g) u(x)`` for all ``g``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import null_space, orth

from .grid import Grid, interpolate

ORBIT_TOL = 1e-8
ORTHO_TOL = 1e-12
CLOSURE_TOL = 1e-10
MAX_ORDER = 10_000


@dataclass(frozen=True)
class GroupElement:
    matrix: np.ndarray
    sign: int = 1

    def __post_init__(self):
        g = np.asarray(self.matrix, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("group element must be a square matrix")
        if np.max(np.abs(g.T @ g - np.eye(len(g)))) > ORTHO_TOL:
            raise ValueError("group element is not orthogonal")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        object.__setattr__(self, "matrix", g)

    @property
    def is_identity(self) -> bool:
        return bool(np.allclose(self.matrix, np.eye(len(self.matrix)), atol=CLOSURE_TOL, rtol=0))

    @property
    def is_grid_exact(self) -> bool:
        """Signed permutation matrices map the node lattice onto itself."""
        g = self.matrix
        r = np.round(g)
        return bool(np.allclose(g, r, atol=1e-12, rtol=0) and np.all(np.abs(r).sum(axis=0) == 1))


def _dedup(points: np.ndarray, tol: float = ORBIT_TOL) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    earlier = np.tril(d <= tol, k=-1)
    return points[~earlier.any(axis=1)]


def sphere_sample(ndim: int, n: int = 10_000, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform points on the unit sphere."""
    if ndim == 2:
        t = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(t), np.sin(t)], -1)
    if ndim == 3:
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        phi = np.pi * (1 + 5**0.5) * k
        rho = np.sqrt(1 - z * z)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], -1)
    x = np.random.default_rng(seed).standard_normal((n, ndim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


class SymmetryGroup:
    """Finite subgroup of O(N) together with ``phi: Gamma -> {+1, -1}``."""

    def __init__(self, elements, name: str = "custom", exact_ell: int | None = None,
                 exact_ell_kernel: int | None = None):
        self.elements: list[GroupElement] = list(elements)
        if not self.elements:
            raise ValueError("group must be nonempty")
        self.ndim = len(self.elements[0].matrix)
        self.name = name
        self._exact_ell = exact_ell
        self._exact_ell_kernel = exact_ell_kernel
        self._check()

    # construction
    @classmethod
    def from_generators(cls, generators, signs=None, **kw) -> "SymmetryGroup":
        gens = [np.asarray(g, dtype=float) for g in generators]
        signs = [1] * len(gens) if signs is None else [int(s) for s in signs]
        n = len(gens[0]) if gens else kw.pop("ndim")
        found = [GroupElement(np.eye(n), 1)]
        frontier = list(found)
        while frontier:
            nxt = []
            for a in frontier:
                for g, s in zip(gens, signs):
                    m = g @ a.matrix
                    sign = s * a.sign
                    hit = next((e for e in found if np.max(np.abs(e.matrix - m)) <= CLOSURE_TOL), None)
                    if hit is None:
                        e = GroupElement(m, sign)
                        found.append(e)
                        nxt.append(e)
                        if len(found) > MAX_ORDER:
                            raise ValueError(f"group closure exceeds {MAX_ORDER} elements")
                    elif hit.sign != sign:
                        raise ValueError("signs do not define a homomorphism")
            frontier = nxt
        return cls(found, **kw)

    def _check(self):
        for a in self.elements:
            for b in self.elements:
                m = a.matrix @ b.matrix
                hit = self._find(m)
                if hit is None:
                    raise ValueError("element list is not closed under composition")
                if hit.sign != a.sign * b.sign:
                    raise ValueError("phi is not a homomorphism")
        ident = self._find(np.eye(self.ndim))
        if ident is None or ident.sign != 1:
            raise ValueError("identity must be present with sign +1")

    def _find(self, m):
        for e in self.elements:
            if np.max(np.abs(e.matrix - m)) <= CLOSURE_TOL:
                return e
        return None

    # basic structure
    def __len__(self):
        return len(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def is_epimorphism(self) -> bool:
        return any(e.sign < 0 for e in self.elements)

    @property
    def is_grid_exact(self) -> bool:
        return all(e.is_grid_exact for e in self.elements)

    def kernel(self) -> "SymmetryGroup":
        """``G = ker phi`` as a group with trivial sign."""
        return SymmetryGroup(
            [GroupElement(e.matrix, 1) for e in self.elements if e.sign > 0],
            name=f"ker({self.name})", exact_ell=self._exact_ell_kernel,
            exact_ell_kernel=self._exact_ell_kernel,
        )

    def odd_elements(self) -> list[GroupElement]:
        return [e for e in self.elements if e.sign < 0]

    # orbits
    def orbit(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if np.linalg.norm(z) == 0:
            raise ValueError("orbit of the origin is not considered")
        return _dedup(np.array([e.matrix @ z for e in self.elements]))

    def signed_orbit(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Distinct orbit points ``g z`` with ``phi(g)``.

        Raises if two elements with different signs send ``z`` to the same
        point (the signed sum over the orbit is then undefined).
        """
        z = np.asarray(z, dtype=float)
        pts: list[np.ndarray] = []
        sg: list[int] = []
        for e in self.elements:
            q = e.matrix @ z
            k = next((i for i, p in enumerate(pts) if np.linalg.norm(p - q) <= ORBIT_TOL), None)
            if k is None:
                pts.append(q)
                sg.append(e.sign)
            elif sg[k] != e.sign:
                raise ValueError("signed orbit sum undefined: z lies in Sigma_0")
        return np.array(pts), np.array(sg)

    def orbit_size(self, z) -> int:
        return len(self.orbit(z))

    def mu(self, z) -> float:
        """Minimal distance between distinct orbit points, ``2|z|`` for a fixed point."""
        pts = self.orbit(z)
        if len(pts) == 1:
            return 2.0 * float(np.linalg.norm(z))
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        return float(np.min(d[~np.eye(len(pts), dtype=bool)]))

    def _candidate_points(self, n_sample: int) -> np.ndarray:
        rng = np.random.default_rng(12345)
        cands = [sphere_sample(self.ndim, n_sample)]
        subspaces = []
        for e in self.elements:
            if e.is_identity:
                continue
            subspaces.append(_fixed_space(e.matrix))
        for a, b in combinations(range(len(subspaces)), 2):
            if len(subspaces) > 200:
                break
            subspaces.append(_intersect(subspaces[a], subspaces[b]))
        for basis in subspaces:
            if basis.shape[1] == 0:
                continue
            v = basis @ rng.standard_normal(basis.shape[1])
            cands.append((v / np.linalg.norm(v))[None, :])
        return np.concatenate(cands)

    def ell_sampled(self, n_sample: int | None = None) -> int:
        if n_sample is None:
            n_sample = 10_000 if self.ndim == 3 else 2_000
        pts = self._candidate_points(n_sample)
        best = self.order
        for z in pts:
            # orbit sizes divide the order; stop early at the obvious minimum
            best = min(best, self.orbit_size(z))
            if best == 1:
                break
        return best

    def ell(self) -> int:
        """Minimal orbit cardinality over nonzero points."""
        if self._exact_ell is not None:
            return self._exact_ell
        return self.ell_sampled()

    @property
    def ell_certified(self) -> bool:
        return self._exact_ell is not None

    def in_sigma(self, z) -> bool:
        return self.orbit_size(z) == self.ell()

    def sigma_flags(self, z) -> tuple[bool, bool]:
        """``(z in Sigma, z in Sigma_0)`` for a unit vector ``z``.

        ``Sigma_0`` is reported empty when phi is not onto.
        """
        z = np.asarray(z, dtype=float)
        if abs(np.linalg.norm(z) - 1.0) > 1e-12:
            raise ValueError("sigma_flags expects a unit vector")
        in_sigma = self.in_sigma(z)
        if not in_sigma or not self.is_epimorphism:
            return in_sigma, False
        gamma = self.odd_elements()[0]
        k = self.kernel()
        a = k.orbit(z)
        b = k.orbit(gamma.matrix @ z)
        return True, _same_set(a, b)

    def check_Z0(self, Z, a0: float) -> bool:
        """``dist(gamma z, G z) >= a0 mu(G z)`` for all sampled z and odd gamma."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.size == 0:
            raise ValueError("Z must be nonempty")
        if not a0 > 1:
            raise ValueError("a0 must exceed 1")
        if not self.is_epimorphism:
            raise ValueError("(Z0) needs phi onto Z/2")
        k = self.kernel()
        for z in Z:
            gz = k.orbit(z)
            m = k.mu(z)
            for g in self.odd_elements():
                d = np.min(np.linalg.norm(gz - g.matrix @ z, axis=1))
                if d < a0 * m:
                    return False
        return True

    # fields
    def act(self, grid: Grid, element: GroupElement, u) -> np.ndarray:
        """``(g u)(x) = phi(g) u(g^{-1} x)`` on the grid."""
        ginv = element.matrix.T
        if element.is_grid_exact:
            return element.sign * u[_permuted_index(grid, ginv)]
        pts = grid.points() @ ginv.T
        return element.sign * interpolate(grid, u, pts).reshape(grid.shape)

    def equivariant_project(self, grid: Grid, u) -> np.ndarray:
        if grid.ndim != self.ndim:
            raise ValueError("group and grid dimensions differ")
        out = np.zeros(grid.shape)
        for e in self.elements:
            out += self.act(grid, e, u)
        return out / self.order

    def equivariance_error(self, grid: Grid, u) -> float:
        """``max_g ||g u - u||_inf / ||u||_inf``."""
        scale = float(np.max(np.abs(u))) or 1.0
        return max(float(np.max(np.abs(self.act(grid, e, u) - u))) for e in self.elements) / scale

    def __repr__(self):
        return f"SymmetryGroup({self.name!r}, order={self.order}, N={self.ndim})"


def _fixed_space(g: np.ndarray) -> np.ndarray:
    return null_space(g - np.eye(len(g)), rcond=1e-10)


def _intersect(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((a.shape[0], 0))
    ns = null_space(np.hstack([a, -b]), rcond=1e-10)
    if ns.shape[1] == 0:
        return np.zeros((a.shape[0], 0))
    return orth(a @ ns[: a.shape[1]])


def _same_set(a: np.ndarray, b: np.ndarray, tol: float = ORBIT_TOL) -> bool:
    if len(a) != len(b):
        return False
    return all(np.min(np.linalg.norm(b - p, axis=1)) <= tol for p in a)


_INDEX_CACHE: dict = {}


def _permuted_index(grid: Grid, p: np.ndarray) -> tuple[np.ndarray, ...]:
    key = (grid.ndim, grid.n_points, np.round(p).astype(int).tobytes())
    if key not in _INDEX_CACHE:
        m = grid.n_points
        k = np.indices(grid.shape).reshape(grid.ndim, -1) - m // 2
        y = np.round(p).astype(int) @ k
        idx = tuple(((y[a] + m // 2) % m).reshape(grid.shape) for a in range(grid.ndim))
        if len(_INDEX_CACHE) > 64:
            _INDEX_CACHE.clear()
        _INDEX_CACHE[key] = idx
    return _INDEX_CACHE[key]


# presets -----------------------------------------------------------------

def _rotation_blocks(n_planes: int, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    blk = np.array([[c, -s], [s, c]])
    return np.kron(np.eye(n_planes), blk)


def trivial(ndim: int) -> SymmetryGroup:
    return SymmetryGroup([GroupElement(np.eye(ndim), 1)], name="trivial", exact_ell=1, exact_ell_kernel=1)


def antipodal(ndim: int) -> SymmetryGroup:
    """``{I, -I}`` with ``phi = 1``."""
    return SymmetryGroup.from_generators([-np.eye(ndim)], [1], name="antipodal",
                                         exact_ell=2, exact_ell_kernel=2)


def reflection(ndim: int, k: int) -> SymmetryGroup:
    """Reflection through ``W = span(e_1..e_k)`` with ``phi(gamma) = -1``.

    ``k = 0`` gives ``-I`` with odd functions.
    """
    if not 0 <= k < ndim:
        raise ValueError(f"dim W must lie in [0, {ndim}), got {k}")
    g = np.diag([1.0] * k + [-1.0] * (ndim - k))
    return SymmetryGroup.from_generators([g], [-1], name=f"reflection {k}",
                                         exact_ell=1 if k else 2, exact_ell_kernel=1)


def cyclic(m: int, n: int) -> SymmetryGroup:
    """Cyclic group of order 2m on C^n generated by ``e^{i pi/m}``, ``phi(rho) = -1``."""
    if m < 1 or n < 1:
        raise ValueError("cyclic preset needs m, n >= 1")
    rho = _rotation_blocks(n, np.pi / m)
    return SymmetryGroup.from_generators([rho], [-1], name=f"cyclic {m} {n}",
                                         exact_ell=2 * m, exact_ell_kernel=m)


def example3(m: int, n: int) -> SymmetryGroup:
    """Group on ``C^n x C^n`` spanned by ``rho(y,z) = (e^{i pi/m} y, e^{i pi/m} z)``
    (sign +1) and ``gamma(y,z) = (-conj z, conj y)`` (sign -1).
    """
    if m < 3 or n < 1:
        raise ValueError("example3 preset needs m >= 3, n >= 1")
    rho = _rotation_blocks(2 * n, np.pi / m)
    dim = 4 * n
    gamma = np.zeros((dim, dim))
    conj = np.diag([1.0, -1.0])
    for j in range(n):
        y = slice(2 * j, 2 * j + 2)
        z = slice(2 * n + 2 * j, 2 * n + 2 * j + 2)
        gamma[y, z] = -conj
        gamma[z, y] = conj
    return SymmetryGroup.from_generators([rho, gamma], [1, -1], name=f"example3 {m} {n}",
                                         exact_ell=4 * m, exact_ell_kernel=2 * m)


def from_preset(spec: str, ndim: int) -> SymmetryGroup:
    """Parse ``antipodal | trivial | reflection k | cyclic m n | example3 m n``."""
    parts = spec.split()
    if not parts:
        raise ValueError("empty symmetry preset")
    name, args = parts[0], [int(a) for a in parts[1:]]
    if name == "trivial" and not args:
        return trivial(ndim)
    if name == "antipodal" and not args:
        return antipodal(ndim)
    if name == "reflection" and len(args) == 1:
        return reflection(ndim, args[0])
    if name == "cyclic" and len(args) == 2:
        g = cyclic(*args)
    elif name == "example3" and len(args) == 2:
        g = example3(*args)
    else:
        raise ValueError(f"unknown symmetry preset {spec!r}")
    if g.ndim != ndim:
        raise ValueError(f"preset {spec!r} acts on R^{g.ndim}, problem has N={ndim}")
    return g


def mu_bounds(group: SymmetryGroup, Z) -> tuple[float, float]:
    """``(inf, sup)`` of ``mu(K z)`` over the sample ``Z``."""
    vals = [group.mu(z) for z in np.atleast_2d(Z)]
    return min(vals), max(vals)


def sigma_sample(group: SymmetryGroup, n_sample: int = 2000) -> np.ndarray:
    """Sampled points of ``Sigma`` (unit vectors with minimal orbit)."""
    ell = group.ell()
    pts = group._candidate_points(n_sample)
    keep = [z for z in pts if group.orbit_size(z) == ell]
    return np.array(keep) if keep else np.zeros((0, group.ndim))
