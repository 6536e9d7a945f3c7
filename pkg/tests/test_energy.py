import numpy as np
import pytest

from choquard import energy as en
from choquard import grid as gf
from choquard import symmetry as sy
from choquard.grid import Grid, ball_complement_mask
from choquard.potential import Potential

from conftest import random_field, small_problem
from oracles import brute_D, central_difference


def test_norm_zero_definition_and_scaling(rng):
    pb = small_problem()
    u = random_field(pb.grid, rng)
    assert en.norm_V_sq(pb, np.zeros(pb.grid.shape)) == 0.0
    plain = gf.gradient_sq_integral(pb.grid, u) + gf.integrate(pb.grid, u * u)
    assert abs(en.norm_V_sq(pb, u) - plain) <= 1e-12 * plain
    assert abs(en.norm_V_sq(pb, 2 * u) - 4 * plain) <= 1e-12 * 4 * plain


def test_inner_product_is_symmetric(rng):
    pb = small_problem(potential=Potential.exp_well(0.5, 1.0))
    u, v = random_field(pb.grid, rng), random_field(pb.grid, rng)
    assert abs(en.inner_V(pb, u, v) - en.inner_V(pb, v, u)) <= 1e-12 * en.norm_V_sq(pb, u)
    assert abs(en.inner_V(pb, u, u) - en.norm_V_sq(pb, u)) <= 1e-12 * en.norm_V_sq(pb, u)


def test_J_components(rng):
    pb = en.Problem(Grid(3, 8, 2.0), 1.0, 2.0)
    assert en.J_V(pb, np.zeros(pb.grid.shape)).J == 0.0
    u = random_field(pb.grid, rng)
    br = en.J_V(pb, u)
    d = brute_D(3, 8, 2.0, 1.0, u, 2.0)
    ref = 0.5 * en.norm_V_sq(pb, u) - d / 4
    assert abs(br.J - ref) <= 1e-12 * abs(ref) + 1e-12 * d


def test_J_on_nehari(rng):
    pb = small_problem(p=2.5)
    u = en.nehari_project(pb, random_field(pb.grid, rng))
    br = en.J_V(pb, u)
    assert abs(br.J - (pb.p - 1) / (2 * pb.p) * br.D) <= 1e-12 * br.D


@pytest.mark.parametrize("p", [2.0, 2.5])
def test_residual_finite_difference(p, rng):
    pb = small_problem(p=p, potential=Potential.exp_well(0.5, 1.0))
    assert not np.any(en.residual(pb, np.zeros(pb.grid.shape)))
    u, v = random_field(pb.grid, rng), random_field(pb.grid, rng)
    eps = 1e-6 * np.linalg.norm(u) / np.linalg.norm(v)
    fd = central_difference(lambda w: en.J_V(pb, w).J, u, v, eps)
    an = gf.integrate(pb.grid, en.residual(pb, u) * v)
    assert abs(an - fd) <= 1e-5 * abs(fd)


def test_residual_with_mask_tests_against_admissible_directions(rng):
    g = Grid(2, 16, 4.0)
    pb = en.Problem(g, 1.0, 2.0, mask=ball_complement_mask(g, 1.0))
    u = en.mask(pb, random_field(g, rng))
    v = en.mask(pb, random_field(g, rng))
    eps = 1e-6 * np.linalg.norm(u) / np.linalg.norm(v)
    fd = central_difference(lambda w: en.J_V(pb, w).J, u, v, eps)
    an = gf.integrate(g, en.residual(pb, u) * v)
    assert abs(an - fd) <= 1e-5 * abs(fd)


def test_precondition_eigenmode_and_round_trip(rng):
    L = 4.0
    pb = small_problem(L=L)
    x1 = pb.grid.coords()[0]
    mode = np.broadcast_to(np.sin(np.pi * x1 / L), pb.grid.shape)
    scaled = en.precondition(pb, mode)
    assert np.max(np.abs(scaled - mode / ((np.pi / L) ** 2 + 1))) <= 1e-12
    assert not np.any(en.precondition(pb, np.zeros(pb.grid.shape)))
    r = rng.standard_normal(pb.grid.shape)
    assert np.max(np.abs(gf.helmholtz(pb.grid, en.precondition(pb, r)) - r)) <= 1e-10


def test_riesz_map_solves_masked_operator(rng):
    g = Grid(2, 32, 6.0)
    pb = en.Problem(g, 1.0, 2.0, potential=Potential.exp_well(0.5, 1.0), mask=ball_complement_mask(g, 1.0))
    r = en.mask(pb, random_field(g, rng))
    w = en.riesz_map(pb, r)
    assert not np.any(w[~pb.mask])
    assert np.max(np.abs(en.apply_operator(pb, w) - r)) <= 1e-9 * np.max(np.abs(r))


def test_nehari_projection_examples(rng):
    pb = small_problem()
    # p = 2, ||u||^2 = 4, D(u) = 16 gives t = 1/2, and ||u/2||^2 = 1 = D(u/2)
    assert en.nehari_factor(pb, None, 4.0, 16.0) == pytest.approx(0.5, rel=1e-15)
    u = random_field(pb.grid, rng)
    on = en.nehari_project(pb, u)
    assert abs(en.nehari_factor(pb, on) - 1.0) <= 1e-12
    assert np.max(np.abs(en.nehari_project(pb, 3.7 * u) - on)) <= 1e-12 * np.max(np.abs(on))
    with pytest.raises(ValueError):
        en.nehari_project(pb, np.zeros(pb.grid.shape))


def test_energy_on_nehari(rng):
    pb = small_problem(p=2.5)
    u = random_field(pb.grid, rng)
    e = en.energy_on_nehari(pb, u)
    assert abs(en.energy_on_nehari(pb, 5 * u) - e) <= 1e-12 * e
    assert abs(en.J_V(pb, en.nehari_project(pb, u)).J - e) <= 1e-12 * e
    on = en.nehari_project(pb, u)
    assert abs(e - (pb.p - 1) / (2 * pb.p) * en.norm_V_sq(pb, on)) <= 1e-12 * e


def test_nehari_defect_many_fields():
    pb = small_problem(m=16, L=4.0)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(300):
        v = en.nehari_project(pb, rng.standard_normal(pb.grid.shape))
        n = en.norm_V_sq(pb, v)
        worst = max(worst, abs(n - en.D(pb, v)) / n)
    assert worst <= 1e-12


def test_tangent_projection(rng):
    pb = small_problem()
    u = en.nehari_project(pb, random_field(pb.grid, rng))
    g = random_field(pb.grid, rng)
    t = en.tangent_project(pb, u, g)
    assert np.max(np.abs(en.tangent_project(pb, u, t) - t)) <= 1e-12 * np.max(np.abs(t))
    n = en.constraint_gradient(pb, u)
    assert np.max(np.abs(en.tangent_project(pb, u, n))) <= 1e-10 * np.max(np.abs(n))
    assert abs(en.inner_V(pb, t, n)) <= 1e-10 * np.sqrt(en.norm_V_sq(pb, t) * en.norm_V_sq(pb, n))
    with pytest.raises(ValueError):
        en.tangent_project(pb, 2 * u, g)


def test_group_invariance_of_functional(rng):
    g = Grid(3, 16, 4.0)
    grp = sy.reflection(3, 1)
    pb = en.Problem(g, 1.0, 2.0, potential=Potential.exp_well(0.5, 1.0), group=grp)
    u = random_field(g, rng)
    # the plane x = -L has no mirror node inside the box
    for ax in range(3):
        u[(slice(None),) * ax + (0,)] = 0.0
    for e in grp.elements:
        gu = grp.act(g, sy.GroupElement(e.matrix, 1), u)
        assert abs(en.J_V(pb, gu).J - en.J_V(pb, u).J) <= 1e-10 * abs(en.J_V(pb, u).J)
        assert abs(en.D(pb, gu) - en.D(pb, u)) <= 1e-10 * en.D(pb, u)


def test_problem_validation():
    g = Grid(3, 8, 2.0)
    with pytest.raises(ValueError):
        en.Problem(g, 3.0, 2.0)
    with pytest.raises(ValueError):
        en.Problem(g, 1.0, 5.0)
    with pytest.raises(ValueError, match="V0"):
        en.Problem(g, 1.0, 2.0, potential=Potential.exp_well(2.0, 1.0))
    with pytest.raises(ValueError, match="invariant"):
        en.Problem(g, 1.0, 2.0, mask=gf.box_complement_mask(g, 0.5) & (g.coords()[0] > -1.5), group=sy.antipodal(3))
