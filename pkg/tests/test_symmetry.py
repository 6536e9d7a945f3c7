import numpy as np
import pytest

from choquard import symmetry as sy
from choquard.grid import Grid

from conftest import random_field

E1 = np.array([1.0, 0.0, 0.0])


def c4():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    return sy.SymmetryGroup.from_generators([rot], name="C4")


def test_orbits():
    assert sy.antipodal(3).orbit_size(E1) == 2
    assert c4().orbit_size([1.0, 0.0]) == 4
    refl = sy.reflection(3, 2)
    assert refl.orbit(np.array([0.3, -0.2, 0.0])).shape == (1, 3)
    with pytest.raises(ValueError):
        sy.antipodal(3).orbit(np.zeros(3))


def test_mu():
    assert sy.trivial(3).mu(E1) == 2.0
    assert sy.antipodal(3).mu(E1) == 2.0
    for m in (2, 3, 5):
        g = sy.cyclic(m, 2)
        z = np.random.default_rng(m).standard_normal(4)
        z /= np.linalg.norm(z)
        assert g.mu(z) == pytest.approx(abs(np.exp(1j * np.pi / m) - 1), abs=1e-12)


def test_ell():
    assert sy.antipodal(3).ell() == 2
    assert sy.reflection(3, 1).ell() == 1
    assert sy.cyclic(3, 1).ell() == 6
    # sampled value agrees with the certified one
    assert sy.cyclic(3, 1).ell_sampled() == 6
    assert sy.antipodal(3).ell_sampled() == 2
    assert sy.reflection(3, 1).ell_sampled() == 1


def test_ell_is_minimal_orbit_size():
    g = sy.example3(3, 1)
    for z in sy.sphere_sample(4, 200):
        assert g.ell() <= g.orbit_size(z)


def test_mu_bounds_bracket_samples():
    g = sy.cyclic(3, 2)
    Z = sy.sphere_sample(4, 100)
    lo, hi = sy.mu_bounds(g, Z)
    assert all(lo - 1e-15 <= g.mu(z) <= hi + 1e-15 for z in Z)


def test_sigma_flags():
    refl = sy.reflection(3, 1)
    in_sigma, in_sigma0 = refl.sigma_flags(np.array([0.0, 1.0, 0.0]))
    assert not in_sigma0
    assert refl.sigma_flags(E1) == (True, True)
    cyc = sy.cyclic(2, 1)
    for z in sy.sphere_sample(2, 20):
        assert cyc.sigma_flags(z) == (True, False)
    # phi not onto: Sigma_0 reported empty
    assert sy.antipodal(3).sigma_flags(E1) == (True, False)


def test_check_Z0():
    g = sy.example3(3, 1)
    assert g.check_Z0(sy.sphere_sample(4, 200), 1.01)
    refl = sy.reflection(3, 1)
    Z = np.array([[0.0, np.cos(t), np.sin(t)] for t in np.linspace(0, np.pi, 7)])
    assert not refl.check_Z0(Z, 1.5)
    assert not g.check_Z0(sy.sphere_sample(4, 50), 2.5)
    with pytest.raises(ValueError):
        g.check_Z0(np.zeros((0, 4)), 1.5)


def test_z0_implies_sigma_minus_sigma0():
    g = sy.example3(3, 1)
    Z = sy.sphere_sample(4, 100)
    assert g.check_Z0(Z, 1.01)
    for z in Z:
        assert g.sigma_flags(z) == (True, False)


@pytest.mark.parametrize("group", [sy.antipodal(3), sy.reflection(3, 0), sy.reflection(3, 1),
                                   sy.reflection(3, 2)])
def test_projection_grid_exact(group, rng):
    g = Grid(3, 16, 4.0)
    u = random_field(g, rng)
    pu = group.equivariant_project(g, u)
    assert group.equivariance_error(g, pu) <= 1e-12
    assert np.max(np.abs(group.equivariant_project(g, pu) - pu)) <= 1e-12 * np.max(np.abs(pu))
    v = random_field(g, rng)
    lin = group.equivariant_project(g, 2 * u - v) - (2 * pu - group.equivariant_project(g, v))
    assert np.max(np.abs(lin)) <= 1e-12 * np.max(np.abs(u))
    for e in group.elements:
        assert np.array_equal(group.act(g, e, pu), pu) or np.max(np.abs(group.act(g, e, pu) - pu)) <= 1e-15


def test_odd_projection_of_even_field():
    g = Grid(3, 16, 4.0)
    even = np.exp(-g.radius() ** 2)
    assert np.max(np.abs(sy.reflection(3, 2).equivariant_project(g, even))) <= 1e-15


def test_projection_interpolated_group(rng):
    g = Grid(2, 32, 6.0)
    grp = sy.cyclic(3, 1)
    u = random_field(g, rng)
    pu = grp.equivariant_project(g, u)
    lin = grp.equivariant_project(g, 3 * u) - 3 * pu
    assert np.max(np.abs(lin)) <= 1e-10 * np.max(np.abs(pu))
    assert not grp.is_grid_exact


def test_group_closure_and_presets():
    g = sy.example3(3, 1)
    assert g.order == 12 and g.ndim == 4 and g.is_epimorphism
    assert g.kernel().order == 6
    assert sy.from_preset("reflection 1", 3).order == 2
    assert sy.from_preset("cyclic 3 2", 4).order == 6
    with pytest.raises(ValueError):
        sy.from_preset("cyclic 3 2", 3)
    with pytest.raises(ValueError):
        sy.from_preset("dihedral 3", 2)
    with pytest.raises(ValueError):
        # phi must be a homomorphism: -I with conflicting signs
        sy.SymmetryGroup.from_generators([-np.eye(2), -np.eye(2)], [1, -1])
