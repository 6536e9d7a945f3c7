import numpy as np
import pytest

from choquard import energy as en
from choquard import solver as so
from choquard import symmetry as sy
from choquard.grid import ball_complement_mask, box_complement_mask
from choquard.potential import Potential


def exterior2(gs, group, V=None):
    g = gs.grid
    return en.Problem(g, 1.0, 2.0, potential=V or Potential.exp_well(0.5, 1.0),
                      mask=ball_complement_mask(g, 1.0), group=group)


@pytest.fixture(scope="module")
def odd2(gs2):
    pb = exterior2(gs2, sy.reflection(2, 0))
    return pb, so.EquivariantSolver(pb, gs2, R=3.0).fit()


def test_free_problem_recovers_ground_state(gs2):
    pb = en.Problem(gs2.grid, 1.0, 2.0)
    rep = so.minimize(pb, np.exp(-gs2.grid.radius() ** 2 / 3), gs2, tol=1e-9)
    assert rep.converged
    assert abs(rep.energy - gs2.energy) <= 1e-6 * gs2.energy
    assert rep.ell == 1 and rep.max_u > 0


def test_sign_flip_for_positive_solutions(gs2):
    pb = en.Problem(gs2.grid, 1.0, 2.0)
    rep = so.minimize(pb, -np.exp(-gs2.grid.radius() ** 2 / 3), gs2, tol=1e-9)
    assert rep.max_u > 0 and so.certify(rep, gs2).positive


def test_odd_solution_certificate(odd2, gs2):
    pb, est = odd2
    rep, cert = est.report_, est.certificate_
    assert cert.converged and cert.equivariant and cert.sign_changing and not cert.positive
    assert rep.equivariance_error <= 1e-8
    assert rep.nehari_defect <= 1e-10
    assert rep.energy <= rep.initial_energy
    assert rep.stabilized
    # the pair (u, -u)
    assert abs(en.J_V(pb, -rep.u).J - rep.energy) <= 1e-12 * rep.energy
    assert abs(en.energy_on_nehari(pb, -rep.u) - en.energy_on_nehari(pb, rep.u)) <= 1e-12 * rep.energy


def test_monotone_trace(odd2):
    energies = [row[1] for row in odd2[1].report_.trace]
    assert all(b <= a + 1e-14 * abs(a) for a, b in zip(energies, energies[1:]))


def test_report_fields(odd2, gs2):
    rep = odd2[1].report_
    d = rep.as_dict()
    assert "u" not in d and "trace" not in d
    assert d["threshold"] == pytest.approx(d["ell"] * gs2.energy)
    assert d["margin"] == pytest.approx(d["threshold"] - d["level"])
    assert abs(d["lagrange_multiplier"]) <= 1e-6


def test_iteration_cap_reports_unconverged(gs2):
    pb = exterior2(gs2, sy.antipodal(2))
    rep = so.EquivariantSolver(pb, gs2, R=3.0, max_iter=2).fit().report_
    assert not rep.converged and rep.iterations == 2
    assert not so.certify(rep, gs2).converged


def test_stabilizer():
    from choquard.grid import Grid
    g = Grid(3, 16, 4.0)
    pb = en.Problem(g, 1.0, 2.0, potential=Potential.exp_well(0.5, 1.0), group=sy.antipodal(3))
    stab = so.stabilizer(pb, [1.0, 0.0, 0.0])
    assert stab.order == 8
    assert so.stabilizer(pb, [0.6, 0.8, 0.0]).order == 4
    assert so.stabilizer(pb, np.ones(3) / np.sqrt(3)) is None
    assert so.stabilizer(en.Problem(g, 1.0, 2.0), [1.0, 0.0, 0.0]) is None
    # a potential without the reflection symmetry blocks the enlargement
    x = g.coords()
    vals = 0.1 * x[0] * x[1] * np.exp(-2 * g.radius() ** 2)
    lop = en.Problem(g, 1.0, 2.0, potential=Potential.sampled(g, vals), group=sy.antipodal(3))
    assert so.stabilizer(lop, [1.0, 0.0, 0.0]) is None


def test_input_validation(gs2):
    g = gs2.grid
    pb = exterior2(gs2, sy.reflection(2, 0))
    with pytest.raises(ValueError, match="vanishes"):
        so.minimize(pb, np.exp(-g.radius() ** 2), gs2)
    with pytest.raises(ValueError):
        so.EquivariantSolver().fit()
    with pytest.raises(ValueError):
        so.EquivariantSolver(pb).fit()
    with pytest.raises(ValueError):
        so.initial_field(pb, gs2, "gauss")
    assert so.check_commute(en.Problem(g, 1.0, 2.0)) == 0.0
    lopsided = box_complement_mask(g, 1.0) & (g.coords()[0] > -3.0)
    with pytest.raises(ValueError):
        en.Problem(g, 1.0, 2.0, mask=lopsided, group=sy.antipodal(2))
