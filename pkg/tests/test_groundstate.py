import numpy as np
import pytest
from scipy.integrate import quad

from choquard import groundstate as gsm
from choquard.grid import Grid
from choquard.groundstate import DecayLawFit, GroundStateSolver
from choquard.shooting import shoot_ground_state

from oracles import C_INF_SHOOTING


def test_shooting_matches_frozen_value():
    assert shoot_ground_state().energy == pytest.approx(C_INF_SHOOTING, rel=1e-8)


def test_small_ground_state_certificates(gs2):
    cert = gs2.certificates()
    assert cert["centered"]
    assert cert["nehari_defect"] <= 1e-10
    assert cert["energy_identity"] <= 1e-10
    assert cert["tangent_residual"] <= 1e-8
    assert cert["min_over_max"] > -1e-8
    assert gs2.omega.shape == gs2.grid.shape


def test_ground_state_is_radial(gs3_64):
    assert gs3_64.radial_spread() <= 1e-3
    r, w = gs3_64.profile()
    assert r[0] == 0.0 and w[0] == np.max(gs3_64.omega)
    # monotone decay until the noise floor
    head = w[r < 10.0]
    assert np.all(np.diff(head[::8]) < 0)


def test_seeds_agree(gs2):
    est = GroundStateSolver(ndim=2, half_width=8.0, n_points=32)
    for seed in (1, 2):
        e = est.fit(seed).energy_
        assert abs(e - gs2.energy) <= 1e-6 * gs2.energy


def test_unsymmetrized_solve_agrees(gs2):
    est = GroundStateSolver(ndim=2, half_width=8.0, n_points=32, symmetrize=False).fit()
    assert abs(est.energy_ - gs2.energy) <= 1e-6 * gs2.energy


def test_sklearn_params():
    est = GroundStateSolver(ndim=2, n_points=16)
    assert est.get_params()["n_points"] == 16
    est.set_params(half_width=5.0)
    assert est.grid.half_width == 5.0


def test_Q_integral():
    assert gsm.Q_integral(2.0, 2.0, 1.0) == 0.0
    # alpha = 2: Q(t) = sqrt(t^2 - d^2) - d arccos(d / t)
    t, d = 5.0, 1.5
    exact = np.sqrt(t * t - d * d) - d * np.arccos(d / t)
    assert gsm.Q_integral(t, d, 2.0) == pytest.approx(exact, rel=1e-10)
    ts = np.array([9.0, 4.0, 6.5])
    vals = gsm.Q_values(ts, 3.5, 1.0)
    for t, v in zip(ts, vals):
        assert v == pytest.approx(quad(lambda s: np.sqrt(1 - 3.5 / s), 3.5, t)[0], rel=1e-9)
    with pytest.raises(ValueError):
        gsm.Q_integral(1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        gsm.Q_values([1.0], 2.0, 1.0)


def test_Q_bracketed_by_linear_bounds():
    d = gsm.delta_of(C_INF_SHOOTING, 1.0)
    ts = np.linspace(d + 1, 40, 30)
    q = gsm.Q_values(ts, d, 1.0)
    assert np.all(q <= ts - d)
    assert np.all(np.diff(ts - q) > 0)


def test_decay_fit_synthetic():
    r = np.linspace(6, 12, 200)
    w = 3.0 * np.exp(-1.3 * r) / r
    est = DecayLawFit(model="exponential", ndim=3).fit(r, w)
    assert est.slope_ == pytest.approx(1.3, rel=1e-12)
    assert est.misfit_ <= 1e-12
    assert np.allclose(est.predict(r), w, rtol=1e-10)
    d = 3.5
    w = np.exp(-gsm.Q_values(r, d, 1.0)) / r
    ph = DecayLawFit(model="phase", ndim=3, delta=d).fit(r, w)
    assert ph.slope_ == pytest.approx(1.0, rel=1e-10)
    # the exponential law misreads the phase profile
    assert DecayLawFit(model="exponential", ndim=3).fit(r, w).slope_ < 0.95


def test_decay_fit_errors(gs2):
    with pytest.raises(ValueError):
        DecayLawFit(model="phase").fit([1.0, 2.0], [1.0, 0.5])
    with pytest.raises(ValueError):
        DecayLawFit().fit([1.0, 2.0], [1.0, -0.5])
    with pytest.raises(ValueError):
        DecayLawFit(model="power").fit([1.0, 2.0], [1.0, 0.5])
    with pytest.raises(ValueError, match="inside"):
        gsm.fit_decay(gs2, (6.0, 12.0))


def test_interaction_symmetry(gs3_64):
    z = np.array([2.0, 1.0, 0.0])
    a, b = gsm.I_interaction(gs3_64, z), gsm.I_interaction(gs3_64, -z)
    assert a > 0 and abs(a - b) <= 1e-10 * a
    # I(0) is the Nehari identity
    assert gsm.I_interaction(gs3_64, np.zeros(3)) == pytest.approx(gs3_64.D, rel=1e-12)
    assert gsm.overlap(gs3_64, 2 * z) < gsm.overlap(gs3_64, z)
    with pytest.raises(ValueError, match="L/2"):
        gsm.I_interaction(gs3_64, [9.0, 0.0, 0.0])
    assert gsm.I_interaction(gs3_64, [9.0, 0.0, 0.0], strict=False) > 0


def test_perturbation_and_compact_moment(gs3_64):
    g = gs3_64.grid
    bump = np.exp(-2.0 * g.radius())
    z = np.array([3.0, 0.0, 0.0])
    a = gsm.A_perturbation(gs3_64, bump - 0.5, z)
    assert a == pytest.approx(gsm.A_perturbation(gs3_64, np.maximum(bump - 0.5, 0), z), rel=1e-15)
    ball = (g.radius() <= 1.0).astype(float)
    assert gsm.compact_moment(gs3_64, ball, z, 2.0) > gsm.compact_moment(gs3_64, ball, 2 * z, 2.0) > 0
    with pytest.raises(ValueError):
        gsm.compact_moment(gs3_64, ball, z, 1.0)


def test_weighted():
    out = gsm.weighted([1.0, 2.0], [1.0, 4.0], 0.5, 3)
    assert np.allclose(out, [np.exp(0.5), 2 * 4 * np.exp(2.0)])


def test_seed_field_validation():
    g = Grid(2, 16, 4.0)
    with pytest.raises(ValueError):
        GroundStateSolver(ndim=2, n_points=16, half_width=4.0).fit(np.zeros((8, 8)))
    u = gsm._seed_field(g, 3, 1.0)
    assert np.all(u > 0)
