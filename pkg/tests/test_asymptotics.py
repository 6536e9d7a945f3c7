import numpy as np
import pytest

from choquard import asymptotics as asy
from choquard import energy as en
from choquard import groundstate as gsm
from choquard import testfn as tf
from choquard.grid import Grid
from choquard.potential import Potential

from oracles import C_INF_SHOOTING


def test_lattice_radii():
    g = Grid(3, 64, 16.0)
    assert asy.lattice_radii(g, 1.0, 3.0).tolist() == [1.0, 1.5, 2.0, 2.5, 3.0]
    assert asy.lattice_radii(g, 0.9, 4.1, 1.0).tolist() == [1.0, 2.0, 3.0, 4.0]
    with pytest.raises(ValueError):
        asy.lattice_radii(g, 1.0, 3.0, 0.3)


def test_trend_kinds():
    assert asy._trend("x", "decreasing", [1, 2, 3], [3.0, 2.0, 1.0]).passed
    assert not asy._trend("x", "decreasing", [1, 2, 3], [3.0, 3.0, 1.0]).passed
    assert asy._trend("x", "increasing", [1, 2], [1.0, 2.0]).passed
    assert not asy._trend("x", "increasing", [1, 2], [1.0, np.nan]).passed
    with pytest.raises(ValueError):
        asy._trend("x", "flat", [1, 2], [1.0, 1.0])
    row = asy._trend("name", "decreasing", [1, 2], [2.0, 1.0], "note").row()
    assert "PASS" in row and "note" in row


def test_q_bounds():
    d = gsm.delta_of(C_INF_SHOOTING, 1.0)
    assert asy.q_bounds(d, 1.0).passed
    assert asy.q_bounds(d, 2.0, nu=0.5).passed
    far = asy.q_bounds(d, 1.0, nu=0.99, ts=np.linspace(d, 400, 50))
    assert far.passed and np.min(far.values) >= 0


def test_shift_window_guard(gs3_64):
    with pytest.raises(ValueError, match="use L >= 32"):
        asy.overlap_trend(gs3_64)
    with pytest.raises(ValueError, match="3 radii"):
        asy.overlap_trend(gs3_64, radii=[2.0, 3.0])


def test_shift_trends_on_short_window(gs3_64):
    # far enough out for the a = 0.5 weight on the unit-rate profile at M = 64
    radii = [5.0, 6.0, 7.0, 8.0]
    ov = asy.overlap_trend(gs3_64, a=0.2, radii=radii)
    assert ov.passed and ov.values.size == 4
    assert asy.interaction_floor(gs3_64).passed


def test_decay_dichotomy_rates(gs3_64):
    lo, hi = asy.decay_dichotomy(gs3_64, window=(6.0, 10.0))
    assert lo.kind == "decreasing" and hi.kind == "increasing"
    assert lo.passed and hi.passed
    with pytest.raises(ValueError):
        asy.decay_dichotomy(gs3_64, window=(6.0, 14.0))


def test_perturbation_guard(gs3_64):
    with pytest.raises(ValueError, match="kappa > M"):
        asy.perturbation_trend(gs3_64, Potential.exp_bump(1.0, 1.2), radii=[4.0, 5.0, 6.0])


def test_cutoff_gap_trend(gs3_64):
    assert all(c.passed for c in asy.cutoff_gap_trend(gs3_64))


def test_lemma54_random_small():
    g = Grid(3, 32, 8.0)
    pb = en.Problem(g, 1.0, 2.0, potential=Potential.exp_well(0.5, 1.0))
    worst = asy.lemma54_random(pb, [tf.Cutoff("ball", eps=0.5, scale=3.0), tf.Cutoff("annulus", R0=1.0)],
                               n_fields=4)
    assert set(worst) == {"ball", "annulus"}
    assert all(min(v) >= -1e-10 for v in worst.values())
