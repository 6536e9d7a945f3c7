"""Property-based checks with hypothesis."""

import tempfile
from pathlib import Path

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from choquard import config as cf
from choquard import energy as en
from choquard import io
from choquard import lemma_lab as ll
from choquard.grid import Grid

from conftest import small_problem

nonneg = st.floats(0.0, 10.0, allow_nan=False)
exps = st.floats(2.0, 4.0)
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(st.lists(nonneg, min_size=1, max_size=6), exps)
def test_power_of_sum(a, p):
    lhs, rhs, scale = ll.l0_i(np.array([a]), p)
    assert lhs[0] - rhs[0] >= -1e-12 * max(scale[0], 1e-300)


@given(nonneg, nonneg, exps)
def test_difference(a, b, p):
    lhs, rhs, scale = ll.l0_ii(a, b, p)
    assert lhs - rhs >= -1e-12 * max(scale, 1e-300)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    *(st.lists(nonneg, min_size=n, max_size=n) for _ in range(4)))), exps)
def test_l1_inequalities(xs, p):
    a, at, b, bt = (np.array([x]) for x in xs)
    for lhs, rhs, scale in (ll.l1_product(a, b, p), ll.l1_difference(a, at, b, bt, p)):
        assert lhs[0] - rhs[0] >= -1e-12 * max(scale[0], 1e-300)


@given(finite)
def test_fmt_round_trips_floats(x):
    assert float(io.fmt(x)) == x


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.sampled_from([8, 16]), st.floats(0.5, 20.0), st.data())
def test_chqf_round_trip(ndim, m, L, data):
    if ndim == 3 and m == 16:
        m = 8
    g = Grid(ndim, m, L)
    u = data.draw(arrays(np.float64, g.shape, elements=finite))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "u.chqf"
        io.write_chqf(path, g, u)
        g2, v = io.read_chqf(path)
    assert g2.same_as(g) and np.array_equal(u, v)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.floats(0.1, 1.9), st.floats(1.0, 40.0), st.integers(0, 12),
       st.lists(st.floats(0.5, 9.0), min_size=1, max_size=4))
def test_config_round_trip(n, alpha, L, seed, radii):
    cfg = cf.Config()
    cfg.set("problem", "n", n)
    cfg.set("problem", "alpha", alpha)
    cfg.set("problem", "l", L)
    cfg.set("run", "seed", seed)
    cfg.set("run", "r_values", tuple(radii))
    back = cf.parse(cf.emit(cfg))
    assert back == cfg and back.values == cfg.values


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_nehari_projection_is_scale_invariant(scale, seed):
    pb = small_problem(m=8, L=2.0)
    u = np.random.default_rng(seed).standard_normal(pb.grid.shape)
    a = en.nehari_project(pb, u)
    b = en.nehari_project(pb, scale * u)
    assert np.max(np.abs(a - b)) <= 1e-11 * np.max(np.abs(a))
    n = en.norm_V_sq(pb, a)
    assert abs(n - en.D(pb, a)) <= 1e-12 * n
