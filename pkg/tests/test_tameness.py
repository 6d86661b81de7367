import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpptess import InvalidParameter, WindowTooSmall
from fpptess.directional import Isotropic, SymmetricAtoms
from fpptess.hyperplanes import PhtSample, passage_time, sample_pht
from fpptess.marks import Deterministic, Exponential
from fpptess.tameness import (
    GridField,
    compute_fields,
    compute_W,
    convex_meets_box,
    greedy_animal_max,
    is_lattice_animal,
)
from fpptess.tess_fpp import assign_marks
from fpptess.voronoi import sample_voronoi, window_for


@pytest.fixture(scope="module")
def tess():
    return sample_voronoi(1.0, window_for(1.0, 22.0), 22.0, seed=21)


def field(values, delta=1.0):
    v = np.asarray(values, dtype=float)
    return GridField(delta, (v.shape[0] - 1) // 2, v)


def test_gridfield_validation():
    with pytest.raises(InvalidParameter):
        GridField(1.0, 2, np.zeros((4, 4)))
    with pytest.raises(InvalidParameter):
        GridField(1.0, 0, np.array([[np.nan]]))
    f = field(np.arange(9).reshape(3, 3))
    assert f.at((-1, -1)) == 0 and f.at((1, 0)) == 7 and f.n_sites == 9


def test_convex_meets_box():
    tri = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
    assert convex_meets_box(tri, (0.5, 0.5), (0.8, 0.8))
    assert not convex_meets_box(tri, (1.2, 1.2), (3.0, 3.0))  # beyond hypotenuse
    assert convex_meets_box(tri, (1.0, 1.0), (3.0, 3.0))      # touches it
    assert not convex_meets_box(tri, (-3.0, -3.0), (-0.1, 5.0))


def test_y_counts_generators(tess):
    Y, _ = compute_fields(tess, 1.0, 10)
    assert np.all(Y.values >= 0) and np.all(Y.values == np.round(Y.values))
    g = tess.generators
    inside = np.all(np.abs(g) < 10.5, axis=1)
    assert Y.values.sum() == inside.sum()
    n = Y.n_sites
    assert abs(Y.values.mean() - 1.0) < 3 / math.sqrt(n)


def test_u_extremes(tess):
    _, U = compute_fields(tess, 5.0, 1)
    assert np.all(U.values == 0)
    _, U = compute_fields(tess, 0.05, 20)
    assert np.all(U.values == 1)
    _, U = compute_fields(tess, 1.0, 8)
    assert set(np.unique(U.values)) <= {0.0, 1.0}
    assert 0 < U.values.mean() < 1


def test_box_too_large(tess):
    with pytest.raises(WindowTooSmall):
        compute_fields(tess, 2.0, 10)
    with pytest.raises(InvalidParameter):
        compute_fields(tess, -1.0, 2)


def test_w_graph(tess):
    unit = assign_marks(tess, Deterministic(1.0), seed=0)
    _, U = compute_fields(tess, 1.0, 6)
    assert np.all(compute_W(unit, 1.0, 0.0, 6).values == 0)
    assert np.all(compute_W(unit, 1.0, 1e6, 6).values == 1)
    W = compute_W(unit, 1.0, 1.0, 6)
    assert np.all(W.values <= U.values)
    assert np.array_equal(W.values, U.values)  # zero crossings means one cell
    W2 = compute_W(unit, 1.0, 2.0, 6)
    assert np.all(W2.values >= W.values)
    ex = assign_marks(tess, Exponential(1.0), seed=3)
    lo, hi = compute_W(ex, 1.0, 0.3, 6), compute_W(ex, 1.0, 0.6, 6)
    assert np.all(lo.values <= hi.values)
    with pytest.raises(InvalidParameter):
        compute_W(unit, 1.0, -1.0, 6)
    with pytest.raises(InvalidParameter):
        compute_W(tess, 1.0, 1.0, 6)


def _w_pht_sampled(s, delta, rho, v, m=120):
    """Minimum crossing cost over sampled pairs (an upper bound on the true minimum)."""
    c = delta * np.asarray(v, dtype=float)
    q = np.linspace(-0.5, 0.5, m) * delta
    qx, qy = np.meshgrid(q, q)
    inner = np.column_stack([qx.ravel(), qy.ravel()]) + c
    e = np.linspace(-1.5, 1.5, 4 * m) * delta
    h = 1.5 * delta
    outer = np.vstack([np.column_stack([e, np.full_like(e, s_)]) for s_ in (-h, h)]
                      + [np.column_stack([np.full_like(e, s_), e]) for s_ in (-h, h)]) + c
    si = (inner @ s.u.T - s.r) > 0
    so = (outer @ s.u.T - s.r) > 0
    ki = np.unique(si, axis=0)
    ko = np.unique(so, axis=0)
    cost = (ki[:, None, :] != ko[None, :, :]).astype(float) @ s.marks
    return cost.min() < rho


def test_w_pht_against_sampling():
    s = sample_pht(2.0, Isotropic(2), 12.0, seed=5)
    W = compute_W(s, 1.0, 1.0, 3)
    assert np.all(compute_W(s, 1.0, 0.0, 3).values == 0)
    assert np.all(compute_W(s, 1.0, 1e9, 3).values == 1)
    agree = 0
    for i in range(-3, 4):
        for j in range(-3, 4):
            sampled = _w_pht_sampled(s, 1.0, 1.0, (i, j))
            if sampled:
                assert W.at((i, j)) == 1.0  # sampled cost bounds the true one from above
            agree += (W.at((i, j)) == 1.0) == sampled
    assert agree >= 47


def test_w_pht_enclosed_box():
    # four unit-mark lines x, y = +-0.6 enclose the central box
    u = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    phi = SymmetricAtoms([((1.0, 0.0), 1.0), ((0.0, 1.0), 1.0)])
    s = PhtSample(1.0, phi, 8.0, u, np.full(4, 0.6), np.ones(4))
    W = compute_W(s, 1.0, 1.0, 1)
    assert W.at((0, 0)) == 0.0
    assert W.at((1, 0)) == 1.0 and W.at((-1, 1)) == 1.0
    assert compute_W(s, 1.0, 1.5, 1).at((0, 0)) == 1.0
    assert passage_time(s, [0.0, 0.0], [3.0, 0.0]) == 1.0


def test_greedy_constant_and_spike():
    for c in (0.0, 0.3, 2.0):
        st_ = greedy_animal_max(field(np.full((9, 9), c)), 10, n_restarts=3)
        assert st_.greedy_max_avg == pytest.approx(c, abs=1e-15)
    spike = np.zeros((9, 9))
    spike[4, 4] = 1.0
    st_ = greedy_animal_max(field(spike), 4, n_restarts=5)
    assert st_.greedy_max_avg == 0.25
    assert st_.is_lower_bound and is_lattice_animal(st_.best_animal, 4)


def test_greedy_bernoulli_exceeds_p():
    rng = np.random.default_rng(0)
    p = 0.3
    vals = (rng.random((41, 41)) < p).astype(float)
    st_ = greedy_animal_max(field(vals), 50, n_restarts=20, seed=1)
    assert st_.greedy_max_avg > p
    assert len(st_.best_animal) == 50 and is_lattice_animal(st_.best_animal, 20)


def test_greedy_validation():
    f = field(np.zeros((3, 3)))
    with pytest.raises(InvalidParameter):
        greedy_animal_max(f, 10)
    with pytest.raises(InvalidParameter):
        greedy_animal_max(f, 2, n_restarts=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 15), st.integers(0, 80), st.floats(0.0, 1.0))
def test_greedy_monotone_in_values(seed, n, site, bump):
    rng = np.random.default_rng(seed)
    vals = rng.random((9, 9))
    base = greedy_animal_max(field(vals), n, n_restarts=4, seed=seed)
    raised = vals.copy()
    raised.flat[site] += bump
    up = greedy_animal_max(field(raised), n, n_restarts=4, seed=seed,
                           seed_animals=[base.best_animal])
    assert up.greedy_max_avg >= base.greedy_max_avg


def test_is_lattice_animal():
    assert is_lattice_animal([(0, 0), (0, 1), (1, 1)])
    assert not is_lattice_animal([(0, 0), (1, 1)])
    assert not is_lattice_animal([(1, 0), (2, 0)])
    assert not is_lattice_animal([(0, 0), (0, 0)])
    assert not is_lattice_animal([(0, 0), (0, 1), (0, 2)], box=1)
