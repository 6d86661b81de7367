import math

import numpy as np
import pytest

from fpptess import CensoredResult, InvalidParameter
from fpptess.ergodic import (
    FUNCTIONALS,
    CellFunctional,
    ErgodicSeries,
    ball_average,
    ball_growth_series,
    cell_intensity_estimate,
    get_functional,
    palm_oracle,
    square_grid_tessellation,
    wiener_average,
    zero_cell,
)
from fpptess.voronoi import build_voronoi, graph_ball, sample_voronoi, window_for


@pytest.fixture(scope="module")
def tess():
    return sample_voronoi(1.0, window_for(1.0, 20.0), 20.0, seed=3)


def test_square_grid_mock_is_exact():
    t = square_grid_tessellation(half=8)
    z = zero_cell(t)
    assert t.areas[z] == pytest.approx(1.0, abs=1e-12)
    ball = graph_ball(t, z, 3, boundary_mask=~t.inside)
    assert ball.size == 25  # l1 ball of radius 3 in Z^2
    assert ball_average(t, ball, FUNCTIONALS["area"]) == pytest.approx(1.0, abs=1e-12)
    assert ball_average(t, ball, FUNCTIONALS["neighbors"]) == 4.0
    assert wiener_average(t, 3.0, FUNCTIONALS["area"]) == pytest.approx(1.0, abs=1e-12)


def test_constant_functional_is_one(tess):
    z = zero_cell(tess)
    for n in (0, 2, 5):
        ball = graph_ball(tess, z, n, boundary_mask=~tess.inside)
        assert ball_average(tess, ball, FUNCTIONALS["constant"]) == 1.0


def test_ball_average_censored(tess):
    ball = graph_ball(tess, zero_cell(tess), 60, boundary_mask=~tess.inside)
    assert ball.touched_boundary
    with pytest.raises(CensoredResult):
        ball_average(tess, ball, FUNCTIONALS["area"])


def test_functional_registry():
    assert set(FUNCTIONALS) == {"constant", "area", "perimeter", "neighbors"}
    with pytest.raises(InvalidParameter):
        get_functional("volume")


def test_functionals_nonnegative(tess):
    ids = np.nonzero(tess.inside)[0]
    for f in FUNCTIONALS.values():
        assert np.all(f(tess, ids) >= 0)


def test_translation_invariance():
    rng = np.random.default_rng(11)
    pts = rng.uniform(-25, 25, size=(2500, 2))
    shift = np.array([0.37, -0.21])
    a = pts[np.hypot(*pts.T) <= 20.0]
    b = pts + shift
    keep_b = np.hypot(*b.T) <= 20.0
    b = b[keep_b]
    ta = build_voronoi(a, 20.0, 8.0, require_determined=False)
    tb = build_voronoi(b, 20.0, 8.0, require_determined=False)
    # match cells by generator
    index_b = {tuple(np.round(p - shift, 9)): i for i, p in enumerate(b)}
    matched = 0
    for i in np.nonzero(ta.inside)[0]:
        j = index_b.get(tuple(np.round(a[i], 9)))
        if j is None or not tb.inside[j]:
            continue
        matched += 1
        for f in FUNCTIONALS.values():
            assert f(ta, [i])[0] == pytest.approx(f(tb, [j])[0], rel=1e-9)
    assert matched > 100


def test_wiener_constant_is_one(tess):
    assert wiener_average(tess, 10.0, FUNCTIONALS["constant"]) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(InvalidParameter):
        wiener_average(tess, 25.0, FUNCTIONALS["constant"])


def test_wiener_matches_palm_weighting():
    # uniform points see cells with area bias: mean of 1/area(Z_x) is lam
    inv_area = CellFunctional("inv_area", lambda t, ids: 1.0 / t.areas[ids])
    vals = []
    for s in range(30):
        t = sample_voronoi(1.0, window_for(1.0, 12.0), 12.0, seed=100 + s)
        vals.append(wiener_average(t, 10.0, inv_area))
    m, se = np.mean(vals), np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(m - 1.0) < 3 * se + 1e-3
    # area-weighted area equals lam * E0[area^2]
    sq = CellFunctional("area_sq", lambda t, ids: t.areas[ids] ** 2)
    palm = palm_oracle(1.0, n_seeds=200, f=sq, seed=5, box_side=4.0)
    w = []
    for s in range(30):
        t = sample_voronoi(1.0, window_for(1.0, 12.0), 12.0, seed=200 + s)
        w.append(wiener_average(t, 10.0, FUNCTIONALS["area"]))
    wm, wse = np.mean(w), np.std(w, ddof=1) / math.sqrt(len(w))
    assert abs(wm - palm.mean) < 3 * math.hypot(wse, palm.stderr)


def test_cell_intensity_and_palm_area():
    inten = cell_intensity_estimate(1.0, n_seeds=400, seed=1)
    assert inten.n_censored <= 1
    assert abs(inten.mean - 1.0) < 3 * inten.stderr
    palm = palm_oracle(1.0, n_seeds=200, f=FUNCTIONALS["area"], seed=2)
    assert abs(palm.mean - 1.0) < 3 * palm.stderr
    assert palm_oracle(1.0, n_seeds=20, seed=3).mean == 1.0
    assert inten.mean * palm.mean == pytest.approx(1.0, abs=0.1)


def test_palm_scaling():
    palm = palm_oracle(4.0, n_seeds=100, f=FUNCTIONALS["area"], seed=4, box_side=0.5)
    assert abs(palm.mean - 0.25) < 3 * palm.stderr


def test_invalid_parameters():
    with pytest.raises(InvalidParameter):
        cell_intensity_estimate(0.0)
    with pytest.raises(InvalidParameter):
        palm_oracle(1.0, R=1.0)
    with pytest.raises(InvalidParameter):
        ball_growth_series(1.0, [-1, 3], 2)


def test_ball_growth_series_properties():
    ser = ball_growth_series(1.0, [5, 10, 15], 12, seed=9)
    assert np.all(np.diff(ser.ball_sizes, axis=1) >= 0)
    assert np.all(np.diff(ser.ball_areas, axis=1) > 0)
    assert not ser.censored.any()
    est = ser.summary(2, ser.ratio())
    assert abs(est.mean - 1.0) < 0.1
    nb = ser.summary(2, ser.averages["neighbors"])
    assert abs(nb.mean - 6.0) < 0.2


def test_thread_count_does_not_change_results():
    a = ball_growth_series(1.0, [4, 8], 6, seed=2, threads=1)
    b = ball_growth_series(1.0, [4, 8], 6, seed=2, threads=3)
    assert np.array_equal(a.ball_sizes, b.ball_sizes)
    assert np.array_equal(a.ball_areas, b.ball_areas)
    for name in a.averages:
        assert np.array_equal(a.averages[name], b.averages[name])


def test_extrapolation_removes_inverse_n_term():
    n = np.array([10, 20])
    vals = 6.0 + 0.5 / n[None, :] + np.array([[0.0], [0.1], [-0.1]])
    ser = ErgodicSeries(1.0, n, [0, 1, 2], np.ones((3, 2)), np.ones((3, 2)), {},
                        np.zeros((3, 2), dtype=bool))
    est = ser.extrapolated(vals, 0, 1)
    assert est.mean == pytest.approx(6.0, abs=1e-12)
    assert est.stderr == pytest.approx(0.1 / math.sqrt(3), rel=1e-12)
    with pytest.raises(InvalidParameter):
        ser.extrapolated(vals, 1, 0)
