import math

import numpy as np
import pytest

from fpptess import CensoredResult, InvalidParameter, WindowTooSmall
from fpptess.marks import Deterministic, Exponential
from fpptess.seeding import replicate_seeds
from fpptess.tess_fpp import (
    MarkedGraph,
    assign_marks,
    dijkstra,
    moment_diagnostic,
    tess_passage_time,
    time_constant_estimate,
)
from fpptess.voronoi import bfs_distances_simple, build_voronoi, cell_at, sample_voronoi


@pytest.fixture(scope="module")
def tess():
    return sample_voronoi(1.0, 30.0, 25.0, seed=8)


def test_assign_marks(tess):
    unit = assign_marks(tess, Deterministic(1.0), seed=1)
    assert np.all(unit.face_marks == 1.0)
    ex = assign_marks(tess, Exponential(1.0), seed=2)
    n = len(ex.face_marks)
    assert abs(ex.face_marks.mean() - 1.0) < 3 / math.sqrt(n)
    again = assign_marks(tess, Exponential(1.0), seed=2)
    assert np.array_equal(ex.face_marks, again.face_marks)
    with pytest.raises(InvalidParameter):
        MarkedGraph(tess, -ex.face_marks)


def test_same_cell_and_adjacent_cells(tess):
    mg = assign_marks(tess, Exponential(1.0), seed=3)
    g = tess.generators
    c = cell_at(tess, [0.0, 0.0])
    assert tess_passage_time(mg, g[c], g[c] + 1e-9) == 0.0
    marks = np.full(len(tess.faces), 7.0)
    nb = int(tess.graph.neighbors(c)[0])
    fid = tess.graph.face[tess.graph.ptr[c]]
    marks[fid] = 2.5
    assert tess_passage_time(MarkedGraph(tess, marks), g[c], g[nb]) == 2.5


def test_unit_marks_equal_hop_distance(tess):
    mg = assign_marks(tess, Deterministic(1.0), seed=0)
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, y = rng.uniform(-7, 7, (2, 2))
        a, b = cell_at(tess, x), cell_at(tess, y)
        hops = bfs_distances_simple(tess.graph, a).get(b)
        assert tess_passage_time(mg, x, y) == hops


def test_pseudometric_axioms(tess):
    mg = assign_marks(tess, Exponential(1.0), seed=5)
    rng = np.random.default_rng(1)
    for _ in range(50):
        x, y, z = rng.uniform(-6, 6, (3, 2))
        xy, yz, xz = (tess_passage_time(mg, *p) for p in ((x, y), (y, z), (x, z)))
        assert tess_passage_time(mg, y, x) == pytest.approx(xy, abs=1e-12)
        assert xz <= xy + yz + 1e-12
        assert tess_passage_time(mg, x, x) == 0.0


def test_mark_linearity(tess):
    mg = assign_marks(tess, Exponential(1.0), seed=6)
    doubled = mg.scaled(2.0)
    rng = np.random.default_rng(2)
    for _ in range(20):
        x, y = rng.uniform(-5, 5, (2, 2))
        assert tess_passage_time(doubled, x, y) == pytest.approx(2 * tess_passage_time(mg, x, y),
                                                                 rel=1e-14)


def test_censoring_near_margin(tess):
    mg = assign_marks(tess, Deterministic(1.0), seed=0)
    with pytest.raises(CensoredResult):
        tess_passage_time(mg, [-24.0, 0.0], [24.0, 0.0])
    assert tess_passage_time(mg, [-24.0, 0.0], [24.0, 0.0], strict=False) > 0
    res = dijkstra(mg, cell_at(tess, [0.0, 0.0]), [cell_at(tess, [3.0, 0.0])])
    assert not res.censored


def test_time_constant_estimate_behaviour():
    est = time_constant_estimate(1.0, Deterministic(1.0), [1.0, 0.0], [5.0, 10.0], 30, seed=4)
    assert np.all(est.stderrs > 0)
    assert np.all(est.n_censored == 0)
    assert np.all((est.means > 0.5) & (est.means < 1.2))
    twice = time_constant_estimate(1.0, Exponential(0.5), [1.0, 0.0], [5.0, 10.0], 30, seed=4,
                                   safe_factor=2.6, max_censor_fraction=0.2)
    once = time_constant_estimate(1.0, Exponential(1.0), [1.0, 0.0], [5.0, 10.0], 30, seed=4,
                                   safe_factor=2.6, max_censor_fraction=0.2)
    assert np.allclose(twice.means, 2 * once.means, rtol=1e-12)
    with pytest.raises(InvalidParameter):
        time_constant_estimate(1.0, Deterministic(1.0), [1.0, 0.0], [10.0, 5.0], 5)


def test_excess_censoring_raises():
    with pytest.raises(WindowTooSmall):
        time_constant_estimate(1.0, Deterministic(1.0), [1.0, 0.0], [10.0], 5, safe_factor=0.75)


def test_moment_diagnostic():
    # four generators, one per quadrant: the square meets exactly those four cells
    pts = np.array([[0.5, 0.5], [-0.5, 0.5], [0.5, -0.5], [-0.5, -0.5],
                    [30, 30], [-30, 30], [30, -30], [-30, -30]])
    t = build_voronoi(pts, 50.0, 2.0, require_determined=False)
    assert moment_diagnostic(t) == 4
    one = np.array([[0.0, 0.0], [40, 0], [-40, 0], [0, 40], [0, -40]])
    t1 = build_voronoi(one, 60.0, 3.0, require_determined=False)
    assert moment_diagnostic(t1) == 1
    for s in replicate_seeds(3, 20):
        t = sample_voronoi(1.0, 10.0, 5.0, seed=s)
        assert moment_diagnostic(t, 1.0) <= moment_diagnostic(t, 2.0)
    with pytest.raises(WindowTooSmall):
        moment_diagnostic(sample_voronoi(1.0, 10.0, 1.0, seed=0), 1.0)
