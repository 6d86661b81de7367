"""Graph-ball averages, Palm estimators and cell intensity for Voronoi tessellations.

All checks here are ratio or consistency checks: the Euclidean size of the
limiting ball is never needed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from .errors import CensoredResult, InvalidParameter
from .seeding import replicate_seeds
from .voronoi import (
    GraphBall,
    Tessellation2D,
    bfs_distances,
    build_voronoi,
    cell_at,
    polygon_disk_area,
    sample_voronoi,
    window_for,
)

# graph distance per unit length at unit intensity is about 0.77; this
# leaves room for fluctuations of the ball's outline
BALL_RADIUS_FACTOR = 1.65


@dataclass(frozen=True)
class CellFunctional:
    """A nonnegative cell statistic evaluated on an array of cell ids."""

    name: str
    evaluator: Callable[[Tessellation2D, np.ndarray], np.ndarray]
    translation_invariant: bool = True

    def __call__(self, t: Tessellation2D, ids) -> np.ndarray:
        return np.asarray(self.evaluator(t, np.asarray(ids, dtype=np.int64)), dtype=float)


FUNCTIONALS = {
    "constant": CellFunctional("constant", lambda t, ids: np.ones(len(ids))),
    "area": CellFunctional("area", lambda t, ids: t.areas[ids]),
    "perimeter": CellFunctional("perimeter", lambda t, ids: t.perimeters[ids]),
    "neighbors": CellFunctional("neighbors", lambda t, ids: t.n_neighbors[ids]),
}


def get_functional(name: str) -> CellFunctional:
    try:
        return FUNCTIONALS[name]
    except KeyError:
        raise InvalidParameter(f"unknown functional {name!r}; choose from {sorted(FUNCTIONALS)}")


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_used: int
    n_censored: int = 0


def _mean_se(vals) -> Estimate:
    v = np.asarray(vals, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else math.inf
    return Estimate(float(v.mean()), se, len(v))


def zero_cell(t: Tessellation2D) -> int:
    return cell_at(t, np.zeros(2))


def cell_intensity_estimate(lam: float, R: float | None = None, n_seeds: int = 1000,
                            seed: int = 0) -> Estimate:
    """Monte Carlo mean of ``1 / area(Z_0)``; censored zero cells are discarded."""
    if lam <= 0 or n_seeds < 2:
        raise InvalidParameter("need lam > 0 and at least two seeds")
    R = R if R is not None else 4.0 / math.sqrt(lam)
    R_gen = window_for(lam, R)
    vals = []
    censored = 0
    for s in replicate_seeds(seed, n_seeds):
        t = sample_voronoi(lam, R_gen, R, seed=s)
        z = zero_cell(t)
        if not t.inside[z]:
            censored += 1
            continue
        vals.append(1.0 / t.areas[z])
    est = _mean_se(vals)
    return Estimate(est.mean, est.stderr, est.n_used, censored)


def ball_average(t: Tessellation2D, ball: GraphBall, f: CellFunctional) -> float:
    if ball.touched_boundary:
        raise CensoredResult("graph ball reaches the window margin")
    return float(np.mean(f(t, ball.members)))


def palm_oracle(lam: float, R: float | None = None, n_seeds: int = 1000,
                f: CellFunctional = FUNCTIONALS["constant"], seed: int = 0,
                box_side: float = 1.0) -> Estimate:
    """Average of ``f`` over cells whose generator lies in ``[0, s]^2``, pooled over seeds.

    By the Campbell theorem the pooled ratio estimates the Palm mean. Cells of
    one tessellation are correlated, so the standard error is the ratio
    estimator's, computed from per-seed sums.
    """
    if lam <= 0 or n_seeds < 2 or box_side <= 0:
        raise InvalidParameter("need lam > 0, n_seeds >= 2 and a positive box")
    diag = box_side * math.sqrt(2.0)
    R = R if R is not None else diag + 4.0 / math.sqrt(lam)
    if R <= diag:
        raise InvalidParameter("safe window must contain the box")
    R_gen = window_for(lam, R)
    sums = np.zeros(n_seeds)
    counts = np.zeros(n_seeds)
    censored = 0
    for k, s in enumerate(replicate_seeds(seed, n_seeds, stream=7)):
        t = sample_voronoi(lam, R_gen, R, seed=s)
        g = t.generators
        ids = np.nonzero((g[:, 0] >= 0) & (g[:, 0] < box_side)
                         & (g[:, 1] >= 0) & (g[:, 1] < box_side))[0]
        bad = ~t.inside[ids]
        censored += int(bad.sum())
        vals = f(t, ids[~bad])
        sums[k] = math.fsum(vals.tolist())
        counts[k] = len(vals)
    total = counts.sum()
    if total < 2:
        return Estimate(float("nan"), math.inf, int(total), censored)
    mean = float(sums.sum() / total)
    resid = sums - mean * counts
    se = float(math.sqrt(n_seeds / (n_seeds - 1) * np.sum(resid * resid)) / total)
    return Estimate(mean, se, int(total), censored)


def wiener_average(t: Tessellation2D, radius: float, f: CellFunctional) -> float:
    """Average of ``f(Z_x)`` over x uniform in the disk, with ``Z_x`` the cell of x."""
    if radius <= 0 or radius > t.R_safe:
        raise InvalidParameter("disk must lie in the safe window")
    ids = np.nonzero(t.meets_safe)[0]
    w = np.array([polygon_disk_area(t.polygon(i), radius) for i in ids])
    return float(np.sum(w * f(t, ids)) / (math.pi * radius * radius))


@dataclass
class ErgodicSeries:
    lam: float
    n_values: np.ndarray
    seeds: list
    ball_sizes: np.ndarray     # (n_seeds, len(n))
    ball_areas: np.ndarray
    averages: dict             # functional name -> (n_seeds, len(n))
    censored: np.ndarray       # (n_seeds, len(n)) bool

    def ratio(self) -> np.ndarray:
        """Cells per unit area of each ball, ``|B_n| / area(B_n)``."""
        return self.ball_sizes / self.ball_areas

    def uncensored(self, k: int) -> np.ndarray:
        return ~self.censored[:, k]

    def summary(self, k: int, values: np.ndarray) -> Estimate:
        keep = self.uncensored(k)
        est = _mean_se(values[keep, k])
        return Estimate(est.mean, est.stderr, est.n_used, int((~keep).sum()))

    def extrapolated(self, values: np.ndarray, k_lo: int, k_hi: int) -> Estimate:
        """Per-seed linear extrapolation in ``1/n`` to ``n = inf`` from two radii.

        Ball averages carry a rim bias of order ``1/n``; this removes its
        leading term. The standard error is taken across seeds.
        """
        n_lo, n_hi = float(self.n_values[k_lo]), float(self.n_values[k_hi])
        if not 0 < n_lo < n_hi:
            raise InvalidParameter("need two increasing positive radii")
        keep = self.uncensored(k_lo) & self.uncensored(k_hi)
        lim = (n_hi * values[keep, k_hi] - n_lo * values[keep, k_lo]) / (n_hi - n_lo)
        est = _mean_se(lim)
        return Estimate(est.mean, est.stderr, est.n_used, int((~keep).sum()))


def safe_radius_for_ball(lam: float, n: int) -> float:
    return (BALL_RADIUS_FACTOR * n + 4.0) / math.sqrt(lam)


def _ball_rows(lam, R_gen, R_safe, n_values, functionals, s):
    t = sample_voronoi(lam, R_gen, R_safe, seed=s)
    dist = bfs_distances(t.graph, zero_cell(t), int(n_values[-1]))
    out = []
    for n in n_values:
        members = np.nonzero((dist >= 0) & (dist <= n))[0]
        avgs = {name: float(np.mean(get_functional(name)(t, members))) for name in functionals}
        out.append((len(members), float(np.sum(t.areas[members])), avgs,
                    bool(np.any(~t.inside[members]))))
    return out


def ball_growth_series(lam: float, n_values, n_seeds: int, seed: int = 0,
                       functionals=("area", "perimeter", "neighbors"),
                       R_safe: float | None = None, threads: int = 1) -> ErgodicSeries:
    """Graph-ball sizes, areas and functional averages around the zero cell.

    Replicates are independent; with ``threads > 1`` they run on a thread
    pool and are collected in seed order, so results do not depend on it.
    """
    n_values = np.asarray(sorted(int(n) for n in np.atleast_1d(n_values)))
    if n_values[0] < 0:
        raise InvalidParameter("ball radii must be >= 0")
    if n_seeds < 1 or threads < 1:
        raise InvalidParameter("need n_seeds >= 1 and threads >= 1")
    R_safe = R_safe or safe_radius_for_ball(lam, int(n_values[-1]))
    R_gen = window_for(lam, R_safe)
    seeds = replicate_seeds(seed, n_seeds, stream=3)
    job = partial(_ball_rows, lam, R_gen, R_safe, n_values, tuple(functionals))
    if threads == 1:
        results = [job(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, seeds))
    shape = (n_seeds, len(n_values))
    sizes = np.zeros(shape)
    areas = np.zeros(shape)
    avgs = {name: np.zeros(shape) for name in functionals}
    cens = np.zeros(shape, dtype=bool)
    for i, rows in enumerate(results):
        for k, (size, area, av, c) in enumerate(rows):
            sizes[i, k], areas[i, k], cens[i, k] = size, area, c
            for name in functionals:
                avgs[name][i, k] = av[name]
    return ErgodicSeries(float(lam), n_values, seeds, sizes, areas, avgs, cens)


def square_grid_tessellation(half: int = 10, side: float = 1.0) -> Tessellation2D:
    """Deterministic mock: square cells of the given side centred on a shifted lattice."""
    k = np.arange(-half, half) + 0.5
    gx, gy = np.meshgrid(k, k, indexing="ij")
    pts = side * np.column_stack([gx.ravel(), gy.ravel()])
    return build_voronoi(pts, R_gen=half * side, R_safe=(half - 2) * side)
