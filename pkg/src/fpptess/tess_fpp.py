"""First-passage percolation on the cell graph of a planar tessellation.

Each face carries an i.i.d. mark; the passage time between two points is the
cheapest sum of face marks over chains of adjacent cells joining the cells
that contain them.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import CensoredResult, InvalidParameter, WindowTooSmall
from .geometry import as_unit
from .marks import Deterministic, MarkDistribution
from .seeding import replicate_seeds
from .voronoi import Tessellation2D, cell_at, sample_voronoi, window_for

MAX_CENSOR_FRACTION = 0.01


@dataclass(eq=False)
class MarkedGraph:
    tess: Tessellation2D
    face_marks: np.ndarray
    mark_spec: str = "det:1.0"
    seed: int | None = None

    def __post_init__(self):
        if len(self.face_marks) != len(self.tess.faces):
            raise InvalidParameter("one mark per face is required")
        if np.any(self.face_marks < 0):
            raise InvalidParameter("marks must be >= 0")
        # arc weights aligned with the CSR neighbour array
        self.arc_weights = self.face_marks[self.tess.graph.face]

    @property
    def graph(self):
        return self.tess.graph

    def scaled(self, c: float) -> "MarkedGraph":
        return MarkedGraph(self.tess, self.face_marks * c, self.mark_spec, self.seed)


def assign_marks(t: Tessellation2D, m: MarkDistribution, seed: int = 0) -> MarkedGraph:
    rng = np.random.default_rng(seed)
    return MarkedGraph(t, m.sample(rng, len(t.faces)).astype(float), m.to_spec(), seed)


@dataclass(frozen=True)
class DijkstraResult:
    times: dict               # target cell -> passage time (only settled targets)
    first_margin_time: float  # time at which the first margin cell was settled
    n_settled: int
    unreached: bool = False   # some target was never settled

    def exact(self, target: int) -> bool:
        """A settled target is exact if no margin cell was settled strictly earlier."""
        return target in self.times and self.times[target] <= self.first_margin_time

    @property
    def censored(self) -> bool:
        return self.unreached or not all(self.exact(v) for v in self.times)


def dijkstra(mg: MarkedGraph, source: int, targets, margin_mask=None) -> DijkstraResult:
    """Single-source shortest paths stopping once every target is settled.

    A target is censored if a cell flagged in ``margin_mask`` (by default
    the cells not contained in the safe disk) is settled strictly before it:
    beyond such a cell the graph may continue outside the exact region.
    """
    g = mg.graph
    ptr, idx, w = g.ptr, g.idx, mg.arc_weights
    if margin_mask is None:
        margin_mask = ~mg.tess.inside
    pending = set(int(x) for x in targets)
    dist = {source: 0.0}
    done = set()
    heap = [(0.0, source)]
    out = {}
    first_margin = math.inf
    while heap and pending:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v in pending:
            pending.discard(v)
            out[v] = d
            if not pending:
                break
        if margin_mask[v] and first_margin == math.inf:
            first_margin = d
        for j in range(ptr[v], ptr[v + 1]):
            nb = int(idx[j])
            nd = d + w[j]
            if nd < dist.get(nb, math.inf):
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return DijkstraResult(out, first_margin, len(done), bool(pending))


def tess_passage_time(mg: MarkedGraph, x, y, strict: bool = True) -> float:
    """Passage time between the cells containing ``x`` and ``y``."""
    t = mg.tess
    a, b = cell_at(t, x), cell_at(t, y)
    if a == b:
        return 0.0
    res = dijkstra(mg, a, [b])
    if res.censored and strict:
        raise CensoredResult("shortest-path search reached the window margin")
    return float(res.times.get(b, math.inf))


@dataclass
class TimeConstantEstimate:
    u: np.ndarray
    r_values: np.ndarray
    means: np.ndarray          # mean of tau(0, r u) / r over uncensored replicates
    stderrs: np.ndarray
    n_censored: np.ndarray
    n_reps: int
    lam: float
    mark_spec: str
    samples: np.ndarray        # (n_reps, len(r)) tau / r, nan where censored

    def subadditivity_gaps(self) -> np.ndarray:
        """``2 E[tau(r)] - E[tau(2r)]`` for each r whose double is also in the list."""
        r = list(self.r_values)
        gaps = []
        for i, ri in enumerate(r):
            if 2 * ri in r:
                j = r.index(2 * ri)
                gaps.append(2 * ri * self.means[i] - 2 * ri * self.means[j])
        return np.array(gaps)


def time_constant_estimate(lam: float, mark_dist: MarkDistribution, u, r_list, n_reps: int,
                           seed: int = 0, safe_factor: float = 1.35,
                           max_censor_fraction: float = MAX_CENSOR_FRACTION
                           ) -> TimeConstantEstimate:
    """Monte Carlo estimate of tau(0, r u) / r on fresh tessellations.

    One tessellation and one mark sample per replicate serve all radii. The
    safe disk has radius ``safe_factor * max(r) + 3 / sqrt(lam)``.
    """
    u = as_unit(u)
    r_arr = np.asarray(r_list, dtype=float)
    if np.any(np.diff(r_arr) <= 0) or np.any(r_arr <= 0):
        raise InvalidParameter("r_list must be positive and increasing")
    if n_reps < 2:
        raise InvalidParameter("need at least two replicates")
    R_safe = safe_factor * r_arr[-1] + 3.0 / math.sqrt(lam)
    R_gen = window_for(lam, R_safe)
    vals = np.full((n_reps, len(r_arr)), np.nan)
    n_cens = np.zeros(len(r_arr), dtype=np.int64)
    for i, rs in enumerate(replicate_seeds(seed, n_reps)):
        t = sample_voronoi(lam, R_gen, R_safe, seed=rs)
        mg = assign_marks(t, mark_dist, replicate_seeds(rs, 1, stream=1)[0])
        src = cell_at(t, np.zeros(2))
        tgts = [cell_at(t, r * u) for r in r_arr]
        res = dijkstra(mg, src, tgts)
        for k, (r, c) in enumerate(zip(r_arr, tgts)):
            if res.exact(c):
                vals[i, k] = res.times[c] / r
            else:
                n_cens[k] += 1
    if np.any(n_cens > max_censor_fraction * n_reps):
        raise WindowTooSmall(f"censored fractions {n_cens / n_reps} exceed {max_censor_fraction}")
    means = np.nanmean(vals, axis=0)
    cnt = np.sum(~np.isnan(vals), axis=0)
    errs = np.nanstd(vals, axis=0, ddof=1) / np.sqrt(cnt)
    return TimeConstantEstimate(u, r_arr, means, errs, n_cens, n_reps, float(lam),
                                mark_dist.to_spec(), vals)


def moment_diagnostic(t: Tessellation2D, half_width: float = 1.0) -> int:
    """Number of cells meeting the square ``[-a, a]^2``."""
    a = float(half_width)
    if a <= 0:
        raise InvalidParameter("half width must be positive")
    if a * math.sqrt(2.0) > t.R_safe:
        raise WindowTooSmall("square is not inside the safe disk")
    count = 0
    for i in np.nonzero(t.meets_safe)[0]:
        if _polygon_meets_square(t.polygon(i), a):
            count += 1
    return count


def _polygon_meets_square(poly: np.ndarray, a: float) -> bool:
    """Separating-axis test for a convex polygon against ``[-a, a]^2``."""
    if poly[:, 0].max() < -a or poly[:, 0].min() > a:
        return False
    if poly[:, 1].max() < -a or poly[:, 1].min() > a:
        return False
    sq = np.array([[-a, -a], [a, -a], [a, a], [-a, a]])
    e = np.roll(poly, -1, axis=0) - poly
    normals = np.column_stack([e[:, 1], -e[:, 0]])  # outward for CCW polygons
    for p, nrm in zip(poly, normals):
        if np.all((sq - p) @ nrm > 0):
            return False
    return True


def unit_marks() -> MarkDistribution:
    return Deterministic(1.0)
