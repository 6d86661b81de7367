"""Grid fields Y, U, W on a scaled lattice and greedy lattice-animal maxima.

Site ``v`` of the lattice owns the box ``delta * (v + [-1/2, 1/2]^2)``; its
block is the 3x3 union of boxes around it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, WindowTooSmall
from .hyperplanes import PhtSample
from .tess_fpp import MarkedGraph
from .voronoi import Tessellation2D

BOX_TOL = 1e-12


@dataclass
class GridField:
    delta: float
    box: int
    values: np.ndarray     # (2B+1, 2B+1), values[i + B, j + B] is site (i, j)
    name: str = ""

    def __post_init__(self):
        side = 2 * self.box + 1
        if self.values.shape != (side, side):
            raise InvalidParameter("field shape does not match box")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameter("field values must be finite")

    def at(self, v) -> float:
        i, j = v
        return float(self.values[i + self.box, j + self.box])

    @property
    def n_sites(self) -> int:
        return self.values.size


def _check_box(t_R: float, delta: float, box: int):
    if delta <= 0 or box < 0:
        raise InvalidParameter("need delta > 0 and box >= 0")
    if math.sqrt(2.0) * delta * (box + 2) > t_R:
        raise WindowTooSmall(
            f"lattice box of radius {box} at width {delta} leaves the safe window")


def convex_meets_box(poly: np.ndarray, lo, hi) -> bool:
    """Separating-axis test: does a convex CCW polygon meet the box ``[lo, hi]``?"""
    if poly[:, 0].max() < lo[0] or poly[:, 0].min() > hi[0]:
        return False
    if poly[:, 1].max() < lo[1] or poly[:, 1].min() > hi[1]:
        return False
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    e = np.roll(poly, -1, axis=0) - poly
    normals = np.column_stack([e[:, 1], -e[:, 0]])
    for p, nrm in zip(poly, normals):
        if np.all((corners - p) @ nrm > 0):
            return False
    return True


def _site_ranges(lo, hi, delta, box):
    """Integer sites whose boxes meet the axis-aligned rectangle ``[lo, hi]``."""
    a = np.maximum(np.ceil(np.asarray(lo) / delta - 0.5 - BOX_TOL).astype(int), -box)
    b = np.minimum(np.floor(np.asarray(hi) / delta + 0.5 + BOX_TOL).astype(int), box)
    return a, b


def compute_fields(t: Tessellation2D, delta: float, box: int) -> tuple[GridField, GridField]:
    """Y (generators per box) and U (a cell meets the box and leaves its block)."""
    _check_box(t.R_safe, delta, box)
    side = 2 * box + 1
    g = t.generators
    idx = np.floor(g / delta + 0.5).astype(np.int64)
    ok = np.all(np.abs(idx) <= box, axis=1)
    Y = np.zeros((side, side))
    np.add.at(Y, (idx[ok, 0] + box, idx[ok, 1] + box), 1.0)

    U = np.zeros((side, side))
    reach = delta * (box + 0.5)
    for c in np.nonzero(t.meets_safe)[0]:
        poly = t.polygon(c)
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        if max(hi - lo) <= delta:
            continue  # too small to leave any block
        if np.any(hi < -reach) or np.any(lo > reach):
            continue
        a, b = _site_ranges(lo, hi, delta, box)
        for i in range(a[0], b[0] + 1):
            for j in range(a[1], b[1] + 1):
                if U[i + box, j + box]:
                    continue
                blo = delta * (np.array([i, j]) - 1.5)
                bhi = delta * (np.array([i, j]) + 1.5)
                if np.all(lo >= blo) and np.all(hi <= bhi):
                    continue
                if convex_meets_box(poly, delta * (np.array([i, j]) - 0.5),
                                    delta * (np.array([i, j]) + 0.5)):
                    U[i + box, j + box] = 1.0
    return GridField(delta, box, Y, "Y"), GridField(delta, box, U, "U")


def compute_W(source, delta: float, rho: float, box: int) -> GridField:
    """W_v = 1 iff some path from box v to outside its block costs less than ``rho``.

    ``source`` is a :class:`MarkedGraph` (cell-graph Dijkstra) or a
    :class:`PhtSample` (minimum plane-crossing cost in the line arrangement).
    """
    if rho < 0:
        raise InvalidParameter("rho must be >= 0")
    if isinstance(source, MarkedGraph):
        return _w_graph(source, delta, rho, box)
    if isinstance(source, PhtSample):
        return _w_pht(source, delta, rho, box)
    raise InvalidParameter("W needs a MarkedGraph or a PhtSample")


def _w_graph(mg: MarkedGraph, delta, rho, box) -> GridField:
    t = mg.tess
    _check_box(t.R_safe, delta, box)
    side = 2 * box + 1
    W = np.zeros((side, side))
    if rho == 0:
        return GridField(delta, box, W, "W")
    cand = np.nonzero(t.meets_safe)[0]
    bbox_lo = np.array([t.polygon(c).min(axis=0) for c in cand])
    bbox_hi = np.array([t.polygon(c).max(axis=0) for c in cand])
    ptr, idx, w = mg.graph.ptr, mg.graph.idx, mg.arc_weights
    lo_of = dict(zip(cand.tolist(), bbox_lo))
    hi_of = dict(zip(cand.tolist(), bbox_hi))
    for i in range(-box, box + 1):
        for j in range(-box, box + 1):
            v = np.array([i, j])
            qlo, qhi = delta * (v - 0.5), delta * (v + 0.5)
            blo, bhi = delta * (v - 1.5), delta * (v + 1.5)
            near = np.all(bbox_lo <= qhi, axis=1) & np.all(bbox_hi >= qlo, axis=1)
            sources = [int(c) for c in cand[near] if convex_meets_box(t.polygon(c), qlo, qhi)]

            def leaves(c):
                return bool(np.any(lo_of[c] < blo) or np.any(hi_of[c] > bhi))

            dist = {c: 0.0 for c in sources}
            heap = [(0.0, c) for c in sources]
            heapq.heapify(heap)
            done = set()
            hit = False
            while heap:
                d, c = heapq.heappop(heap)
                if d >= rho:
                    break
                if c in done:
                    continue
                done.add(c)
                if leaves(c):
                    hit = True
                    break
                for k in range(ptr[c], ptr[c + 1]):
                    nb = int(idx[k])
                    nd = d + w[k]
                    if nd < dist.get(nb, math.inf):
                        dist[nb] = nd
                        heapq.heappush(heap, (nd, nb))
            W[i + box, j + box] = 1.0 if hit else 0.0
    return GridField(delta, box, W, "W")


def _split(poly: np.ndarray, u: np.ndarray, r: float):
    """Split a convex polygon by the line <x, u> = r; returns (negative, positive) parts."""
    s = poly @ u - r
    if np.all(s >= 0):
        return None, poly
    if np.all(s <= 0):
        return poly, None
    neg, pos = [], []
    m = len(poly)
    for k in range(m):
        p, q = poly[k], poly[(k + 1) % m]
        sp, sq = s[k], s[(k + 1) % m]
        if sp <= 0:
            neg.append(p)
        if sp >= 0:
            pos.append(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            x = p + (sp / (sp - sq)) * (q - p)
            neg.append(x)
            pos.append(x)
    neg, pos = np.array(neg), np.array(pos)
    if len(neg) < 3:
        return None, poly
    if len(pos) < 3:
        return poly, None
    return neg, pos


def _arrangement_faces(lines_u, lines_r, lo, hi):
    faces = [np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])]
    for u, r in zip(lines_u, lines_r):
        nxt = []
        for f in faces:
            a, b = _split(f, u, r)
            if a is not None:
                nxt.append(a)
            if b is not None:
                nxt.append(b)
        faces = nxt
    return faces


def _w_pht(s: PhtSample, delta, rho, box) -> GridField:
    if s.dim != 2:
        raise InvalidParameter("grid fields are planar")
    _check_box(s.R, delta, box)
    side = 2 * box + 1
    W = np.zeros((side, side))
    if rho == 0:
        return GridField(delta, box, W, "W")
    for i in range(-box, box + 1):
        for j in range(-box, box + 1):
            v = np.array([i, j], dtype=float)
            c = delta * v
            blo, bhi = delta * (v - 1.5), delta * (v + 1.5)
            # planes meeting the block: |<c, u> - r| <= half-diagonal support
            supp = 1.5 * delta * (np.abs(s.u[:, 0]) + np.abs(s.u[:, 1]))
            keep = np.abs(s.u @ c - s.r) < supp
            U_, R_, X_ = s.u[keep], s.r[keep], s.marks[keep]
            faces = _arrangement_faces(U_, R_, blo, bhi)
            cent = np.array([f.mean(axis=0) for f in faces])
            signs = (cent @ U_.T - R_) > 0
            qlo, qhi = delta * (v - 0.5), delta * (v + 0.5)
            in_q = np.array([convex_meets_box(f, qlo, qhi) for f in faces])
            tol = BOX_TOL * delta * (abs(i) + abs(j) + 2)
            on_edge = np.array([bool(np.any(f <= blo + tol) or np.any(f >= bhi - tol))
                                for f in faces])
            a, b = signs[in_q], signs[on_edge]
            if len(a) == 0 or len(b) == 0:
                continue
            cost = (a[:, None, :] != b[None, :, :]).astype(float) @ X_
            W[i + box, j + box] = 1.0 if cost.min() < rho else 0.0
    return GridField(delta, box, W, "W")


# --- lattice animals -----------------------------------------------------------

@dataclass(frozen=True)
class AnimalStat:
    """Best average over size-``n`` lattice animals through the origin found by search.

    The value is a lower bound on the true maximum.
    """

    n: int
    greedy_max_avg: float
    n_restarts: int
    best_animal: tuple
    is_lower_bound: bool = True


_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def _animal_avg(f: GridField, animal) -> float:
    B = f.box
    return math.fsum(float(f.values[i + B, j + B]) for i, j in animal) / len(animal)


def _grow(f: GridField, n: int, rng, noise: float):
    B = f.box
    vals = f.values
    animal = [(0, 0)]
    members = {(0, 0)}
    frontier = {}
    jitter = {}

    def score(site):
        if site not in jitter:
            jitter[site] = noise * rng.random() if noise else 0.0
        return vals[site[0] + B, site[1] + B] + jitter[site]

    def push(site):
        for di, dj in _STEPS:
            nb = (site[0] + di, site[1] + dj)
            if nb in members or abs(nb[0]) > B or abs(nb[1]) > B:
                continue
            frontier[nb] = score(nb)

    push((0, 0))
    while len(animal) < n:
        best = max(frontier.values())
        ties = sorted(s for s, sc in frontier.items() if sc == best)
        pick = ties[int(rng.integers(len(ties)))] if len(ties) > 1 else ties[0]
        del frontier[pick]
        animal.append(pick)
        members.add(pick)
        push(pick)
    return tuple(sorted(animal))


def greedy_animal_max(f: GridField, n: int, n_restarts: int = 20, seed: int = 0,
                      seed_animals=()) -> AnimalStat:
    """Greedy growth from the origin with randomized restarts.

    Restart 0 is plain greedy growth (ties broken at random); later restarts
    add uniform noise of decreasing size to the site scores. Animals in
    ``seed_animals`` are evaluated too, so the result never falls below any
    of them.
    """
    if n < 1 or n > f.n_sites:
        raise InvalidParameter("animal size must be between 1 and the number of sites")
    if n_restarts < 1:
        raise InvalidParameter("need at least one restart")
    rng = np.random.default_rng(seed)
    spread = float(np.ptp(f.values)) or 1.0
    best_animal, best = None, -math.inf
    for k in range(n_restarts):
        noise = 0.0 if k == 0 else spread * (1.0 - k / n_restarts)
        animal = _grow(f, n, rng, noise)
        avg = _animal_avg(f, animal)
        if avg > best:
            best, best_animal = avg, animal
    for animal in seed_animals:
        animal = tuple(sorted(tuple(int(c) for c in v) for v in animal))
        if len(animal) == n and is_lattice_animal(animal, f.box):
            avg = _animal_avg(f, animal)
            if avg > best:
                best, best_animal = avg, animal
    return AnimalStat(n, float(best), n_restarts, best_animal)


def is_lattice_animal(animal, box: int | None = None) -> bool:
    """Connected set of distinct sites containing the origin (and inside the box)."""
    sites = set(map(tuple, animal))
    if len(sites) != len(animal) or (0, 0) not in sites:
        return False
    if box is not None and any(abs(i) > box or abs(j) > box for i, j in sites):
        return False
    seen = {(0, 0)}
    stack = [(0, 0)]
    while stack:
        i, j = stack.pop()
        for di, dj in _STEPS:
            nb = (i + di, j + dj)
            if nb in sites and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(sites)
