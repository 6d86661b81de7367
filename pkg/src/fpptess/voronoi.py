"""Planar Poisson-Voronoi tessellations in a disk window.

Generators are a Poisson process in the disk of radius ``R_gen``. Cells are
built from the Delaunay triangulation (Qhull); a Delaunay edge becomes a
face only if the two triangles on either side are not cocircular, which is
decided with an exact rational in-circle test when the floating-point one is
inconclusive. A triangle whose circumdisk lies inside the generator disk is
a triangle of the infinite process too, so cells whose triangles all have
this property are exact. Every cell meeting the safe disk of radius
``R_safe`` is required to be exact.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import CensoredResult, ConstructionUnsafe, InvalidParameter, OutOfWindow
from .seeding import child_rng

MARGIN_FACTOR = 5.0
MAX_EXTENSIONS = 4
INCIRCLE_REL_TOL = 1e-10


# --- exact predicates ----------------------------------------------------------

def _incircle_float(a, b, c, d):
    """In-circle determinant (positive if d is inside circle abc, abc CCW) and its permanent."""
    adx, ady = a[:, 0] - d[:, 0], a[:, 1] - d[:, 1]
    bdx, bdy = b[:, 0] - d[:, 0], b[:, 1] - d[:, 1]
    cdx, cdy = c[:, 0] - d[:, 0], c[:, 1] - d[:, 1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdx * cdy - bdy * cdx)
           + blift * (cdx * ady - cdy * adx)
           + clift * (adx * bdy - ady * bdx))
    perm = (alift * (np.abs(bdx * cdy) + np.abs(bdy * cdx))
            + blift * (np.abs(cdx * ady) + np.abs(cdy * adx))
            + clift * (np.abs(adx * bdy) + np.abs(ady * bdx)))
    return det, perm


def incircle_exact(a, b, c, d) -> int:
    """Sign of the in-circle determinant computed in exact rational arithmetic."""
    A = [Fraction(float(v)) for v in a]
    B = [Fraction(float(v)) for v in b]
    C = [Fraction(float(v)) for v in c]
    D = [Fraction(float(v)) for v in d]
    adx, ady = A[0] - D[0], A[1] - D[1]
    bdx, bdy = B[0] - D[0], B[1] - D[1]
    cdx, cdy = C[0] - D[0], C[1] - D[1]
    det = ((adx * adx + ady * ady) * (bdx * cdy - bdy * cdx)
           + (bdx * bdx + bdy * bdy) * (cdx * ady - cdy * adx)
           + (cdx * cdx + cdy * cdy) * (adx * bdy - ady * bdx))
    return (det > 0) - (det < 0)


def orient_exact(a, b, c) -> int:
    A = [Fraction(float(v)) for v in a]
    B = [Fraction(float(v)) for v in b]
    C = [Fraction(float(v)) for v in c]
    det = (B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0])
    return (det > 0) - (det < 0)


def _circumcenters(p, simplices):
    a, b, c = p[simplices[:, 0]], p[simplices[:, 1]], p[simplices[:, 2]]
    bx, by = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
    cx, cy = c[:, 0] - a[:, 0], c[:, 1] - a[:, 1]
    d = 2.0 * (bx * cy - by * cx)
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    cc = np.column_stack([a[:, 0] + ux, a[:, 1] + uy])
    return cc, np.hypot(ux, uy)


# --- data types ------------------------------------------------------------------

@dataclass(eq=False)
class AdjacencyGraph:
    """Undirected cell graph in CSR form; ``face`` gives the face id of each arc."""

    ptr: np.ndarray
    idx: np.ndarray
    face: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.ptr) - 1

    def neighbors(self, i: int) -> np.ndarray:
        return self.idx[self.ptr[i]:self.ptr[i + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.ptr)


@dataclass(eq=False)
class Tessellation2D:
    generators: np.ndarray          # (n, 2)
    cell_ptr: np.ndarray            # (n+1,) offsets into cell_vertices
    cell_vertices: np.ndarray       # (m, 2), CCW per cell
    bounded: np.ndarray             # (n,) bool
    faces: np.ndarray               # (F, 2) cell ids, i < j
    face_segments: np.ndarray       # (F, 2, 2) endpoints (nan for unbounded faces)
    graph: AdjacencyGraph
    R_gen: float
    R_safe: float
    lam: float | None = None
    seed: int | None = None
    determined: np.ndarray = field(default=None)
    inside: np.ndarray = field(default=None)       # cell contained in the safe disk
    meets_safe: np.ndarray = field(default=None)   # cell intersects the safe disk
    areas: np.ndarray = field(default=None)
    perimeters: np.ndarray = field(default=None)
    _tree: cKDTree = field(default=None, repr=False)

    @property
    def n_cells(self) -> int:
        return len(self.generators)

    def polygon(self, i: int) -> np.ndarray:
        return self.cell_vertices[self.cell_ptr[i]:self.cell_ptr[i + 1]]

    @property
    def n_neighbors(self) -> np.ndarray:
        return self.graph.degree()

    def to_json(self) -> str:
        cells = []
        for i in range(self.n_cells):
            cells.append([[float(x), float(y)] for x, y in self.polygon(i)]
                         if self.bounded[i] else None)
        payload = {
            "lambda": self.lam, "R_gen": self.R_gen, "R_safe": self.R_safe,
            "seed": self.seed,
            "generators": self.generators.tolist(),
            "cells": cells,
            "faces": [{"cells": [int(a), int(b)],
                       "segment": None if np.isnan(seg).any() else seg.tolist()}
                      for (a, b), seg in zip(self.faces, self.face_segments)],
        }
        return json.dumps(payload, sort_keys=True)


# --- construction --------------------------------------------------------------

def sample_generators(lam: float, R_gen: float, rng: np.random.Generator) -> np.ndarray:
    n = int(rng.poisson(lam * math.pi * R_gen * R_gen))
    rad = R_gen * np.sqrt(rng.random(n))
    ang = 2.0 * math.pi * rng.random(n)
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def sample_voronoi(lam: float, R_gen: float, R_safe: float, seed: int = 0) -> Tessellation2D:
    if lam <= 0:
        raise InvalidParameter("intensity must be positive")
    check_margin(lam, R_gen, R_safe)
    rng = np.random.default_rng(seed)
    pts = sample_generators(lam, R_gen, rng)
    t = build_voronoi(pts, R_gen, R_safe, lam=lam, seed=seed, require_determined=False)
    # a large empty region near the rim can leave a safe cell undetermined; the
    # margin makes this rare, and adding an independent Poisson annulus keeps
    # the sample exact
    for k in range(MAX_EXTENSIONS):
        if not np.any(t.meets_safe & ~t.determined):
            return t
        R_new = R_gen + MARGIN_FACTOR / math.sqrt(lam)
        pts = np.vstack([pts, sample_annulus(lam, R_gen, R_new, child_rng(seed, k + 1))])
        R_gen = R_new
        t = build_voronoi(pts, R_gen, R_safe, lam=lam, seed=seed, require_determined=False)
    raise ConstructionUnsafe("safe cells still undetermined after extending the window")


def sample_annulus(lam: float, r0: float, r1: float, rng: np.random.Generator) -> np.ndarray:
    """Poisson(lam) points in the annulus ``r0 < |x| <= r1``."""
    n = int(rng.poisson(lam * math.pi * (r1 * r1 - r0 * r0)))
    rad = np.sqrt(r0 * r0 + (r1 * r1 - r0 * r0) * rng.random(n))
    ang = 2.0 * math.pi * rng.random(n)
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def check_margin(lam: float, R_gen: float, R_safe: float) -> None:
    if not 0 < R_safe:
        raise InvalidParameter("safe radius must be positive")
    margin = MARGIN_FACTOR / math.sqrt(lam)
    if R_safe > R_gen - margin + 1e-12 * R_gen:
        raise ConstructionUnsafe(
            f"R_safe={R_safe} exceeds R_gen - {MARGIN_FACTOR}/sqrt(lambda) = {R_gen - margin:.4g}")


def window_for(lam: float, R_safe: float) -> float:
    """Smallest generator radius allowed for the given safe radius."""
    return R_safe + MARGIN_FACTOR / math.sqrt(lam)


def _nonface_edges(p, simplices, neighbors, t, k, nb):
    """Mask of Delaunay edges whose two triangles are cocircular (zero-length face)."""
    # vertex of nb opposite the shared edge
    nb_opp = np.empty(len(nb), dtype=np.int64)
    sel = nb >= 0
    rows = neighbors[nb[sel]]
    which = np.argmax(rows == t[sel, None], axis=1)
    nb_opp[sel] = simplices[nb[sel], which]
    nb_opp[~sel] = -1
    a = simplices[t, (k + 1) % 3]
    b = simplices[t, (k + 2) % 3]
    c = simplices[t, k]
    out = np.zeros(len(t), dtype=bool)
    if not np.any(sel):
        return out
    A, B, C, D = p[a[sel]], p[b[sel]], p[c[sel]], p[nb_opp[sel]]
    det, perm = _incircle_float(A, B, C, D)
    unsure = np.abs(det) <= INCIRCLE_REL_TOL * perm
    flags = np.zeros(int(sel.sum()), dtype=bool)
    for j in np.nonzero(unsure)[0]:
        flags[j] = incircle_exact(A[j], B[j], C[j], D[j]) == 0
    out[sel] = flags
    return out


def build_voronoi(points, R_gen: float, R_safe: float, lam: float | None = None,
                  seed: int | None = None, require_determined: bool = True) -> Tessellation2D:
    """Voronoi cells, faces and adjacency for ``points`` inside the disk ``R_gen``."""
    p = np.ascontiguousarray(np.asarray(points, dtype=float))
    n = len(p)
    if n < 3:
        raise ConstructionUnsafe("need at least three generators")
    tri = Delaunay(p)
    simplices = tri.simplices.astype(np.int64)
    neighbors = tri.neighbors.astype(np.int64)
    cc, crad = _circumcenters(p, simplices)
    T = len(simplices)

    # one record per (triangle, opposite vertex); keep each edge once
    t = np.repeat(np.arange(T), 3)
    k = np.tile(np.arange(3), T)
    nb = neighbors[t, k]
    once = (nb < 0) | (t < nb)
    t, k, nb = t[once], k[once], nb[once]
    ea = simplices[t, (k + 1) % 3]
    eb = simplices[t, (k + 2) % 3]
    drop = _nonface_edges(p, simplices, neighbors, t, k, nb)
    t, k, nb, ea, eb = t[~drop], k[~drop], nb[~drop], ea[~drop], eb[~drop]
    lo, hi = np.minimum(ea, eb), np.maximum(ea, eb)
    order = np.lexsort((hi, lo))
    lo, hi, t, nb = lo[order], hi[order], t[order], nb[order]
    faces = np.column_stack([lo, hi])
    seg = np.full((len(faces), 2, 2), np.nan)
    seg[:, 0] = cc[t]
    has2 = nb >= 0
    seg[has2, 1] = cc[nb[has2]]

    # CSR adjacency (both directions), neighbors sorted by id
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    fid = np.concatenate([np.arange(len(faces)), np.arange(len(faces))])
    o = np.lexsort((dst, src))
    src, dst, fid = src[o], dst[o], fid[o]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, src + 1, 1)
    ptr = np.cumsum(ptr)
    graph = AdjacencyGraph(ptr, dst, fid)

    # cell polygons: circumcenters of incident triangles sorted by angle
    pt_of = simplices.ravel()
    tri_of = np.repeat(np.arange(T), 3)
    vec = cc[tri_of] - p[pt_of]
    ang = np.arctan2(vec[:, 1], vec[:, 0])
    o = np.lexsort((ang, pt_of))
    pt_of, tri_of = pt_of[o], tri_of[o]
    verts = cc[tri_of]
    # collapse repeated vertices from cocircular triangles
    same = np.zeros(len(verts), dtype=bool)
    same[1:] = (pt_of[1:] == pt_of[:-1]) & np.all(np.abs(verts[1:] - verts[:-1]) <= 1e-12 * (1.0 + np.abs(verts[1:])), axis=1)
    pt_k, tri_k, verts = pt_of[~same], tri_of[~same], verts[~same]
    cell_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(cell_ptr, pt_k + 1, 1)
    cell_ptr = np.cumsum(cell_ptr)

    bounded = np.ones(n, dtype=bool)
    hull_pts = np.unique(tri.convex_hull.ravel())
    bounded[hull_pts] = False
    # a cell is exact if every incident triangle has its circumdisk in the window
    tri_ok = np.linalg.norm(cc, axis=1) + crad <= R_gen
    determined = bounded.copy()
    bad_pts = pt_of[~tri_ok[tri_of]]
    determined[bad_pts] = False
    # first/last vertex equality after wrap
    areas, perims, dmin, dmax = _polygon_stats(verts, cell_ptr)
    areas[~bounded] = np.inf
    perims[~bounded] = np.inf

    tess = Tessellation2D(p, cell_ptr, verts, bounded, faces, seg, graph,
                          float(R_gen), float(R_safe), lam, seed)
    tess._tree = cKDTree(p)
    zero_cell = _nearest(tess, np.zeros(2))
    meets = (dmin <= R_safe) & bounded
    meets[zero_cell] = True
    tess.meets_safe = meets
    tess.inside = bounded & (dmax <= R_safe)
    tess.determined = determined
    tess.areas = areas
    tess.perimeters = perims
    if require_determined and np.any(meets & ~determined):
        raise ConstructionUnsafe(
            f"{int(np.sum(meets & ~determined))} cells meeting the safe disk are not determined")
    return tess


def _polygon_stats(verts, ptr):
    """Area, perimeter, min distance from the origin to the boundary and max vertex norm."""
    n = len(ptr) - 1
    counts = np.diff(ptr)
    nxt_idx = np.arange(len(verts)) + 1
    last = ptr[1:] - 1
    nz = counts > 0
    nxt_idx[last[nz]] = ptr[:-1][nz]
    nxt = verts[nxt_idx] if len(verts) else verts
    cross = verts[:, 0] * nxt[:, 1] - verts[:, 1] * nxt[:, 0]
    edge = np.linalg.norm(nxt - verts, axis=1)
    # distance from origin to each edge segment
    dv = nxt - verts
    L2 = np.einsum("ij,ij->i", dv, dv)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.clip(-np.einsum("ij,ij->i", verts, dv) / L2, 0.0, 1.0)
    s = np.where(L2 > 0, s, 0.0)
    dist = np.linalg.norm(verts + s[:, None] * dv, axis=1)
    vnorm = np.linalg.norm(verts, axis=1)
    areas = np.zeros(n)
    perims = np.zeros(n)
    dmin = np.full(n, np.inf)
    dmax = np.full(n, np.inf)
    if len(verts):
        starts = ptr[:-1][nz]
        areas[nz] = 0.5 * np.add.reduceat(cross, starts)
        perims[nz] = np.add.reduceat(edge, starts)
        dmin[nz] = np.minimum.reduceat(dist, starts)
        dmax[nz] = np.maximum.reduceat(vnorm, starts)
    return areas, perims, dmin, dmax


# --- queries -------------------------------------------------------------------

def _nearest(t: Tessellation2D, x: np.ndarray) -> int:
    k = min(6, t.n_cells)
    _, idx = t._tree.query(x, k=k)
    idx = np.atleast_1d(idx)
    d2 = np.sum((t.generators[idx] - x) ** 2, axis=1)
    ties = idx[d2 == d2.min()]
    if len(ties) == 1:
        return int(ties[0])
    g = t.generators[ties]
    return int(ties[np.lexsort((g[:, 1], g[:, 0]))[0]])


def cell_at(t: Tessellation2D, x) -> int:
    """Cell containing ``x``: nearest generator, ties to the lexicographically smallest."""
    x = np.asarray(x, dtype=float)
    if float(np.hypot(*x)) > t.R_safe:
        raise OutOfWindow(f"point {x} lies outside the safe disk of radius {t.R_safe}")
    return _nearest(t, x)


def point_in_polygon(poly: np.ndarray, x, tol: float = 1e-12) -> bool:
    """Convex CCW polygon containment with a small tolerance for boundary points."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    cross = (b[:, 0] - a[:, 0]) * (x[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (x[0] - a[:, 0])
    scale = np.max(np.abs(poly)) + 1.0
    return bool(np.all(cross >= -tol * scale * scale))


@dataclass(frozen=True)
class GraphBall:
    root: int
    n: int
    members: np.ndarray          # sorted cell ids
    distances: np.ndarray        # graph distance of each member
    touched_boundary: bool

    @property
    def size(self) -> int:
        return int(len(self.members))


def bfs_distances(g: AdjacencyGraph, root: int, n_max: int | None = None) -> np.ndarray:
    """Hop distances from ``root`` (-1 where unreached), expanding at most ``n_max`` levels."""
    dist = np.full(g.n_vertices, -1, dtype=np.int64)
    dist[root] = 0
    frontier = np.array([root], dtype=np.int64)
    level = 0
    while len(frontier) and (n_max is None or level < n_max):
        starts = g.ptr[frontier]
        stops = g.ptr[frontier + 1]
        lens = stops - starts
        if lens.sum() == 0:
            break
        offs = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens)
        nbrs = g.idx[np.arange(lens.sum()) + offs]
        nbrs = np.unique(nbrs)
        nbrs = nbrs[dist[nbrs] < 0]
        level += 1
        dist[nbrs] = level
        frontier = nbrs
    return dist


def bfs_distances_simple(g: AdjacencyGraph, root: int) -> dict[int, int]:
    """Plain queue-based BFS, kept deliberately naive as a test oracle."""
    dist = {root: 0}
    q = deque([root])
    while q:
        v = q.popleft()
        for w in g.neighbors(v):
            w = int(w)
            if w not in dist:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def graph_ball(t_or_g, root: int, n: int, boundary_mask=None) -> GraphBall:
    """Cells within graph distance ``n`` of ``root``.

    ``touched_boundary`` is set when a member cell is not contained in the
    safe disk (pass a :class:`Tessellation2D`, or a graph and a mask of
    boundary cells).
    """
    if n < 0:
        raise InvalidParameter("ball radius must be >= 0")
    if isinstance(t_or_g, Tessellation2D):
        g = t_or_g.graph
        if boundary_mask is None:
            boundary_mask = ~t_or_g.inside
    else:
        g = t_or_g
    dist = bfs_distances(g, root, n)
    members = np.nonzero(dist >= 0)[0]
    touched = bool(np.any(boundary_mask[members])) if boundary_mask is not None else False
    return GraphBall(int(root), int(n), members, dist[members], touched)


def continuous_ball(t: Tessellation2D, ball: GraphBall, allow_censored: bool = False):
    """Area and polygons of the union of the ball's cells."""
    if ball.touched_boundary and not allow_censored:
        raise CensoredResult("graph ball reaches cells outside the safe disk")
    polys = [t.polygon(i) for i in ball.members]
    return float(np.sum(t.areas[ball.members])), polys


# --- clipping to the safe disk (used by the tiling check) ------------------------

def _segment_disk_area(p, q, R):
    """Signed area of triangle (0, p, q) intersected with the disk of radius R."""
    def sector(a, b):
        ang = math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])
        return 0.5 * R * R * ang

    def tri(a, b):
        return 0.5 * (a[0] * b[1] - a[1] * b[0])

    d = (q[0] - p[0], q[1] - p[1])
    A = d[0] * d[0] + d[1] * d[1]
    if A == 0:
        return 0.0
    B = 2 * (p[0] * d[0] + p[1] * d[1])
    C = p[0] * p[0] + p[1] * p[1] - R * R
    disc = B * B - 4 * A * C
    pin = C <= 0
    qin = q[0] * q[0] + q[1] * q[1] <= R * R
    if pin and qin:
        return tri(p, q)
    if disc <= 0:
        return sector(p, q)
    sq = math.sqrt(disc)
    s1 = (-B - sq) / (2 * A)
    s2 = (-B + sq) / (2 * A)
    P1 = (p[0] + s1 * d[0], p[1] + s1 * d[1])
    P2 = (p[0] + s2 * d[0], p[1] + s2 * d[1])
    if pin:
        return tri(p, P2) + sector(P2, q)
    if qin:
        return sector(p, P1) + tri(P1, q)
    if s1 >= 1 or s2 <= 0:
        return sector(p, q)
    return sector(p, P1) + tri(P1, P2) + sector(P2, q)


def polygon_disk_area(poly: np.ndarray, R: float) -> float:
    """Exact area of a CCW polygon intersected with the origin-centred disk."""
    total = 0.0
    m = len(poly)
    for i in range(m):
        total += _segment_disk_area(poly[i], poly[(i + 1) % m], R)
    return total
