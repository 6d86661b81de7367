"""Vector helpers, spherical sectors, sphere coverings and the appendix bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter

UNIT_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


def as_vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise InvalidParameter(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidParameter("vector has non-finite entries")
    return v


def as_unit(u) -> np.ndarray:
    """Return ``u`` as a unit vector.

    Inputs within 1e-9 of unit norm are renormalized; anything further off
    is rejected rather than silently fixed.
    """
    v = as_vec(u)
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > RENORMALIZE_TOL:
        raise InvalidParameter(f"not a unit vector (norm {n!r})")
    return v / n


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def uniform_sphere(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """``n`` i.i.d. uniform points on the unit sphere in R^d, shape (n, d)."""
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def angle_grid(n_dirs: int) -> np.ndarray:
    """``n_dirs`` equally spaced unit vectors in the plane starting at e1.

    For even counts the second half is the exact negation of the first.
    """
    if n_dirs % 2 == 0:
        half = 2.0 * np.pi * np.arange(n_dirs // 2) / n_dirs
        first = np.column_stack([np.cos(half), np.sin(half)])
        return np.vstack([first, -first])
    theta = 2.0 * np.pi * np.arange(n_dirs) / n_dirs
    return np.column_stack([np.cos(theta), np.sin(theta)])


@dataclass(frozen=True)
class SphericalSector:
    """The set ``{x : |x| <= r, <x/|x|, u> >= 1 - delta}``."""

    u: np.ndarray
    r: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "u", as_unit(self.u))
        if not (0.0 <= self.delta <= 1.0):
            raise InvalidParameter(f"delta must lie in [0, 1], got {self.delta}")
        if not self.r >= 0.0:
            raise InvalidParameter(f"radius must be >= 0, got {self.r}")


def sector_contains(s: SphericalSector, x) -> bool:
    # the origin is in every sector, which keeps containment monotone in r
    x = as_vec(x)
    n = float(np.linalg.norm(x))
    if n == 0.0:
        return True
    if n > s.r:
        return False
    return float(np.dot(x, s.u)) / n >= 1.0 - s.delta


def sector_contains_many(s: SphericalSector, xs) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    n = np.linalg.norm(xs, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = (xs @ s.u) / n
    return (n == 0.0) | ((n <= s.r) & (cos >= 1.0 - s.delta))


def covering_constant(d: int) -> float:
    """Dimension constant c1 with ``k <= c1 * delta**(1-d)`` for the cube covering.

    Cubes of side delta/(2 sqrt d) meeting the sphere lie in the shell of
    radii 1 -/+ delta, and ``(1+delta)**d - (1-delta)**d <= 2**d * delta``
    for delta <= 1, which gives ``c1 = kappa_d * (4 sqrt d)**d``.
    """
    return unit_ball_volume(d) * (4.0 * math.sqrt(d)) ** d


@dataclass(frozen=True)
class Covering:
    delta: float
    directions: np.ndarray
    c1: float
    bound: float = field(init=False)

    def __post_init__(self):
        d = self.directions.shape[1]
        object.__setattr__(self, "bound", self.c1 * self.delta ** (1 - d))

    @property
    def k(self) -> int:
        return int(self.directions.shape[0])

    @property
    def d(self) -> int:
        return int(self.directions.shape[1])

    def covers(self, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
        """Boolean mask: which unit ``points`` lie in some S(u_i, 1, delta)."""
        points = np.atleast_2d(points)
        out = np.zeros(len(points), dtype=bool)
        thr = 1.0 - self.delta
        for start in range(0, len(points), chunk):
            block = points[start:start + chunk]
            best = np.full(len(block), -np.inf)
            for dstart in range(0, self.k, chunk):
                dots = block @ self.directions[dstart:dstart + chunk].T
                best = np.maximum(best, dots.max(axis=1))
            out[start:start + chunk] = best >= thr
        return out


def _interval_abs_range(lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    amin = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
    amax = np.maximum(np.abs(lo), np.abs(hi))
    return amin, amax


def sphere_covering(d: int, delta: float) -> Covering:
    """Cover the unit sphere by sectors S(u_i, 1, delta) via a cube grid.

    Cubes of side ``delta / (2 sqrt d)`` that meet the sphere are kept and one
    unit vector inside each cube becomes a direction.
    """
    if d < 2:
        raise InvalidParameter("dimension must be >= 2")
    if not (0.0 < delta <= 1.0):
        raise InvalidParameter(f"delta must lie in (0, 1], got {delta}")
    s = delta / (2.0 * math.sqrt(d))
    m = int(math.ceil(1.0 / s)) + 1
    idx = np.arange(-m, m)

    # enumerate the first d-1 coordinates, then solve for the last one
    prefix = np.array(list(itertools.product(idx, repeat=d - 1)), dtype=np.int64)
    pmin, pmax = _interval_abs_range(s * prefix, s * (prefix + 1))
    mn2 = (pmin ** 2).sum(axis=1)
    mx2 = (pmax ** 2).sum(axis=1)
    keep = mn2 <= 1.0
    prefix, mn2, mx2 = prefix[keep], mn2[keep], mx2[keep]
    A = np.sqrt(1.0 - mn2)
    B = np.sqrt(np.clip(1.0 - mx2, 0.0, None))
    lo = np.ceil(-A / s - 1.0).astype(np.int64)
    hi = np.floor(A / s).astype(np.int64)
    up_lo = np.maximum(lo, np.ceil(B / s - 1.0).astype(np.int64))
    dn_hi = np.minimum(hi, np.floor(-B / s).astype(np.int64))

    cubes = []
    for p, a, b, c, e in zip(prefix, lo, dn_hi, up_lo, hi):
        ws = set(range(a, b + 1)) | set(range(c, e + 1))
        for w in sorted(ws):
            cubes.append((*p, w))
    cubes = np.array(cubes, dtype=np.int64).reshape(-1, d)

    lo_c = s * cubes
    hi_c = s * (cubes + 1)
    # nearest point of each cube to the origin and its farthest corner
    near = np.clip(0.0, lo_c, hi_c)
    far = np.where(np.abs(lo_c) > np.abs(hi_c), lo_c, hi_c)
    n_near = np.linalg.norm(near, axis=1)
    n_far = np.linalg.norm(far, axis=1)
    ok = (n_near <= 1.0) & (n_far >= 1.0)
    near, far = near[ok], far[ok]
    # point on the segment near->far with unit norm; the cube is convex
    dv = far - near
    a2 = (dv * dv).sum(axis=1)
    b2 = 2.0 * (near * dv).sum(axis=1)
    c2 = (near * near).sum(axis=1) - 1.0
    t = (-b2 + np.sqrt(np.clip(b2 * b2 - 4.0 * a2 * c2, 0.0, None))) / (2.0 * a2)
    pts = near + t[:, None] * dv
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return Covering(delta=float(delta), directions=pts, c1=covering_constant(d))


def hilbert_bound(x, y, z) -> float:
    """Lower bound for <x, y> from the triangle inequality through ``z``."""
    x, y, z = as_vec(x), as_vec(y), as_vec(z)
    xz, yz, zz = float(x @ z), float(y @ z), float(z @ z)
    a = max(float(x @ x) + zz - 2.0 * xz, 0.0)
    b = max(float(y @ y) + zz - 2.0 * yz, 0.0)
    return xz + yz - zz - math.sqrt(a * b)


def shell_diameter_bound(r1: float, r2: float, delta: float) -> float:
    """Diameter bound for S(u, r2, delta) minus S(u, r1, delta)."""
    if not (0.0 <= r1 < r2):
        raise InvalidParameter(f"need 0 <= r1 < r2, got r1={r1}, r2={r2}")
    if delta <= 0:
        raise InvalidParameter("delta must be positive")
    return r2 - r1 + 2.0 * r2 * math.sqrt(2.0 * delta)


def sample_sector_shell(rng: np.random.Generator, u, r1: float, r2: float,
                        delta: float, n: int) -> np.ndarray:
    """Rejection-sample ``n`` points of S(u,r2,delta) minus S(u,r1,delta)."""
    u = as_unit(u)
    d = len(u)
    out = []
    have = 0
    while have < n:
        m = max(4 * (n - have), 1024)
        dirs = uniform_sphere(rng, m, d)
        cos = dirs @ u
        dirs = dirs[cos >= 1.0 - delta]
        # radius density proportional to t^(d-1) on (r1, r2]
        rad = (r1 ** d + rng.random(len(dirs)) * (r2 ** d - r1 ** d)) ** (1.0 / d)
        pts = dirs * rad[:, None]
        pts = pts[np.linalg.norm(pts, axis=1) > r1]
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:n]
