"""First-passage percolation on the Poisson hyperplane tessellation.

With i.i.d. marks attached to whole hyperplanes the straight segment is a
geodesic, so passage times are exact plane sums and the time constant is
``E[X] * Lambda(u)`` with ``Lambda`` the crossing intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .directional import DirectionalDistribution, Isotropic
from .errors import DegenerateShape, InvalidParameter
from .geometry import angle_grid, as_vec, sphere_covering
from .hyperplanes import PhtSample, expected_crossings, passage_times_from_origin, sample_pht
from .marks import Deterministic, MarkDistribution
from .seeding import replicate_seeds

# constants from the spherical-cap estimates used to pick the direction grid
C2 = 1.0 + math.sqrt(8.0)


@dataclass(frozen=True)
class TimeConstantModel:
    gamma: float
    phi: DirectionalDistribution
    marks: MarkDistribution = field(default_factory=lambda: Deterministic(1.0))

    def __post_init__(self):
        if self.gamma <= 0:
            raise InvalidParameter("gamma must be positive")

    @property
    def dim(self) -> int:
        return self.phi.dim


def mu(model: TimeConstantModel, x) -> float:
    """Time constant (a norm): ``E[X] * gamma * E[(<x, U>)_+]``."""
    return model.marks.mean() * expected_crossings(model.gamma, model.phi, x)


def mu_many(model: TimeConstantModel, xs: np.ndarray) -> np.ndarray:
    return model.marks.mean() * model.gamma * model.phi.mean_positive_part_many(xs)


def mu_zonoid_convention(model: TimeConstantModel, x) -> float:
    """``2 E[X] h(x)`` with h the zonoid support function; equals ``4 * mu``.

    Reported for comparison only; simulation agrees with :func:`mu`.
    """
    from .directional import zonoid_support
    return 2.0 * model.marks.mean() * zonoid_support(model.phi, model.gamma, x)


def max_mu_on_sphere(model: TimeConstantModel, n: int = 3600) -> float:
    if model.dim == 2:
        dirs = angle_grid(n)
    else:
        dirs = sphere_covering(model.dim, 0.05).directions
    dirs = np.vstack([dirs, np.eye(model.dim)])
    return float(mu_many(model, dirs).max())


@dataclass(frozen=True)
class LimitShape:
    directions: np.ndarray   # (n, d) unit vectors
    radii: np.ndarray        # (n,) 1 / mu(u)

    @property
    def n_dirs(self) -> int:
        return int(len(self.radii))

    @property
    def boundary(self) -> np.ndarray:
        return self.directions * self.radii[:, None]

    def radius(self, u) -> float:
        """Radius in direction ``u`` (must be one of the grid directions)."""
        u = as_vec(u)
        i = int(np.argmax(self.directions @ u))
        return float(self.radii[i])

    def convexity_defect(self) -> float:
        """Most negative turn of the planar boundary polygon (0 when convex)."""
        if self.directions.shape[1] != 2:
            raise InvalidParameter("convexity check is planar only")
        p = self.boundary
        order = np.argsort(np.arctan2(p[:, 1], p[:, 0]))
        p = p[order]
        a = np.roll(p, -1, axis=0) - p
        b = np.roll(p, -2, axis=0) - np.roll(p, -1, axis=0)
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        return float(min(cross.min(), 0.0))


def limit_shape(model: TimeConstantModel, n_dirs: int = 64) -> LimitShape:
    if n_dirs < 8:
        raise InvalidParameter("need at least 8 directions")
    if model.dim == 2:
        dirs = angle_grid(n_dirs)
    else:
        delta = 1.0
        cov = sphere_covering(model.dim, delta)
        while cov.k < n_dirs:
            delta /= 2.0
            cov = sphere_covering(model.dim, delta)
        dirs = cov.directions
    m = mu_many(model, dirs)
    if np.any(m <= 0):
        raise DegenerateShape("time constant vanishes in some direction")
    return LimitShape(dirs, 1.0 / m)


# --- Monte Carlo --------------------------------------------------------------

def _arc_passage_times(s: PhtSample, rho: float, thetas: np.ndarray) -> np.ndarray:
    """tau(0, rho * (cos t, sin t)) for sorted angles ``thetas`` in [0, 2 pi).

    A plane with normal angle ``p`` and offset ``a < rho`` is crossed exactly
    for directions within ``arccos(a / rho)`` of ``p``, so each plane adds its
    mark to one circular arc; a difference array handles all arcs at once.
    """
    k = len(thetas)
    if s.n_planes == 0 or rho == 0:
        return np.zeros(k)
    keep = s.r < rho
    if not np.any(keep):
        return np.zeros(k)
    phi_ang = np.arctan2(s.u[keep, 1], s.u[keep, 0])
    half = np.arccos(s.r[keep] / rho)
    lo = np.mod(phi_ang - half, 2.0 * np.pi)
    ext = np.concatenate([thetas, thetas + 2.0 * np.pi])
    i0 = np.searchsorted(ext, lo, side="right")
    i1 = np.searchsorted(ext, lo + 2.0 * half, side="left")
    diff = np.zeros(2 * k + 1)
    np.add.at(diff, i0, s.marks[keep])
    np.add.at(diff, i1, -s.marks[keep])
    c = np.cumsum(diff[:-1])
    return c[:k] + c[k:]


@dataclass
class DeviationRow:
    r: float
    eps: float
    n_reps: int
    exceed_prob: float
    reference_decay: float
    grid_k: int
    grid_delta: float


@dataclass
class DeviationTable:
    rows: list[DeviationRow]
    m: float

    def column(self, name):
        return np.array([getattr(row, name) for row in self.rows])


def grid_delta_for(model: TimeConstantModel, eps: float) -> float:
    """Opening parameter with ``sqrt(delta) = eps / (2 (gamma c2 + c3))``."""
    c3 = 2.0 * math.sqrt(2.0) * float(mu_many(model, np.eye(model.dim)).max())
    root = eps / (2.0 * (model.gamma * C2 + c3))
    return min(root * root, 1.0)


def deviation_experiment(model: TimeConstantModel, r_list, eps_list, n_reps: int,
                         seed: int = 0) -> DeviationTable:
    """Empirical P[max over a direction grid of |tau(0, r u) - mu(r u)| > eps r].

    The grid for each eps is the sphere covering whose opening parameter is
    matched to eps; the grid maximum is a lower bound for the supremum over
    the whole sphere and is labelled as such.
    """
    if not (isinstance(model.marks, Deterministic) and model.marks.c == 1.0):
        raise InvalidParameter("the deviation experiment is defined for unit marks")
    r_list = [float(r) for r in r_list]
    if any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise InvalidParameter("r_list must be increasing")
    m = 8.0 * max_mu_on_sphere(model)
    grids = []
    for eps in eps_list:
        delta = grid_delta_for(model, eps)
        dirs = sphere_covering(model.dim, delta).directions
        if model.dim == 2:
            th = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2.0 * np.pi)
            order = np.argsort(th)
            dirs, th = dirs[order], th[order]
        else:
            th = None
        grids.append((eps, delta, dirs, th, mu_many(model, dirs)))

    rows = []
    for ri, r in enumerate(r_list):
        exceed = np.zeros(len(grids), dtype=np.int64)
        for rep_seed in replicate_seeds(seed, n_reps, stream=ri):
            s = sample_pht(model.gamma, model.phi, r, model.marks, rep_seed)
            for gi, (eps, _, dirs, th, mu_u) in enumerate(grids):
                if th is not None:
                    tau = _arc_passage_times(s, r, th)
                else:
                    tau = passage_times_from_origin(s, r * dirs)
                if np.max(np.abs(tau - r * mu_u)) > eps * r:
                    exceed[gi] += 1
        for gi, (eps, delta, dirs, _, _) in enumerate(grids):
            rows.append(DeviationRow(r, eps, n_reps, float(exceed[gi] / n_reps),
                                     math.exp(-r * eps * eps / m), len(dirs), delta))
    return DeviationTable(rows, m)


@dataclass
class SweepRow:
    u: np.ndarray
    r: float
    mean_tau_over_r: float
    stderr: float
    mu: float


def direction_sweep(model: TimeConstantModel, r: float, n_dirs: int, n_reps: int,
                    seed: int = 0, directions=None) -> list[SweepRow]:
    """Monte Carlo mean of tau(0, r u) / r per grid direction, paired with mu(u)."""
    if r <= 0:
        raise InvalidParameter("r must be positive")
    if directions is None:
        if model.dim != 2:
            raise InvalidParameter("pass explicit directions for d != 2")
        directions = angle_grid(n_dirs)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    taus = np.empty((n_reps, len(directions)))
    for i, rep_seed in enumerate(replicate_seeds(seed, n_reps)):
        s = sample_pht(model.gamma, model.phi, r, model.marks, rep_seed)
        taus[i] = passage_times_from_origin(s, r * directions)
    vals = taus / r
    means = vals.mean(axis=0)
    errs = vals.std(axis=0, ddof=1) / math.sqrt(n_reps)
    mus = mu_many(model, directions)
    return [SweepRow(u, r, float(a), float(b), float(c))
            for u, a, b, c in zip(directions, means, errs, mus)]


def isotropic_model(gamma: float = math.pi, marks: MarkDistribution | None = None,
                    d: int = 2) -> TimeConstantModel:
    return TimeConstantModel(gamma, Isotropic(d), marks or Deterministic(1.0))
