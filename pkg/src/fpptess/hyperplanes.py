"""Windowed Poisson hyperplane process with i.i.d. plane marks.

Planes are ``E(u, r) = {x : <x, u> = r}`` with ``r >= 0`` and ``u`` drawn from
an even directional law. Restricted to offsets ``r <= R`` the process has a
Poisson(gamma * R) number of planes with i.i.d. Uniform[0, R] offsets, and a
segment inside the ball of radius ``R`` can only meet those planes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .directional import DirectionalDistribution, mean_positive_part, parse_phi
from .errors import InvalidParameter, OutOfWindow
from .geometry import as_unit, as_vec
from .marks import Deterministic, MarkDistribution, parse_marks

WINDOW_TOL = 1e-12


@dataclass(frozen=True)
class Hyperplane:
    u: np.ndarray
    r: float

    def __post_init__(self):
        object.__setattr__(self, "u", as_unit(self.u))
        if self.r < 0:
            raise InvalidParameter("hyperplane offset must be >= 0")


@dataclass(frozen=True)
class CrossingConvention:
    """How points lying exactly on a plane are treated.

    ``half_open=True`` counts a plane iff it meets the segment ``[x, y)``: a
    start point on the plane counts, an end point on it does not. This makes
    counts add exactly along concatenated segments. With ``half_open=False``
    a point on a plane is put on its negative side, which is symmetric in
    ``x`` and ``y``.
    """

    half_open: bool = True


HALF_OPEN = CrossingConvention(True)
NEGATIVE_SIDE = CrossingConvention(False)


@dataclass(frozen=True, eq=False)
class PhtSample:
    gamma: float
    phi: DirectionalDistribution
    R: float
    u: np.ndarray          # (n, d) unit normals
    r: np.ndarray          # (n,) offsets in [0, R]
    marks: np.ndarray      # (n,) passage times
    seed: int | None = None
    mark_spec: str = "det:1.0"
    meta: dict = field(default_factory=dict)

    @property
    def n_planes(self) -> int:
        return int(self.r.shape[0])

    @property
    def dim(self) -> int:
        return self.phi.dim

    def planes(self):
        return [(Hyperplane(u, r), float(x)) for u, r, x in zip(self.u, self.r, self.marks)]

    def with_marks(self, marks) -> "PhtSample":
        marks = np.asarray(marks, dtype=float)
        if marks.shape != self.r.shape:
            raise InvalidParameter("one mark per plane is required")
        return PhtSample(self.gamma, self.phi, self.R, self.u, self.r, marks,
                         self.seed, self.mark_spec, dict(self.meta))

    def to_jsonl(self) -> str:
        header = {"gamma": self.gamma, "phi": self.phi.to_spec(), "R": self.R,
                  "seed": self.seed, "marks": self.mark_spec, "n_planes": self.n_planes}
        lines = [json.dumps(header, sort_keys=True)]
        for u, r, x in zip(self.u, self.r, self.marks):
            lines.append(json.dumps({"u": [float(c) for c in u], "r": float(r),
                                     "x": float(x)}, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "PhtSample":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        rows = [json.loads(ln) for ln in lines[1:]]
        phi = parse_phi(head["phi"])
        d = phi.dim
        u = np.array([row["u"] for row in rows], dtype=float).reshape(-1, d)
        r = np.array([row["r"] for row in rows], dtype=float)
        x = np.array([row["x"] for row in rows], dtype=float)
        if len(rows) != head["n_planes"]:
            raise InvalidParameter("plane count does not match header")
        return cls(head["gamma"], phi, head["R"], u, r, x, head["seed"], head["marks"],
                   {"n_planes": head["n_planes"]})


def sample_pht(gamma: float, phi: DirectionalDistribution, R: float,
               mark_dist: MarkDistribution | None = None, seed: int = 0) -> PhtSample:
    """Sample the planes with offset at most ``R``.

    The draw order (count, offsets, directions, marks) is part of the
    reproducibility contract: the same seed gives the same sample.
    """
    if gamma <= 0:
        raise InvalidParameter("gamma must be positive")
    if R < 0:
        raise InvalidParameter("window radius must be >= 0")
    mark_dist = mark_dist or Deterministic(1.0)
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(gamma * R))
    r = rng.uniform(0.0, R, n) if n else np.zeros(0)
    u = phi.sample(rng, n) if n else np.zeros((0, phi.dim))
    marks = mark_dist.sample(rng, n) if n else np.zeros(0)
    return PhtSample(float(gamma), phi, float(R), u, r, marks, seed,
                     mark_dist.to_spec(), {"n_planes": n, "mean_count": gamma * R})


def _check_window(s: PhtSample, *points):
    for p in points:
        if float(np.linalg.norm(p)) > s.R * (1 + WINDOW_TOL) + WINDOW_TOL:
            raise OutOfWindow(f"point {p} lies outside the window of radius {s.R}")


def crossing_mask(s: PhtSample, x, y, convention: CrossingConvention = HALF_OPEN) -> np.ndarray:
    """Boolean mask over planes: which ones separate ``x`` from ``y``."""
    x, y = as_vec(x), as_vec(y)
    _check_window(s, x, y)
    a = s.u @ x - s.r
    b = s.u @ y - s.r
    if convention.half_open:
        strict = ((a < 0) & (b > 0)) | ((a > 0) & (b < 0))
        if np.array_equal(x, y):
            return np.zeros_like(strict)
        return strict | (a == 0)
    return (a > 0) != (b > 0)


def crossing_count(s: PhtSample, x, y, convention: CrossingConvention = HALF_OPEN) -> int:
    return int(crossing_mask(s, x, y, convention).sum())


def passage_time(s: PhtSample, x, y, convention: CrossingConvention = HALF_OPEN) -> float:
    """Exact FPP time: the straight segment crosses only unavoidable planes."""
    return float(s.marks[crossing_mask(s, x, y, convention)].sum())


def passage_times_from_origin(s: PhtSample, targets: np.ndarray) -> np.ndarray:
    """tau(0, y) for each row ``y`` of ``targets`` under the half-open rule."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.size and np.linalg.norm(targets, axis=1).max() > s.R * (1 + WINDOW_TOL) + WINDOW_TOL:
        raise OutOfWindow("target outside the sampling window")
    if s.n_planes == 0:
        return np.zeros(len(targets))
    # from 0 the start side is <0, u> - r = -r <= 0; r == 0 means 0 lies on the plane
    b = targets @ s.u.T - s.r[None, :]
    hit = (b > 0) | (s.r[None, :] == 0)
    hit &= np.any(targets != 0, axis=1)[:, None]
    return hit.astype(float) @ s.marks


def expected_crossings(gamma: float, phi: DirectionalDistribution, x) -> float:
    """Mean number of planes separating 0 and ``x``: ``gamma * E[(<x, U>)_+]``."""
    if gamma <= 0:
        raise InvalidParameter("gamma must be positive")
    return gamma * mean_positive_part(phi, x)


def compound_poisson_stats(lam: float, mark_dist: MarkDistribution) -> tuple[float, float]:
    """Mean and variance of a Poisson(lam) sum of i.i.d. marks."""
    if lam < 0:
        raise InvalidParameter("lambda must be >= 0")
    return lam * mark_dist.moment(1.0), lam * mark_dist.moment(2.0)


# --- Poisson tails -----------------------------------------------------------

VIOLATION_RTOL = 1e-12


@dataclass(frozen=True)
class PoissonTail:
    lam: float
    x: float
    side: str
    exact: float
    paper_bound: float
    chernoff_bound: float
    log_exact: float
    log_paper_bound: float
    log_chernoff_bound: float

    @property
    def paper_violation(self) -> bool:
        return self.log_exact > self.log_paper_bound + VIOLATION_RTOL

    @property
    def chernoff_violation(self) -> bool:
        return self.log_exact > self.log_chernoff_bound + VIOLATION_RTOL


def _log_pmf(k: np.ndarray, lam: float) -> np.ndarray:
    from scipy.special import gammaln
    return k * math.log(lam) - lam - gammaln(k + 1.0)


def _log_sum(logs: np.ndarray) -> float:
    if logs.size == 0:
        return -math.inf
    m = float(logs.max())
    if m == -math.inf:
        return -math.inf
    # fsum is exactly rounded, which subsumes Kahan compensation
    return m + math.log(math.fsum(np.exp(logs - m).tolist()))


def poisson_log_sf(k0: int, lam: float) -> float:
    """log P[P >= k0] for P ~ Poisson(lam)."""
    if k0 <= 0:
        return 0.0
    span = 40.0 * math.sqrt(lam) + 60.0
    stop = int(math.ceil(max(k0, lam) + span))
    if k0 <= lam:
        # complement is the smaller side, compute it and subtract in linear space
        lo = poisson_log_cdf(k0 - 1, lam)
        return math.log1p(-math.exp(lo)) if lo < 0 else -math.inf
    ks = np.arange(k0, stop + 1, dtype=float)
    return _log_sum(_log_pmf(ks, lam))


def poisson_log_cdf(k1: int, lam: float) -> float:
    """log P[P <= k1] for P ~ Poisson(lam)."""
    if k1 < 0:
        return -math.inf
    span = 40.0 * math.sqrt(lam) + 60.0
    if k1 >= lam:
        hi = poisson_log_sf(k1 + 1, lam)
        return math.log1p(-math.exp(hi)) if hi < 0 else -math.inf
    start = max(0, int(math.floor(k1 - span)))
    ks = np.arange(start, k1 + 1, dtype=float)
    return _log_sum(_log_pmf(ks, lam))


def _bennett(t: float) -> float:
    """(1+t) log(1+t) - t, extended by +inf below t = -1."""
    if t < -1.0:
        return math.inf
    if t == -1.0:
        return 1.0
    return (1.0 + t) * math.log1p(t) - t


def poisson_tail(lam: float, x: float, side: str = "upper") -> PoissonTail:
    """Exact Poisson deviation probability with two reference bounds.

    ``upper`` is P[P >= lam + x], ``lower`` is P[P <= lam - x]. The first
    bound is ``exp(-x^2 / (2 lam))``; the second is the Chernoff/Cramer bound
    ``exp(-lam * h(+-x / lam))`` with ``h(t) = (1+t) log(1+t) - t``.
    """
    if lam <= 0:
        raise InvalidParameter("lambda must be positive")
    if x < 0:
        raise InvalidParameter("x must be >= 0")
    if side not in ("upper", "lower"):
        raise InvalidParameter("side must be 'upper' or 'lower'")
    eps = 1e-12 * max(1.0, lam + x)
    if side == "upper":
        k0 = int(math.ceil(lam + x - eps))
        log_exact = poisson_log_sf(k0, lam)
        log_ch = -lam * _bennett(x / lam)
    else:
        k1 = int(math.floor(lam - x + eps))
        log_exact = poisson_log_cdf(k1, lam)
        log_ch = -lam * _bennett(-x / lam)
    log_paper = -x * x / (2.0 * lam)
    return PoissonTail(lam, x, side, math.exp(log_exact), math.exp(log_paper),
                       math.exp(log_ch), log_exact, log_paper, log_ch)
