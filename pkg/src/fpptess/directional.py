"""Even directional distributions on the unit sphere.

Three families are supported: the isotropic law, finite symmetric atom sets
and finite mixtures of these. Each knows how to sample directions and how to
integrate ``(<x, u>)_+`` against itself, which is all the hyperplane model
needs for crossing intensities and the associated zonoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import InvalidParameter, NumericFailure
from .geometry import as_unit, as_vec, uniform_sphere

WEIGHT_TOL = 1e-12
RANK_TOL = 1e-9
QUAD_RTOL = 1e-8


class DirectionalDistribution:
    """Base class. Subclasses are immutable."""

    dim: int

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def mean_positive_part(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def mean_positive_part_many(self, xs: np.ndarray) -> np.ndarray:
        """Row-wise ``mean_positive_part`` for an (n, d) array."""
        return np.array([self.mean_positive_part(x) for x in np.atleast_2d(xs)])

    def span_rank(self) -> int:
        raise NotImplementedError

    def to_spec(self) -> str:
        raise NotImplementedError


@lru_cache(maxsize=None)
def _isotropic_constant(d: int) -> float:
    """E[(U_1)_+] for U uniform on the sphere in R^d, by quadrature.

    The first coordinate of U has density proportional to
    ``(1 - t^2)^((d-3)/2)`` on [-1, 1].
    """
    if d == 2:
        return 1.0 / math.pi
    alpha = (d - 3) / 2.0
    if alpha == 0.0:
        num, num_err = 0.5, 0.0
        den, den_err = 2.0, 0.0
    else:
        num, num_err = integrate.quad(lambda t: t * (1.0 + t) ** alpha, 0.0, 1.0,
                                      weight="alg", wvar=(0.0, alpha),
                                      epsabs=0.0, epsrel=1e-12)
        den, den_err = integrate.quad(lambda t: 1.0, -1.0, 1.0, weight="alg",
                                      wvar=(alpha, alpha), epsabs=0.0, epsrel=1e-12)
    val = num / den
    rel = (num_err / num if num else 0.0) + (den_err / den if den else 0.0)
    if not np.isfinite(val) or rel > QUAD_RTOL:
        raise NumericFailure("isotropic mean-positive-part quadrature did not converge",
                             {"d": d, "num": num, "num_err": num_err,
                              "den": den, "den_err": den_err})
    return float(val)


@dataclass(frozen=True)
class Isotropic(DirectionalDistribution):
    dim: int = 2

    def __post_init__(self):
        if self.dim < 2:
            raise InvalidParameter("dimension must be >= 2")

    def sample(self, rng, n):
        return uniform_sphere(rng, n, self.dim)

    def mean_positive_part(self, x):
        x = as_vec(x)
        return float(np.linalg.norm(x)) * _isotropic_constant(self.dim)

    def mean_positive_part_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.linalg.norm(xs, axis=1) * _isotropic_constant(self.dim)

    def span_rank(self):
        return self.dim

    def to_spec(self):
        return "isotropic" if self.dim == 2 else f"isotropic:{self.dim}"


class SymmetricAtoms(DirectionalDistribution):
    """Finite even law: each given atom ``(u, w)`` is stored as ``(+-u, w/2)``.

    Weights are normalized to sum to one. Unless ``allow_degenerate`` is set,
    the atoms must span R^d (the law is not carried by a great subsphere).
    """

    def __init__(self, atoms, allow_degenerate: bool = False):
        atoms = list(atoms)
        if not atoms:
            raise InvalidParameter("at least one atom is required")
        dirs = np.array([as_unit(u) for u, _ in atoms])
        w = np.array([float(w) for _, w in atoms])
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise InvalidParameter("atom weights must be positive and finite")
        w = w / w.sum()
        self.dim = dirs.shape[1]
        self.base_directions = dirs
        self.base_weights = w
        self.directions = np.vstack([dirs, -dirs])
        self.weights = np.concatenate([w, w]) / 2.0
        if abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidParameter("weights do not sum to one")
        if not allow_degenerate and self.span_rank() < self.dim:
            raise InvalidParameter("atoms are concentrated on a great subsphere")

    def __repr__(self):
        return f"SymmetricAtoms({self.to_spec()!r})"

    def __eq__(self, other):
        return (isinstance(other, SymmetricAtoms)
                and np.array_equal(self.directions, other.directions)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.directions.tobytes(), self.weights.tobytes()))

    def sample(self, rng, n):
        idx = rng.choice(len(self.weights), size=n, p=self.weights)
        return self.directions[idx]

    # the law is even, so E[(<x,U>)_+] = E|<x,U>| / 2; summing over the base
    # atoms makes the value exactly symmetric under x -> -x
    def mean_positive_part(self, x):
        x = as_vec(x)
        return float(0.5 * np.sum(self.base_weights * np.abs(self.base_directions @ x)))

    def mean_positive_part_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return 0.5 * (np.abs(xs @ self.base_directions.T) @ self.base_weights)

    def span_rank(self):
        return int(np.linalg.matrix_rank(self.directions, tol=RANK_TOL))

    def to_spec(self):
        parts = []
        for u, w in zip(self.base_directions, self.base_weights):
            parts.append(",".join(repr(float(c)) for c in u) + ":" + repr(float(w)))
        return "atoms:" + ";".join(parts)


class Mixture(DirectionalDistribution):
    def __init__(self, components):
        components = list(components)
        if not components:
            raise InvalidParameter("empty mixture")
        dists = [c for c, _ in components]
        w = np.array([float(w) for _, w in components])
        if np.any(w <= 0):
            raise InvalidParameter("mixture weights must be positive")
        dims = {c.dim for c in dists}
        if len(dims) != 1:
            raise InvalidParameter("mixture components differ in dimension")
        self.dim = dims.pop()
        self.components = tuple(dists)
        self.weights = w / w.sum()
        if self.span_rank() < self.dim:
            raise InvalidParameter("mixture is concentrated on a great subsphere")

    def __repr__(self):
        return f"Mixture({self.to_spec()!r})"

    def sample(self, rng, n):
        which = rng.choice(len(self.components), size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for i, comp in enumerate(self.components):
            mask = which == i
            k = int(mask.sum())
            if k:
                out[mask] = comp.sample(rng, k)
        return out

    def mean_positive_part(self, x):
        return float(sum(w * c.mean_positive_part(x)
                         for c, w in zip(self.components, self.weights)))

    def mean_positive_part_many(self, xs):
        return sum(w * c.mean_positive_part_many(xs)
                   for c, w in zip(self.components, self.weights))

    def span_rank(self):
        if any(c.span_rank() == self.dim for c in self.components):
            return self.dim
        dirs = np.vstack(_atom_directions(self))
        return int(np.linalg.matrix_rank(dirs, tol=RANK_TOL))

    def to_spec(self):
        return "mixture:" + "|".join(f"{float(w)!r}*{c.to_spec()}"
                                     for c, w in zip(self.components, self.weights))


def _atom_directions(phi):
    if isinstance(phi, SymmetricAtoms):
        return [phi.directions]
    if isinstance(phi, Mixture):
        return [d for c in phi.components for d in _atom_directions(c)]
    return [np.eye(phi.dim)]


def sample_direction(phi: DirectionalDistribution, rng: np.random.Generator) -> np.ndarray:
    return phi.sample(rng, 1)[0]


def mean_positive_part(phi: DirectionalDistribution, x) -> float:
    """Integral of ``max(<x, u>, 0)`` against ``phi``."""
    x = as_vec(x)
    if x.shape[0] != phi.dim:
        raise InvalidParameter(f"vector has dimension {x.shape[0]}, law has {phi.dim}")
    return phi.mean_positive_part(x)


def zonoid_support(phi: DirectionalDistribution, gamma: float, x) -> float:
    """Support function ``gamma * E|<x, U>|`` of the associated zonoid."""
    if gamma <= 0:
        raise InvalidParameter("gamma must be positive")
    # |t| = t_+ + (-t)_+ and phi is even
    return 2.0 * gamma * mean_positive_part(phi, x)


def _parse_atoms(body: str, allow_degenerate=False) -> SymmetricAtoms:
    atoms = []
    for item in body.split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            coords, w = item.split(":")
            u = np.array([float(c) for c in coords.split(",")])
            w = float(w)
        except ValueError as exc:
            raise InvalidParameter(f"bad atom {item!r}") from exc
        n = np.linalg.norm(u)
        if n == 0:
            raise InvalidParameter("zero atom direction")
        atoms.append((u / n, w))
    return SymmetricAtoms(atoms, allow_degenerate=allow_degenerate)


def parse_phi(text: str) -> DirectionalDistribution:
    """Parse ``isotropic[:d]``, ``atoms:x,y:w;...`` or ``mixture:w*spec|w*spec``.

    Atom directions in config text are normalized (they are often given as
    ``1,1``); the constructor itself still insists on unit input.
    """
    text = text.strip()
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    if kind == "isotropic":
        return Isotropic(int(body) if body else 2)
    if kind == "atoms":
        return _parse_atoms(body)
    if kind == "mixture":
        comps = []
        for part in body.split("|"):
            w, sep, spec = part.partition("*")
            if not sep:
                raise InvalidParameter(f"mixture component {part!r} lacks 'w*'")
            sub_kind = spec.strip().split(":")[0].lower()
            if sub_kind == "mixture":
                raise InvalidParameter("nested mixtures are not supported in config text")
            sub = (_parse_atoms(spec.partition(":")[2], allow_degenerate=True)
                   if sub_kind == "atoms" else parse_phi(spec))
            comps.append((sub, float(w)))
        return Mixture(comps)
    raise InvalidParameter(f"unknown directional distribution {text!r}")
