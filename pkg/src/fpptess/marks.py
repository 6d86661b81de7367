"""Passage-time (mark) distributions on [0, inf)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter


class MarkDistribution:
    def mean(self) -> float:
        return self.moment(1.0)

    def moment(self, order: float) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def p_zero(self) -> float:
        """P[X = 0]."""
        return 0.0

    def to_spec(self) -> str:
        raise NotImplementedError

    def scaled(self, c: float) -> "MarkDistribution":
        """Law of ``c * X``; sampling with the same stream gives exactly ``c`` times the draws."""
        raise NotImplementedError


@dataclass(frozen=True)
class Deterministic(MarkDistribution):
    c: float = 1.0

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise InvalidParameter("deterministic mark must be finite and >= 0")

    def moment(self, order):
        return float(self.c) ** order

    def sample(self, rng, n):
        return np.full(n, float(self.c))

    def p_zero(self):
        return 1.0 if self.c == 0 else 0.0

    def to_spec(self):
        return f"det:{self.c!r}"

    def scaled(self, c):
        return Deterministic(self.c * c)


@dataclass(frozen=True)
class Exponential(MarkDistribution):
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidParameter("exponential rate must be positive")

    def moment(self, order):
        return math.gamma(order + 1.0) / self.rate ** order

    def sample(self, rng, n):
        return rng.standard_exponential(n) / self.rate

    def to_spec(self):
        return f"exp:{self.rate!r}"

    def scaled(self, c):
        return Exponential(self.rate / c)


@dataclass(frozen=True)
class Uniform(MarkDistribution):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not (0 <= self.a < self.b):
            raise InvalidParameter("uniform marks need 0 <= a < b")

    def moment(self, order):
        p = order + 1.0
        return (self.b ** p - self.a ** p) / (p * (self.b - self.a))

    def sample(self, rng, n):
        return self.a + (self.b - self.a) * rng.random(n)

    def to_spec(self):
        return f"unif:{self.a!r},{self.b!r}"

    def scaled(self, c):
        return Uniform(self.a * c, self.b * c)


@dataclass(frozen=True)
class Pareto(MarkDistribution):
    """Heavy-tailed marks, ``P[X > t] = (xm / t)**alpha`` for ``t >= xm``."""

    alpha: float
    xm: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.xm > 0):
            raise InvalidParameter("pareto needs alpha > 0 and xm > 0")

    def moment(self, order):
        if order >= self.alpha:
            return math.inf
        return self.alpha * self.xm ** order / (self.alpha - order)

    def sample(self, rng, n):
        return self.xm * (1.0 - rng.random(n)) ** (-1.0 / self.alpha)

    def to_spec(self):
        return f"pareto:{self.alpha!r},{self.xm!r}"

    def scaled(self, c):
        return Pareto(self.alpha, self.xm * c)


@dataclass(frozen=True)
class ZeroAtomMix(MarkDistribution):
    """With probability ``p0`` the mark is 0, otherwise drawn from ``base``."""

    p0: float
    base: MarkDistribution

    def __post_init__(self):
        if not (0 <= self.p0 < 1):
            raise InvalidParameter("p0 must lie in [0, 1)")

    def moment(self, order):
        return (1.0 - self.p0) * self.base.moment(order)

    def sample(self, rng, n):
        zero = rng.random(n) < self.p0
        x = self.base.sample(rng, n)
        x[zero] = 0.0
        return x

    def p_zero(self):
        return self.p0 + (1.0 - self.p0) * self.base.p_zero()

    def to_spec(self):
        return f"zeromix:{self.p0!r},{self.base.to_spec()}"

    def scaled(self, c):
        return ZeroAtomMix(self.p0, self.base.scaled(c))


def mark_mean(m: MarkDistribution) -> float:
    return m.mean()


def mark_moment(m: MarkDistribution, order: float) -> float:
    """E[X**order] for order >= 1; ``inf`` when the moment diverges."""
    if order < 1:
        raise InvalidParameter("moment order must be >= 1")
    return m.moment(float(order))


def sample_mark(m: MarkDistribution, rng: np.random.Generator) -> float:
    return float(m.sample(rng, 1)[0])


def parse_marks(text: str, dim: int = 2, allow_heavy: bool = False) -> MarkDistribution:
    """Parse ``det:c``, ``exp:rate``, ``unif:a,b``, ``pareto:alpha[,xm]``, ``zeromix:p0,<spec>``.

    Marks without a finite moment of some order above ``dim`` are rejected
    unless ``allow_heavy`` is set, in which case a warning is issued.
    """
    text = text.strip()
    kind, _, body = text.partition(":")
    kind = kind.lower()
    try:
        if kind == "det":
            m = Deterministic(float(body))
        elif kind == "exp":
            m = Exponential(float(body))
        elif kind == "unif":
            a, b = body.split(",")
            m = Uniform(float(a), float(b))
        elif kind == "pareto":
            vals = [float(v) for v in body.split(",")]
            m = Pareto(*vals)
        elif kind == "zeromix":
            p0, _, rest = body.partition(",")
            m = ZeroAtomMix(float(p0), parse_marks(rest, dim, allow_heavy=True))
        else:
            raise InvalidParameter(f"unknown mark distribution {text!r}")
    except (ValueError, TypeError) as exc:
        if isinstance(exc, InvalidParameter):
            raise
        raise InvalidParameter(f"cannot parse mark spec {text!r}") from exc
    if not _has_moment_above(m, dim):
        if not allow_heavy:
            raise InvalidParameter(
                f"mark law {text!r} has no finite moment of order > {dim}")
        warnings.warn(f"mark law {text!r} violates the moment condition", RuntimeWarning)
    return m


def _has_moment_above(m: MarkDistribution, dim: int) -> bool:
    if isinstance(m, Pareto):
        return m.alpha > dim
    if isinstance(m, ZeroAtomMix):
        return _has_moment_above(m.base, dim)
    return True
