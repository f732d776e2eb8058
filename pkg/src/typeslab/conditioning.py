"""Finite-n conditional probabilities of types and sequence prefixes.

Every quantity conditions on the type falling in the feasible set ``s``.
Two weightings are available: ``"source"`` uses ``pi(nu; q)`` and
``"jeffreys"`` uses ``pi(nu; q) * pi(nq; nu)``, the chance that ``nu`` was
drawn from ``q`` and in turn reproduces the counts ``nq``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    Alphabet,
    Number,
    Pmf,
    TypeVec,
    kl_divergence,
    log_type_probability,
    total_variation,
    type_probability,
)
from .feasible import EmptyTypeSet, FeasibleSet, feasible_type_array, type_mask
from .projections import ProjectionSet
from . import weights as W

WEIGHTINGS = ("source", "jeffreys")
BALL_SLACK = 1e-12


class DegenerateWeights(ValueError):
    """Every type of the conditioning set has weight zero."""


class OverlappingBalls(ValueError):
    pass


# -- regions -----------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Closed total-variation ball ``{nu : d(nu, center) <= radius}``."""

    center: Pmf
    radius: Number

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def mask(self, counts: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts)
        if len(counts) == 0:
            return np.zeros(0, dtype=bool)
        n = int(counts[0].sum())
        radius = self.radius
        if self.center.exact and isinstance(radius, (int, Fraction)):
            scale = math.lcm(*(Fraction(c).denominator for c in self.center.weights),
                             Fraction(radius).denominator)
            target = np.array([int(c * n * scale) for c in self.center.weights], dtype=object)
            dist = np.abs(counts.astype(object) * scale - target).sum(axis=1)
            return np.asarray(dist <= int(radius * scale) * n, dtype=bool)
        dist = np.abs(counts / n - self.center.as_array()).sum(axis=1)
        return dist <= float(radius) + BALL_SLACK


@dataclass(frozen=True)
class TypeList:
    types: tuple[TypeVec, ...]

    def mask(self, counts: np.ndarray) -> np.ndarray:
        wanted = {t.counts for t in self.types}
        return np.array([tuple(int(c) for c in row) in wanted for row in counts], dtype=bool)


def region_mask(region, counts: np.ndarray) -> np.ndarray:
    if isinstance(region, FeasibleSet):
        return type_mask(region, counts)
    if isinstance(region, TypeVec):
        return TypeList((region,)).mask(counts)
    if isinstance(region, (Ball, TypeList)):
        return region.mask(counts)
    if isinstance(region, (list, tuple)):
        return TypeList(tuple(region)).mask(counts)
    raise TypeError(f"unsupported region {region!r}")


@dataclass(frozen=True)
class PrefixQuery:
    """The event ``X_1 = x_1, ..., X_t = x_t``; letters are alphabet indices."""

    letters: tuple[int, ...]

    def __post_init__(self):
        letters = tuple(int(x) for x in self.letters)
        if not letters:
            raise ValueError("a prefix needs at least one letter")
        if any(x < 0 for x in letters):
            raise ValueError("letter indices are nonnegative")
        object.__setattr__(self, "letters", letters)

    @property
    def t(self) -> int:
        return len(self.letters)

    @classmethod
    def from_labels(cls, labels: Sequence[str], alphabet: Alphabet) -> PrefixQuery:
        return cls(tuple(alphabet.index(x) for x in labels))

    def check(self, m: int, n: int | None = None):
        if max(self.letters) >= m:
            raise ValueError(f"prefix letter index {max(self.letters)} outside alphabet of {m}")
        if n is not None and self.t > n:
            raise ValueError(f"prefix of length {self.t} is longer than n={n}")


# -- weighted type populations -----------------------------------------------


class _Population:
    """Weights of the n-types of ``s``, with masses of sub-regions."""

    def __init__(self, q: Pmf, s: FeasibleSet, n: int, mode: str, weighting: str):
        if len(q) != s.m:
            raise ValueError(f"source has {len(q)} letters, set has {s.m}")
        if weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if weighting == "jeffreys":
            if not q.exact:
                raise ValueError("Jeffreys weighting needs a rational source distribution")
            W.source_counts(q, n)
        self.n = n
        self.mode = W.resolve_mode(mode, q, n)
        self.rows = feasible_type_array(s, n)
        if len(self.rows) == 0:
            raise EmptyTypeSet(s.name, n)
        if self.mode == "exact":
            fn = W.jeffreys_exact_weights if weighting == "jeffreys" else W.exact_weights
            self.weights, self.denominator = fn(self.rows, q)
            self.total = sum(self.weights)
            if self.total == 0:
                raise DegenerateWeights(f"all {n}-types of the set have zero weight")
        else:
            fn = W.jeffreys_log_weights if weighting == "jeffreys" else W.log_weights
            self.logw = fn(self.rows, q)
            self.shift = float(np.max(self.logw))
            if self.shift == -math.inf:
                raise DegenerateWeights(f"all {n}-types of the set have zero weight")
            self.total = W.fsum_exp(self.logw, self.shift)

    def mass(self, mask: np.ndarray) -> Number:
        if self.mode == "exact":
            return Fraction(sum(w for w, keep in zip(self.weights, mask) if keep), self.total)
        return W.fsum_exp(self.logw[mask], self.shift) / self.total

    def weighted_mass(self, factor_num, factor_den) -> Number:
        """Mass with each type weight multiplied by ``factor_num / factor_den``."""
        if self.mode == "exact":
            num = sum(w * int(f) for w, f in zip(self.weights, factor_num) if f)
            return Fraction(num, self.total * factor_den)
        factor = np.asarray(factor_num, dtype=float) / float(factor_den)
        return math.fsum((factor * np.exp(self.logw - self.shift)).tolist()) / self.total

    def normalizer(self) -> Number:
        if self.mode == "exact":
            return Fraction(self.total, self.denominator)
        return math.exp(self.log_normalizer())

    def log_normalizer(self) -> float:
        if self.mode == "exact":
            return math.log(self.total) - math.log(self.denominator)
        return self.shift + math.log(self.total)


def conditional_mass(q: Pmf, s: FeasibleSet, n: int, region, mode: str = "auto") -> Number:
    """``pi(nu in region | nu in s)`` for n iid draws from ``q``."""
    pop = _Population(q, s, n, mode, "source")
    return pop.mass(region_mask(region, pop.rows))


def jeffreys_conditional_mass(q: Pmf, s: FeasibleSet, n: int, region,
                              mode: str = "exact") -> Number:
    """Conditional mass of ``region`` under the two-way weights ``pi(nu; q) pi(nq; nu)``.

    ``q`` must be rational and ``n`` a multiple of the lcm of its denominators.
    """
    pop = _Population(q, s, n, mode, "jeffreys")
    return pop.mass(region_mask(region, pop.rows))


@dataclass(frozen=True)
class ConditionalReport:
    n: int
    centers: tuple[Pmf, ...]
    epsilon: Number
    masses: tuple[Number, ...]
    complement: Number
    normalizer: Number
    log_normalizer: float
    mode: str
    weighting: str = "source"


def default_epsilon(centers: Sequence[Pmf]) -> float:
    """``min(0.1, half the smallest pairwise distance between centers)``."""
    eps = 0.1
    for a, b in itertools.combinations(centers, 2):
        eps = min(eps, float(total_variation(a.to_float(), b.to_float())) / 2)
    if eps <= 0:
        raise OverlappingBalls("two centers coincide")
    return eps


def ball_concentrations(q: Pmf, s: FeasibleSet, n: int, centers, epsilon: Number | None = None,
                        mode: str = "auto", weighting: str = "source") -> ConditionalReport:
    """Conditional mass of the ``epsilon``-ball around each center, plus the rest."""
    if isinstance(centers, ProjectionSet):
        centers = centers.points
    centers = tuple(centers)
    if not centers:
        raise ValueError("no centers given")
    if epsilon is None:
        epsilon = default_epsilon(centers)
    for a, b in itertools.combinations(centers, 2):
        if float(total_variation(a.to_float(), b.to_float())) < 2 * float(epsilon):
            raise OverlappingBalls(f"balls of radius {epsilon} around {a} and {b} overlap")
    pop = _Population(q, s, n, mode, weighting)
    masks = [Ball(c, epsilon).mask(pop.rows) for c in centers]
    hits = np.sum(masks, axis=0)
    if np.any(hits > 1):
        raise OverlappingBalls(f"some {n}-type lies in two balls of radius {epsilon}")
    masses = tuple(pop.mass(mk) for mk in masks)
    complement = pop.mass(hits == 0)
    return ConditionalReport(n, centers, epsilon, masses, complement, pop.normalizer(),
                             pop.log_normalizer(), pop.mode, weighting)


# -- prefixes ----------------------------------------------------------------


def _falling(x: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= x - j
    return out


def prefix_given_type(prefix: PrefixQuery, t: TypeVec) -> Fraction:
    """Chance a uniformly random sequence of type ``t`` starts with ``prefix``.

    Draws without replacement from an urn holding the counts of ``t``.
    """
    prefix.check(t.m, t.n)
    out = Fraction(1)
    seen: Counter = Counter()
    for l, x in enumerate(prefix.letters):
        out *= Fraction(t.counts[x] - seen[x], t.n - l)
        seen[x] += 1
    return out


def _prefix_factors(prefix: PrefixQuery, rows: np.ndarray, exact: bool):
    """Numerators ``prod_x falling(n_x, r_x)`` per row and the shared ``falling(n, t)``."""
    n = int(rows[0].sum())
    need = Counter(prefix.letters)
    if exact:
        nums = []
        for row in rows:
            v = 1
            for x, r in need.items():
                v *= _falling(int(row[x]), r)
            nums.append(v)
        return nums, _falling(n, prefix.t)
    nums = np.ones(len(rows))
    for x, r in need.items():
        for j in range(r):
            nums = nums * np.maximum(rows[:, x] - j, 0)
    return nums, float(_falling(n, prefix.t))


def prefix_law_exact(q: Pmf, s: FeasibleSet, n: int, prefix: PrefixQuery, mode: str = "auto",
                     weighting: str = "source") -> Number:
    """``pi(X_1..X_t = prefix | nu in s)``: urn probabilities averaged over the types of ``s``."""
    prefix.check(s.m, n)
    pop = _Population(q, s, n, mode, weighting)
    nums, den = _prefix_factors(prefix, pop.rows, pop.mode == "exact")
    return pop.weighted_mass(nums, den)


def mixture_prediction(proj, prefix: PrefixQuery) -> Number:
    """Equal-weight mixture over the projections of the iid chance of ``prefix``."""
    points = proj.points if isinstance(proj, ProjectionSet) else tuple(proj)
    if not points:
        raise ValueError("no projections to mix")
    prefix.check(len(points[0]))
    exact = all(p.exact for p in points)
    terms = []
    for p in points:
        term = Fraction(1) if exact else 1.0
        for x in prefix.letters:
            term *= p.weights[x] if exact else float(p.weights[x])
        terms.append(term)
    if exact:
        return sum(terms) / len(terms)
    return math.fsum(terms) / len(terms)


# -- type-ratio bound and residual mass ----------------------------------------


def lemma_bound(t1: TypeVec, t2: TypeVec, q: Pmf) -> tuple[Number, Number]:
    """``(pi(t1; q) / pi(t2; q), (n/m)^m * prod (q_i/nu_i)^{n nu_i} / prod (q_i/nu'_i)^{n nu'_i})``.

    Exact for rational ``q``.  The caller decides whether ``ratio < bound``.
    """
    if t1.m != t2.m or t1.n != t2.n or t1.m != len(q):
        raise ValueError("types and source must share n and alphabet")
    for t in (t1, t2):
        if any(c and w == 0 for c, w in zip(t.counts, q.weights)):
            raise ValueError(f"type {t.counts} has zero probability under q")
    n, m = t1.n, t1.m
    if q.exact:
        ratio = type_probability(t1, q) / type_probability(t2, q)
        bound = Fraction(n, m) ** m
        for c1, c2, w in zip(t1.counts, t2.counts, q.weights):
            if c1:
                bound *= (w * n / c1) ** c1
            if c2:
                bound /= (w * n / c2) ** c2
        return ratio, bound
    log_ratio = log_type_probability(t1, q) - log_type_probability(t2, q)
    log_bound = m * math.log(n / m)
    for c1, c2, w in zip(t1.counts, t2.counts, q.weights):
        if c1:
            log_bound += c1 * math.log(w * n / c1)
        if c2:
            log_bound -= c2 * math.log(w * n / c2)
    return math.exp(log_ratio), math.exp(log_bound)


def residual_ratio(q: Pmf, s: FeasibleSet, n: int, mode: str = "auto") -> Number:
    """Mass of the n-types of ``s`` other than its I-projections on the types,
    relative to the probability of such an I-projection.

    The I-projections here are the n-types of ``s`` minimizing ``I(nu || q)``
    (float ties within 1e-12 relative); the largest of their probabilities is
    the reference.
    """
    pop = _Population(q, s, n, mode, "source")
    rows = pop.rows
    kls = np.array([kl_divergence(TypeVec(tuple(int(c) for c in r)).pmf(), q) for r in rows])
    best = float(np.min(kls))
    top = np.isclose(kls, best, rtol=1e-12, atol=1e-15)
    if pop.mode == "exact":
        ref = max(w for w, keep in zip(pop.weights, top) if keep)
        rest = sum(w for w, keep in zip(pop.weights, top) if not keep)
        return Fraction(rest, ref)
    ref = float(np.max(pop.logw[top]))
    return W.fsum_exp(pop.logw[~top], ref)
