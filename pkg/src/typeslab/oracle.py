"""Independent checks: brute force over sequences and a fuzzer for the type-ratio bound.

The sequence oracle never touches the type-class machinery: it lists all
``m**n`` sequences, weighs each by the product of its letter probabilities,
and decides membership through :func:`typeslab.feasible.contains` on the
exact empirical pmf.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .conditioning import Ball, PrefixQuery, TypeList, lemma_bound
from .core import Pmf, TypeVec, enumerate_types, multiplicity, total_variation
from .feasible import FeasibleSet, contains
from .weights import common_denominator

MAX_SEQUENCES = 3**12


def all_sequences(n: int, m: int) -> np.ndarray:
    """Every length-n word over ``range(m)``, one per row, in odometer order."""
    total = m**n
    if total > MAX_SEQUENCES:
        raise ValueError(f"{m}**{n} sequences is beyond the brute-force limit {MAX_SEQUENCES}")
    idx = np.arange(total, dtype=np.int64)
    powers = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % m


def _in_region(region, pmf: Pmf, counts: tuple[int, ...]) -> bool:
    if isinstance(region, FeasibleSet):
        return contains(region, pmf)
    if isinstance(region, Ball):
        return total_variation(pmf, region.center) <= region.radius
    if isinstance(region, TypeList):
        return counts in {t.counts for t in region.types}
    if isinstance(region, TypeVec):
        return counts == region.counts
    raise TypeError(f"unsupported region {region!r}")


def sequence_oracle(q: Pmf, s: FeasibleSet, n: int, regions=(), prefixes=()):
    """Conditional probabilities of ``regions`` and ``prefixes`` given the type lies in ``s``.

    Returns ``(region_values, prefix_values)`` as Fractions, or ``None`` entries
    when no sequence has its type in ``s``.  Ball regions need exact centers.
    """
    a, d = common_denominator(q)
    m = len(q)
    seqs = all_sequences(n, m)
    big = max(a) ** n >= 2**62
    letters = np.array(a, dtype=object if big else np.int64)
    weight = np.prod(letters[seqs], axis=1)
    counts = np.stack([(seqs == x).sum(axis=1) for x in range(m)], axis=1)
    keys = counts @ ((n + 1) ** np.arange(m))
    distinct, inverse = np.unique(keys, return_inverse=True)
    firsts = [int(np.flatnonzero(inverse == i)[0]) for i in range(len(distinct))]
    type_counts = [tuple(int(c) for c in counts[i]) for i in firsts]
    pmfs = [Pmf(tuple(Fraction(c, n) for c in tc)) for tc in type_counts]

    in_set = np.array([contains(s, p) for p in pmfs])[inverse]
    total = int(sum(weight[in_set].tolist()))
    if total == 0:
        return [None] * len(regions), [None] * len(prefixes)
    region_values = []
    for region in regions:
        hit = np.array([_in_region(region, p, tc) for p, tc in zip(pmfs, type_counts)])[inverse]
        region_values.append(Fraction(int(sum(weight[in_set & hit].tolist())), total))
    prefix_values = []
    for prefix in prefixes:
        prefix.check(m, n)
        hit = np.all(seqs[:, : prefix.t] == np.array(prefix.letters), axis=1)
        prefix_values.append(Fraction(int(sum(weight[in_set & hit].tolist())), total))
    return region_values, prefix_values


# -- ratio-bound fuzzing -----------------------------------------------------


@dataclass(frozen=True)
class LemmaCase:
    t1: TypeVec
    t2: TypeVec
    q: Pmf
    ratio: Fraction
    bound: Fraction

    @property
    def holds(self) -> bool:
        return self.ratio < self.bound


def random_composition(rng: random.Random, n: int, m: int) -> TypeVec:
    """Uniform draw among the compositions of n into m nonnegative parts."""
    bars = sorted(rng.sample(range(n + m - 1), m - 1))
    edges = [-1] + bars + [n + m - 1]
    return TypeVec(tuple(edges[i + 1] - edges[i] - 1 for i in range(m)))


def random_rational_pmf(rng: random.Random, m: int, max_weight: int = 20) -> Pmf:
    ks = [rng.randint(1, max_weight) for _ in range(m)]
    total = sum(ks)
    return Pmf(tuple(Fraction(k, total) for k in ks))


def lemma_fuzz(cases: int, seed: int, n_max: int = 100, m_max: int = 5,
               n_min: int = 1) -> list[LemmaCase]:
    """Random ``(t1, t2, q)`` triples with exact ratio and bound.

    ``n`` and ``m`` are uniform on ``[n_min, n_max]`` and ``[1, m_max]``; the
    two types are independent uniform compositions; ``q`` has weights
    ``k_i / sum(k)`` with ``k_i`` uniform on 1..20.
    """
    rng = random.Random(seed)
    out = []
    for _ in range(cases):
        m = rng.randint(1, m_max)
        n = rng.randint(n_min, n_max)
        q = random_rational_pmf(rng, m)
        t1 = random_composition(rng, n, m)
        t2 = random_composition(rng, n, m)
        ratio, bound = lemma_bound(t1, t2, q)
        out.append(LemmaCase(t1, t2, q, ratio, bound))
    return out


@functools.lru_cache(maxsize=None)
def lemma_threshold(m: int, search_to: int = 40, margin: int = 10) -> int:
    """Smallest n from which ``ratio < bound`` holds for every pair of n-types,
    checked until ``margin`` consecutive sizes pass (or ``search_to``).

    The bound over the ratio equals ``(n/m)^m * s(t2) / s(t1)`` with
    ``s(t) = Gamma(t) prod (t_i/n)^{t_i}``; ``s`` peaks at 1 on point masses,
    so the inequality holds for all pairs iff ``(n/m)^m * min s > 1``.
    """
    last_bad = 0
    for n in range(1, search_to + 1):
        worst = min(
            multiplicity(t) * math.prod(Fraction(c, n) ** c for c in t.counts)
            for t in enumerate_types(n, m)
        )
        if not Fraction(n, m) ** m * worst > 1:
            last_bad = n
        elif n >= last_bad + margin:
            break
    return last_bad + 1
