"""Alphabets, pmfs and n-types, with exact and log-domain combinatorics.

Conventions fixed for the whole package: natural logarithms, ``0 * log 0 = 0``
and ``0 ** 0 = 1``.  Exact values are ``int`` / ``fractions.Fraction``; the
log-domain path works with floats throughout.
"""

from __future__ import annotations

import functools
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

import numpy as np
from scipy.special import gammaln

Number = Union[int, Fraction, float]

FLOAT_SUM_TOL = 1e-12


def as_number(x) -> Number:
    """Coerce ``x`` to an exact Fraction when possible, else to float.

    Strings are parsed as rationals (``"3/4"``, ``"0.25"``, ``"2"``).
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, np.integer):
        return Fraction(int(x))
    raise TypeError(f"cannot interpret {x!r} as a number")


@dataclass(frozen=True)
class Alphabet:
    labels: tuple[str, ...]
    values: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ValueError("alphabet needs at least one letter")
        if len(set(labels)) != len(labels):
            raise ValueError(f"alphabet labels must be distinct: {labels}")
        object.__setattr__(self, "labels", labels)
        if self.values is not None:
            values = tuple(as_number(v) for v in self.values)
            if len(values) != len(labels):
                raise ValueError(
                    f"alphabet has {len(labels)} labels but {len(values)} values"
                )
            object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"letter {label!r} not in alphabet {self.labels}") from None

    @classmethod
    def numeric(cls, values: Iterable) -> Alphabet:
        values = tuple(as_number(v) for v in values)
        return cls(tuple(_format_number(v) for v in values), values)

    @classmethod
    def of_size(cls, m: int) -> Alphabet:
        return cls(tuple(chr(ord("a") + i) if m <= 26 else f"x{i + 1}" for i in range(m)))


@dataclass(frozen=True)
class Pmf:
    """Probability vector on a finite alphabet.

    Exact when every weight is rational, otherwise stored as floats.
    """

    weights: tuple

    def __post_init__(self):
        ws = tuple(as_number(w) for w in self.weights)
        if not ws:
            raise ValueError("empty pmf")
        if any(isinstance(w, float) for w in ws):
            ws = tuple(float(w) for w in ws)
            if any(not math.isfinite(w) or w < 0 for w in ws):
                raise ValueError(f"pmf weights must be finite and nonnegative: {ws}")
            if abs(math.fsum(ws) - 1.0) > FLOAT_SUM_TOL:
                raise ValueError(f"pmf weights sum to {math.fsum(ws)!r}, not 1")
        else:
            if any(w < 0 for w in ws):
                raise ValueError(f"pmf weights must be nonnegative: {ws}")
            if sum(ws) != 1:
                raise ValueError(f"pmf weights sum to {sum(ws)}, not 1")
        object.__setattr__(self, "weights", ws)

    @property
    def exact(self) -> bool:
        return not isinstance(self.weights[0], float)

    @property
    def m(self) -> int:
        return len(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    def __iter__(self):
        return iter(self.weights)

    def as_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def to_float(self) -> Pmf:
        return Pmf(tuple(float(w) for w in self.weights))

    def permute(self, perm: Sequence[int]) -> Pmf:
        """Relabel: new letter ``i`` is old letter ``perm[i]``."""
        return Pmf(tuple(self.weights[j] for j in perm))

    @classmethod
    def uniform(cls, m: int) -> Pmf:
        return cls((Fraction(1, m),) * m)

    def __str__(self) -> str:
        return "(" + ", ".join(_format_number(w) for w in self.weights) + ")"


@dataclass(frozen=True)
class TypeVec:
    """An n-type: nonnegative letter counts summing to n."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts:
            raise ValueError("empty type")
        if any(c < 0 for c in counts):
            raise ValueError(f"counts must be nonnegative: {counts}")
        if sum(counts) < 1:
            raise ValueError("a type needs n >= 1")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def m(self) -> int:
        return len(self.counts)

    def pmf(self) -> Pmf:
        n = self.n
        return Pmf(tuple(Fraction(c, n) for c in self.counts))

    def permute(self, perm: Sequence[int]) -> TypeVec:
        return TypeVec(tuple(self.counts[j] for j in perm))

    def __iter__(self):
        return iter(self.counts)


def _format_number(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def _check_same_alphabet(*items) -> int:
    sizes = {len(x) if not isinstance(x, TypeVec) else x.m for x in items}
    if len(sizes) != 1:
        raise ValueError(f"alphabet sizes differ: {sorted(sizes)}")
    return sizes.pop()


# -- multiplicities and type probabilities ---------------------------------


@functools.lru_cache(maxsize=None)
def _factorial(k: int) -> int:
    return math.factorial(k)


def multiplicity(t: TypeVec) -> int:
    """Number of sequences with type ``t``: ``n! / prod(n_i!)``."""
    result = _factorial(t.n)
    for c in t.counts:
        result //= _factorial(c)
    return result


def log_multiplicity(t: TypeVec) -> float:
    return math.lgamma(t.n + 1) - math.fsum(math.lgamma(c + 1) for c in t.counts)


def type_probability(t: TypeVec, q: Pmf) -> Number:
    """Probability that n iid draws from ``q`` have type ``t``.

    Exact (Fraction) when ``q`` is exact, otherwise a float computed through
    :func:`log_type_probability`.
    """
    _check_same_alphabet(t, q)
    if not q.exact:
        return math.exp(log_type_probability(t, q))
    p = Fraction(multiplicity(t))
    for c, qi in zip(t.counts, q.weights):
        if c:
            p *= qi**c
    return p


def log_type_probability(t: TypeVec, q: Pmf) -> float:
    """Natural log of :func:`type_probability`; ``-inf`` for impossible types."""
    _check_same_alphabet(t, q)
    total = log_multiplicity(t)
    terms = []
    for c, qi in zip(t.counts, q.weights):
        if c == 0:
            continue
        if qi == 0:
            return -math.inf
        terms.append(c * math.log(qi))
    return total + math.fsum(terms)


# -- enumeration -------------------------------------------------------------


def enumerate_types(n: int, m: int) -> Iterator[TypeVec]:
    """All n-types on m letters, ascending lexicographic order of counts."""
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")

    def rec(rest: int, slots: int):
        if slots == 1:
            yield (rest,)
            return
        for first in range(rest + 1):
            for tail in rec(rest - first, slots - 1):
                yield (first,) + tail

    for counts in rec(n, m):
        yield TypeVec(counts)


def count_types(n: int, m: int) -> int:
    return math.comb(n + m - 1, m - 1)


@functools.lru_cache(maxsize=32)
def _type_array(n: int, m: int) -> np.ndarray:
    if m == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for first in range(n + 1):
        tail = _type_array(n - first, m - 1)
        block = np.empty((tail.shape[0], m), dtype=np.int64)
        block[:, 0] = first
        block[:, 1:] = tail
        blocks.append(block)
    out = np.concatenate(blocks)
    out.setflags(write=False)
    return out


def type_array(n: int, m: int) -> np.ndarray:
    """Counts of every n-type as an ``(N, m)`` int array, same order as
    :func:`enumerate_types`.  The array is read-only and cached."""
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    return _type_array(n, m)


def log_type_probabilities(counts: np.ndarray, q: Pmf) -> np.ndarray:
    """Vectorized :func:`log_type_probability` over rows of ``counts``."""
    counts = np.asarray(counts)
    n = counts.sum(axis=1)
    qa = q.as_array()
    with np.errstate(divide="ignore"):
        logq = np.log(qa)
    # 0 * log 0 = 0: zero counts never pick up a -inf.
    per_letter = np.where(counts > 0, counts * logq, 0.0) - gammaln(counts + 1)
    return gammaln(n + 1) + per_letter.sum(axis=1)


# -- distances ---------------------------------------------------------------


def total_variation(a: Pmf, b: Pmf) -> Number:
    """L1 distance ``sum |a_i - b_i|`` (ranges over [0, 2])."""
    _check_same_alphabet(a, b)
    if a.exact and b.exact:
        return sum(abs(x - y) for x, y in zip(a.weights, b.weights))
    return math.fsum(abs(float(x) - float(y)) for x, y in zip(a.weights, b.weights))


def kl_divergence(p: Pmf, q: Pmf) -> float:
    """Kullback-Leibler divergence ``I(p || q)`` in nats; may be ``inf``."""
    _check_same_alphabet(p, q)
    terms = []
    for pi, qi in zip(p.weights, q.weights):
        if pi == 0:
            continue
        if qi == 0:
            return math.inf
        terms.append(float(pi) * math.log(pi / qi if p.exact and q.exact else float(pi) / float(qi)))
    return math.fsum(terms)


def symmetric_kl(p: Pmf, q: Pmf) -> float:
    """Jeffreys divergence ``I(p || q) + I(q || p)``."""
    return kl_divergence(p, q) + kl_divergence(q, p)
