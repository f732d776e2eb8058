"""Type weights over arrays of n-types, exact or in the log domain.

Exact weights are integers over a denominator shared by every type of the
same n, so sums and ratios stay in integer arithmetic until the final
Fraction.  With ``q_i = a_i / d`` in lowest common terms,
``pi(nu; q) = Gamma(nu) * prod a_i**n_i / d**n``.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .core import Pmf, log_type_probabilities

EXACT_BOUND = 60
MODES = ("auto", "exact", "log")


def resolve_mode(mode: str, q: Pmf, n: int, exact_bound: int = EXACT_BOUND) -> str:
    """Pick ``"exact"`` or ``"log"``; ``auto`` is exact for rational ``q`` and ``n <= exact_bound``."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "exact":
        if not q.exact:
            raise ValueError("exact mode needs a rational source distribution")
        return "exact"
    if mode == "log":
        return "log"
    return "exact" if q.exact and n <= exact_bound else "log"


def common_denominator(q: Pmf) -> tuple[list[int], int]:
    """Integers ``a`` and ``d`` with ``q_i = a_i / d``, ``d`` the lcm of denominators."""
    if not q.exact:
        raise ValueError("source distribution is not rational")
    d = math.lcm(*(Fraction(w).denominator for w in q.weights))
    return [int(w * d) for w in q.weights], d


def jeffreys_period(q: Pmf) -> int:
    """Smallest n for which ``n * q`` is a vector of counts."""
    return common_denominator(q)[1]


def source_counts(q: Pmf, n: int) -> list[int]:
    n0 = jeffreys_period(q)
    if n % n0:
        raise ValueError(f"n={n} is not a multiple of n0={n0}, so n*q is not a count vector")
    return [int(w * n) for w in q.weights]


class _Factorials:
    def __init__(self):
        self.table = [1]

    def __call__(self, k: int) -> int:
        while len(self.table) <= k:
            self.table.append(self.table[-1] * len(self.table))
        return self.table[k]


_fact = _Factorials()


def multinomial(counts) -> int:
    out = _fact(sum(counts))
    for c in counts:
        out //= _fact(int(c))
    return out


def exact_weights(counts: np.ndarray, q: Pmf) -> tuple[list[int], int]:
    """Integers ``W`` and denominator ``D`` with ``pi(nu; q) = W / D`` per row."""
    a, d = common_denominator(q)
    if len(counts) == 0:
        return [], 1
    n = int(counts[0].sum())
    powers: list[dict[int, int]] = [{} for _ in a]
    out = []
    for row in counts:
        w = multinomial(row)
        for i, c in enumerate(row):
            c = int(c)
            if c:
                cache = powers[i]
                if c not in cache:
                    cache[c] = a[i] ** c
                w *= cache[c]
        out.append(w)
    return out, d**n


def reverse_weights(counts: np.ndarray, q: Pmf) -> tuple[list[int], int]:
    """Integers with ``pi(nq; nu) = W / D``: chance that n draws from ``nu`` give counts ``nq``."""
    if len(counts) == 0:
        return [], 1
    n = int(counts[0].sum())
    target = source_counts(q, n)
    gamma = multinomial(target)
    out = []
    for row in counts:
        w = gamma
        for ni, ci in zip(row, target):
            if ci:
                w *= int(ni) ** ci
        out.append(w)
    return out, n**n


def log_weights(counts: np.ndarray, q: Pmf) -> np.ndarray:
    return log_type_probabilities(counts, q)


def log_reverse_weights(counts: np.ndarray, q: Pmf) -> np.ndarray:
    counts = np.asarray(counts)
    if len(counts) == 0:
        return np.zeros(0)
    n = int(counts[0].sum())
    target = np.array(source_counts(q, n))
    with np.errstate(divide="ignore"):
        logfreq = np.log(counts / n)
    terms = np.where(target > 0, target * logfreq, 0.0)
    return gammaln(n + 1) - gammaln(target + 1).sum() + terms.sum(axis=1)


def jeffreys_exact_weights(counts, q) -> tuple[list[int], int]:
    w1, d1 = exact_weights(counts, q)
    w2, d2 = reverse_weights(counts, q)
    return [x * y for x, y in zip(w1, w2)], d1 * d2


def jeffreys_log_weights(counts, q) -> np.ndarray:
    return log_weights(counts, q) + log_reverse_weights(counts, q)


def fsum_exp(logw: np.ndarray, shift: float | None = None) -> float:
    """``sum(exp(logw - shift))`` with correctly rounded summation."""
    if len(logw) == 0:
        return 0.0
    if shift is None:
        shift = float(np.max(logw))
    if shift == -math.inf:
        return 0.0
    return math.fsum(np.exp(logw - shift).tolist())
