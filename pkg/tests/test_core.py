import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pmf
from typeslab import (
    Alphabet,
    Pmf,
    TypeVec,
    count_types,
    enumerate_types,
    kl_divergence,
    log_multiplicity,
    log_type_probability,
    multiplicity,
    symmetric_kl,
    total_variation,
    type_probability,
)


@pytest.mark.parametrize("counts, expected", [((2, 1, 1), 12), ((0, 4), 1), ((3, 3), 20)])
def test_multiplicity_examples(counts, expected):
    assert multiplicity(TypeVec(counts)) == expected


@pytest.mark.parametrize("counts, q, expected", [
    ((1, 1), ("1/2", "1/2"), F(1, 2)),
    ((3, 1), ("1/2", "1/2"), F(1, 4)),
    ((4, 0), ("3/4", "1/4"), F(81, 256)),
])
def test_type_probability_examples(counts, q, expected):
    got = type_probability(TypeVec(counts), pmf(*q))
    assert isinstance(got, F) and got == expected


def test_zero_letter_convention():
    assert type_probability(TypeVec((2, 0)), pmf(1, 0)) == 1
    assert type_probability(TypeVec((1, 1)), pmf(1, 0)) == 0


@pytest.mark.parametrize("n, m, expected", [(4, 2, 5), (2, 3, 6), (200, 3, 20301)])
def test_enumerate_counts(n, m, expected):
    types = list(enumerate_types(n, m))
    assert len(types) == expected == count_types(n, m)
    assert len(set(types)) == expected
    assert all(t.n == n and t.m == m for t in types)


def test_enumeration_is_lexicographic():
    counts = [t.counts for t in enumerate_types(5, 3)]
    assert counts == sorted(counts)
    brute = sorted(c for c in itertools.product(range(6), repeat=3) if sum(c) == 5)
    assert counts == brute


def test_total_variation_examples():
    assert total_variation(pmf(1, 0), pmf(0, 1)) == 2
    assert total_variation(pmf("3/4", "1/4"), pmf("1/2", "1/2")) == F(1, 2)
    a = pmf("1/3", "1/6", "1/2")
    assert total_variation(a, a) == 0


def test_kl_examples():
    q = pmf("1/2", "1/2")
    assert kl_divergence(q, q) == 0
    # direct sum, written out
    oracle = 0.75 * math.log(0.75 / 0.5) + 0.25 * math.log(0.25 / 0.5)
    got = kl_divergence(pmf("3/4", "1/4"), q)
    assert got == pytest.approx(oracle, rel=1e-14)
    assert round(got, 6) == 0.130812
    assert kl_divergence(pmf(1, 0), pmf(0, 1)) == math.inf


def test_symmetric_kl():
    p, q = pmf("3/4", "1/4"), pmf("1/2", "1/2")
    assert symmetric_kl(p, q) == pytest.approx(kl_divergence(p, q) + kl_divergence(q, p))
    assert symmetric_kl(p, pmf(1, 0)) == math.inf


@pytest.mark.parametrize("q", [("1/2", "1/2"), ("1/3", "1/6", "1/2"), ("1/10", "2/10", "3/10", "4/10")])
def test_normalization_exact(q):
    q = pmf(*q)
    for n in (1, 2, 7, 15, 30):
        assert sum(type_probability(t, q) for t in enumerate_types(n, q.m)) == 1


def test_multiplicities_sum_to_m_power_n():
    for m in range(1, 5):
        for n in range(1, 31):
            assert sum(multiplicity(t) for t in enumerate_types(n, m)) == m**n


def test_log_exact_agreement():
    q = pmf("1/7", "2/7", "4/7")
    for n in (1, 10, 33, 60):
        for t in enumerate_types(n, 3):
            exact = type_probability(t, q)
            assert math.exp(log_type_probability(t, q)) == pytest.approx(float(exact), rel=1e-10)


def test_log_multiplicity_relative_accuracy():
    for counts in [(100, 100, 100), (1, 299), (150, 75, 75)]:
        t = TypeVec(counts)
        assert log_multiplicity(t) == pytest.approx(math.log(multiplicity(t)), rel=1e-12)


def test_float_source_uses_log_path():
    q = Pmf((0.25, 0.75))
    assert type_probability(TypeVec((1, 3)), q) == pytest.approx(4 * 0.25 * 0.75**3)


def test_invalid_values():
    with pytest.raises(ValueError):
        Pmf((F(1, 2), F(1, 3)))
    with pytest.raises(ValueError):
        Pmf((F(-1, 2), F(3, 2)))
    with pytest.raises(ValueError):
        Pmf((0.5, 0.4))
    with pytest.raises(ValueError):
        TypeVec((1, -1))
    with pytest.raises(ValueError):
        Alphabet(("a", "a"))
    with pytest.raises(ValueError):
        Alphabet(("a", "b"), (1,))


rational_pmf = st.lists(st.integers(1, 9), min_size=3, max_size=3).map(
    lambda ks: Pmf(tuple(F(k, sum(ks)) for k in ks)))


@settings(max_examples=60, deadline=None)
@given(rational_pmf, st.permutations(range(3)), st.integers(1, 12))
def test_permutation_equivariance(q, perm, n):
    other = pmf("1/2", "1/4", "1/4")
    for t in enumerate_types(n, 3):
        assert multiplicity(t.permute(perm)) == multiplicity(t)
        assert type_probability(t.permute(perm), q.permute(perm)) == type_probability(t, q)
    assert total_variation(q.permute(perm), other.permute(perm)) == total_variation(q, other)
    assert kl_divergence(q.permute(perm), other.permute(perm)) == pytest.approx(
        kl_divergence(q, other), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(rational_pmf, rational_pmf, rational_pmf)
def test_total_variation_metric_axioms(a, b, c):
    assert total_variation(a, b) == total_variation(b, a) >= 0
    assert (total_variation(a, b) == 0) == (a == b)
    assert total_variation(a, c) <= total_variation(a, b) + total_variation(b, c)


@settings(max_examples=100, deadline=None)
@given(rational_pmf, rational_pmf)
def test_kl_nonnegative(p, q):
    value = kl_divergence(p, q)
    assert value >= -1e-15
    if p == q:
        assert value == 0
