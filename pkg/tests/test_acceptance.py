"""Acceptance criteria, each at its stated tolerance and time budget.

Every test records a PASS/FAIL line which the terminal summary prints, so
``pytest tests/test_acceptance.py`` ends with one verdict per criterion.
"""

import itertools
import math
import time
from fractions import Fraction as F

import pytest

from conftest import ACCEPTANCE
from typeslab import (
    Ball,
    DegenerateWeights,
    PrefixQuery,
    TypeList,
    TypeVec,
    ball_concentrations,
    conditional_mass,
    default_epsilon,
    gamma_projections,
    i_projections,
    j_projections,
    jeffreys_conditional_mass,
    log_type_probability,
    mc_conditional,
    mixture_prediction,
    mu_projections,
    prefix_law_exact,
    projection_distance,
    restrict_to_types,
    total_variation,
    type_probability,
)
from typeslab.feasible import feasible_type_array
from typeslab.oracle import lemma_fuzz, sequence_oracle
from typeslab.weights import jeffreys_period


def verdict(number, title, ok, detail):
    ACCEPTANCE[number] = f"criterion {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(ACCEPTANCE[number])
    assert ok, ACCEPTANCE[number]


def rational(p):
    """Nearby exact pmf, so balls can be decided in exact arithmetic."""
    head = [F(w).limit_denominator(10**6) for w in p.weights[:-1]]
    return type(p)(tuple(head) + (1 - sum(head),))


def prefixes(m, t):
    return [PrefixQuery(p) for p in itertools.product(range(m), repeat=t)]


def proper_centers(sc):
    proj = i_projections(sc.source, sc.set)
    return proj.proper_points or proj.points


# -- 1 -----------------------------------------------------------------------


def test_criterion_1_exactness_oracle(scenarios):
    start = time.perf_counter()
    compared = mismatches = 0
    for sc in scenarios.values():
        m = sc.alphabet.m
        if m > 3:
            continue
        centers = [rational(c) for c in proper_centers(sc)]
        for n in range(1, 13):
            members = list(restrict_to_types(sc.set, n, allow_empty=True))
            if not members:
                continue
            regions = [sc.set] + [Ball(c, F(1, 10)) for c in centers]
            regions += [TypeList((t,)) for t in members[:5]]
            queries = prefixes(m, 1) + (prefixes(m, 2) if n >= 2 else [])
            want_r, want_p = sequence_oracle(sc.source, sc.set, n, regions, queries)
            got_r = [conditional_mass(sc.source, sc.set, n, r, "exact") for r in regions]
            got_p = [prefix_law_exact(sc.source, sc.set, n, q, "exact") for q in queries]
            for a, b in zip(want_r + want_p, got_r + got_p):
                compared += 1
                mismatches += a != b
    seconds = time.perf_counter() - start
    verdict(1, "exactness oracle", mismatches == 0 and seconds < 30,
            f"{compared} values, {mismatches} mismatches, {seconds:.1f}s (< 30s)")


# -- 2 -----------------------------------------------------------------------


def test_criterion_2_cwlln(scenarios):
    sc = scenarios["s1"]
    start = time.perf_counter()
    center = F(3, 4), F(1, 4)
    masses = []
    for n in (250, 500, 1000, 2000):
        report = ball_concentrations(sc.source, sc.set, n, [type(sc.source)(center)], F(1, 20))
        masses.append(float(report.masses[0]))
    seconds = time.perf_counter() - start
    ok = masses[-1] >= 0.999 and masses == sorted(masses) and seconds < 5
    verdict(2, "CWLLN in S1", ok,
            f"masses {['%.9f' % x for x in masses]}, {seconds:.2f}s (< 5s)")


# -- 3 -----------------------------------------------------------------------


def test_criterion_3_icet(scenarios):
    start = time.perf_counter()
    s2 = scenarios["s2"]
    centers = i_projections(s2.source, s2.set).points
    eps = default_epsilon(centers)
    sweep = list(range(2, 201, 2)) + [250, 500, 1000, 2000]
    unequal = []
    for n in sweep:
        report = ball_concentrations(s2.source, s2.set, n, centers, eps, mode="exact")
        if report.masses[0] != report.masses[1]:
            unequal.append(n)
    total = float(sum(report.masses))

    s3 = scenarios["s3"]
    s3_centers = i_projections(s3.source, s3.set).points
    s3_masses = [float(x) for x in
                 ball_concentrations(s3.source, s3.set, 600, s3_centers).masses]
    seconds = time.perf_counter() - start
    ok = (not unequal and total >= 1 - 1e-6 and all(abs(x - 0.5) <= 0.02 for x in s3_masses)
          and seconds < 60)
    verdict(3, "ICET in S2 and S3", ok,
            f"S2 equal at {len(sweep) - len(unequal)}/{len(sweep)} even n, sum at 2000 = "
            f"{total:.10f}; S3 masses at 600 = {['%.5f' % x for x in s3_masses]}; "
            f"{seconds:.1f}s (< 60s)")


# -- 4 -----------------------------------------------------------------------


def test_criterion_4_egcp_bcp(scenarios):
    start = time.perf_counter()
    n = 1000
    worst = {1: 0.0, 2: 0.0}
    for name in ("s1", "s2", "s3"):
        sc = scenarios[name]
        i_centers = proper_centers(sc)
        mu = mu_projections(sc.source, sc.set, n)
        mu_centers = mu.proper_points or mu.points
        for t in (1, 2):
            for q in prefixes(sc.alphabet.m, t):
                law = float(prefix_law_exact(sc.source, sc.set, n, q))
                for centers in (i_centers, mu_centers):
                    gap = abs(law - float(mixture_prediction(centers, q)))
                    worst[t] = max(worst[t], gap)
    seconds = time.perf_counter() - start
    ok = worst[1] <= 0.01 and worst[2] <= 0.02 and seconds < 60
    verdict(4, "EGCP/BCP prefix laws", ok,
            f"max gap t=1 {worst[1]:.2e} (<= 0.01), t=2 {worst[2]:.2e} (<= 0.02), "
            f"{seconds:.1f}s (< 60s)")


# -- 5 -----------------------------------------------------------------------


def test_criterion_5_maxprob_maxent(scenarios):
    details, ok = [], True
    for name in ("s1", "s2", "s3"):
        sc = scenarios[name]
        i_set = i_projections(sc.source, sc.set)
        d = {n: projection_distance(mu_projections(sc.source, sc.set, n), i_set)
             for n in (50, 500, 800)}
        ok &= d[500] <= 0.02 and d[800] < d[50]
        details.append(f"{sc.name} d50={d[50]:.4f} d500={d[500]:.4f} d800={d[800]:.4f}")
    verdict(5, "mu-projections approach I-projections", ok, "; ".join(details))


# -- 6 -----------------------------------------------------------------------


def test_criterion_6_lemma():
    cases = lemma_fuzz(10_000, seed=2024, n_max=100, m_max=5)
    bad = [c for c in cases if not c.holds]
    largest = max((c.t1.n for c in bad), default=0)
    verdict(6, "ratio bound fuzz", not bad,
            f"{len(bad)} violations in {len(cases)} cases (all with n <= {largest})")


# -- 7 -----------------------------------------------------------------------


def test_criterion_7_jcet(scenarios):
    sc = scenarios["s2"]
    assert sc.source.exact
    j_set = j_projections(sc.source, sc.set)
    n0 = jeffreys_period(sc.source)
    sweep = [n for n in list(range(2, 201)) + [250, 500, 1000, 2000] if n % n0 == 0]
    unequal, degenerate = [], []
    for n in sweep:
        try:
            report = ball_concentrations(sc.source, sc.set, n, j_set.points, mode="exact",
                                         weighting="jeffreys")
        except DegenerateWeights:
            # all types of Pi_n sit on a face, so no n is "valid" here
            degenerate.append(n)
            continue
        if report.masses[0] != report.masses[1]:
            unequal.append(n)
    valid = len(sweep) - len(degenerate)
    distance = projection_distance(gamma_projections(sc.source, sc.set, 500), j_set)
    verdict(7, "JCET and gamma/J coincidence", valid > 0 and not unequal and distance <= 0.02,
            f"equal Jeffreys masses at {valid - len(unequal)}/{valid} valid n "
            f"(zero total weight at n={degenerate}); "
            f"gamma-J distance at 500 = {distance:.4f} (<= 0.02)")


# -- 8 -----------------------------------------------------------------------


def _relative(a, b):
    a, b = float(a), float(b)
    return 0.0 if a == b else abs(a - b) / max(abs(a), abs(b))


def test_criterion_8_log_exact(scenarios):
    worst, count = 0.0, 0
    for sc in scenarios.values():
        m = sc.alphabet.m
        centers = proper_centers(sc)
        eps = default_epsilon(centers)
        n0 = jeffreys_period(sc.source)
        for n in range(1, 61):
            rows = feasible_type_array(sc.set, n)
            if not len(rows):
                continue
            pairs = []
            for mode in ("exact", "log"):
                values = list(ball_concentrations(sc.source, sc.set, n, centers, eps, mode).masses)
                values.append(conditional_mass(sc.source, sc.set, n, TypeList(()), mode))
                values += [prefix_law_exact(sc.source, sc.set, n, q, mode)
                           for q in prefixes(m, 1) + (prefixes(m, 2) if n >= 2 else [])]
                if n % n0 == 0:
                    try:
                        values += [jeffreys_conditional_mass(sc.source, sc.set, n,
                                                             Ball(c, eps), mode)
                                   for c in centers]
                    except DegenerateWeights:
                        pass  # every two-way weight vanishes on this Pi_n
                pairs.append(values)
            for a, b in zip(*pairs):
                worst = max(worst, _relative(a, b))
                count += 1
            for row in rows[:: max(1, len(rows) // 20)]:
                t = TypeVec(tuple(int(c) for c in row))
                worst = max(worst, _relative(type_probability(t, sc.source),
                                             math.exp(log_type_probability(t, sc.source))))
                count += 1
    verdict(8, "log/exact agreement", worst <= 1e-10,
            f"{count} values, max relative deviation {worst:.2e} (<= 1e-10)")


# -- 9 -----------------------------------------------------------------------


def test_criterion_9_monte_carlo(scenarios):
    n, samples, seed = 12, 1_000_000, 42
    worst, count = 0.0, 0
    for sc in scenarios.values():
        centers = [rational(c) for c in proper_centers(sc)]
        queries = [Ball(c, F(1, 10)) for c in centers] + prefixes(sc.alphabet.m, 1)
        for i, query in enumerate(queries):
            if isinstance(query, PrefixQuery):
                exact = prefix_law_exact(sc.source, sc.set, n, query, "exact")
            else:
                exact = conditional_mass(sc.source, sc.set, n, query, "exact")
            est = mc_conditional(sc.source, sc.set, n, query, samples, seed + i)
            worst = max(worst, est.z_score(exact))
            count += 1
    sc = scenarios["s1"]
    query = Ball(rational(proper_centers(sc)[0]), F(1, 10))
    runs = [repr(mc_conditional(sc.source, sc.set, n, query, samples, seed, workers=w))
            for w in (1, 1, 4)]
    identical = len(set(runs)) == 1
    verdict(9, "Monte Carlo consistency", worst <= 4 and identical,
            f"{count} estimates, max |z| = {worst:.2f} (<= 4); repeated runs identical: {identical}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
