from fractions import Fraction as F
from pathlib import Path

import pytest

from typeslab import ConvexPiece, FeasibleSet, LinearConstraint, Pmf, load_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def pmf(*ws):
    return Pmf(tuple(F(w) if isinstance(w, (int, str)) else w for w in ws))


def half(coeffs, rel, bound):
    return LinearConstraint(tuple(F(c) for c in coeffs), rel, F(bound))


def piece(*constraints, m=2):
    return ConvexPiece(m, tuple(constraints))


def union(*pieces, name="set"):
    return FeasibleSet(tuple(pieces), name)


@pytest.fixture
def s1_set():
    return union(piece(half((1, 0), ">=", "3/4")), name="S1")


@pytest.fixture
def s2_set():
    return union(piece(half((1, 0), "<=", "1/4")), piece(half((1, 0), ">=", "3/4")), name="S2")


@pytest.fixture
def s3_set():
    mean = (-1, 0, 1)
    return union(piece(half(mean, "=", "1/2"), m=3), piece(half(mean, "=", "-1/2"), m=3),
                 name="S3")


@pytest.fixture
def uniform2():
    return pmf("1/2", "1/2")


@pytest.fixture
def uniform3():
    return pmf("1/3", "1/3", "1/3")


@pytest.fixture(scope="session")
def scenarios():
    return {p.stem: load_scenario(p) for p in sorted(SCENARIOS.glob("*.scn"))}


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
