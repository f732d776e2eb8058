"""Feasible sets: finite unions of closed convex polytopes in the simplex."""

from __future__ import annotations

import functools
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .core import Number, Pmf, TypeVec, as_number, type_array

RELATIONS = ("=", "<=", ">=")
FLOAT_SLACK = 1e-12
# Absolute tolerance of the LP probes used for geometry (dimension, support).
GEOMETRY_TOL = 1e-9


class EmptyTypeSet(ValueError):
    """Raised when a feasible set holds no n-type, so conditioning on it is undefined."""

    def __init__(self, name: str, n: int):
        super().__init__(f"set {name or '<unnamed>'} contains no {n}-type")
        self.n = n


class InfeasibleSet(ValueError):
    pass


@dataclass(frozen=True)
class LinearConstraint:
    """``sum_i coefficients[i] * p_i  <relation>  bound`` for a closed relation."""

    coefficients: tuple
    relation: str
    bound: Number

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(
                f"relation {self.relation!r} not allowed; use one of {RELATIONS} "
                "(strict inequalities would make the set non-closed)"
            )
        coeffs = tuple(as_number(a) for a in self.coefficients)
        bound = as_number(self.bound)
        if not all(math.isfinite(a) for a in coeffs + (bound,)):
            raise ValueError("constraint coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "bound", bound)

    @property
    def m(self) -> int:
        return len(self.coefficients)

    @property
    def exact(self) -> bool:
        return not any(isinstance(x, float) for x in self.coefficients + (self.bound,))

    def holds(self, p: Pmf) -> bool:
        if self.exact and p.exact:
            lhs = sum(a * w for a, w in zip(self.coefficients, p.weights))
            return _compare(lhs - self.bound, self.relation, 0)
        lhs = math.fsum(float(a) * float(w) for a, w in zip(self.coefficients, p.weights))
        return _compare(lhs - float(self.bound), self.relation, FLOAT_SLACK)

    def holds_counts(self, counts: np.ndarray) -> np.ndarray:
        """Membership of every row of ``counts`` (n-types of one common n)."""
        counts = np.asarray(counts)
        if counts.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        n = int(counts[0].sum())
        if self.exact:
            scale = math.lcm(*(Fraction(x).denominator for x in self.coefficients + (self.bound,)))
            a = [int(x * scale) for x in self.coefficients]
            b = int(self.bound * scale) * n
            big = max(abs(v) for v in a + [b, 1]) * n * len(a)
            if big < 2**62:
                diff = counts @ np.array(a, dtype=np.int64) - b
            else:
                diff = counts.astype(object) @ np.array(a, dtype=object) - b
            return _compare_array(diff, self.relation, 0)
        a = np.array([float(x) for x in self.coefficients])
        diff = counts @ a / n - float(self.bound)
        return _compare_array(diff, self.relation, FLOAT_SLACK)

    def permute(self, perm: Sequence[int]) -> LinearConstraint:
        return LinearConstraint(tuple(self.coefficients[j] for j in perm), self.relation, self.bound)


def _compare(diff, relation: str, slack) -> bool:
    if relation == "=":
        return abs(diff) <= slack
    if relation == "<=":
        return diff <= slack
    return diff >= -slack


def _compare_array(diff: np.ndarray, relation: str, slack) -> np.ndarray:
    if relation == "=":
        out = np.abs(diff) <= slack
    elif relation == "<=":
        out = diff <= slack
    else:
        out = diff >= -slack
    return np.asarray(out, dtype=bool)


@dataclass(frozen=True)
class ConvexPiece:
    """Intersection of the probability simplex on ``m`` letters with constraints."""

    m: int
    constraints: tuple[LinearConstraint, ...] = ()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("a piece needs m >= 1")
        constraints = tuple(self.constraints)
        for c in constraints:
            if c.m != self.m:
                raise ValueError(f"constraint has {c.m} coefficients, alphabet has {self.m}")
        object.__setattr__(self, "constraints", constraints)

    def holds(self, p: Pmf) -> bool:
        return all(c.holds(p) for c in self.constraints)

    def holds_counts(self, counts: np.ndarray) -> np.ndarray:
        mask = np.ones(len(counts), dtype=bool)
        for c in self.constraints:
            mask &= c.holds_counts(counts)
        return mask

    def permute(self, perm: Sequence[int]) -> ConvexPiece:
        return ConvexPiece(self.m, tuple(c.permute(perm) for c in self.constraints))


@dataclass(frozen=True)
class FeasibleSet:
    """The union of its pieces."""

    pieces: tuple[ConvexPiece, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("a feasible set needs at least one piece")
        if len({p.m for p in pieces}) != 1:
            raise ValueError("pieces live on different alphabets")
        object.__setattr__(self, "pieces", pieces)

    @property
    def m(self) -> int:
        return self.pieces[0].m

    @classmethod
    def simplex(cls, m: int, name: str = "simplex") -> FeasibleSet:
        return cls((ConvexPiece(m),), name)

    def union(self, other: FeasibleSet) -> FeasibleSet:
        return FeasibleSet(self.pieces + other.pieces, self.name)

    def permute(self, perm: Sequence[int]) -> FeasibleSet:
        return FeasibleSet(tuple(p.permute(perm) for p in self.pieces), self.name)

    def __contains__(self, p: Pmf) -> bool:
        return contains(self, p)


def contains(s: FeasibleSet, p: Pmf) -> bool:
    """Membership in at least one piece (exact for rational data, else 1e-12 slack)."""
    if len(p) != s.m:
        raise ValueError(f"pmf has {len(p)} letters, set has {s.m}")
    return any(piece.holds(p) for piece in s.pieces)


def type_mask(s: FeasibleSet, counts: np.ndarray) -> np.ndarray:
    mask = np.zeros(len(counts), dtype=bool)
    for piece in s.pieces:
        mask |= piece.holds_counts(counts)
    return mask


def feasible_type_array(s: FeasibleSet, n: int) -> np.ndarray:
    """Counts of the n-types in ``s`` (possibly zero rows), lexicographic order."""
    counts = type_array(n, s.m)
    return counts[type_mask(s, counts)]


def restrict_to_types(s: FeasibleSet, n: int, allow_empty: bool = False) -> Iterator[TypeVec]:
    """Yield the n-types whose induced pmf lies in ``s``.

    Raises :class:`EmptyTypeSet` when there are none, unless ``allow_empty``.
    """
    rows = feasible_type_array(s, n)
    if len(rows) == 0 and not allow_empty:
        raise EmptyTypeSet(s.name, n)
    for row in rows:
        yield TypeVec(tuple(int(c) for c in row))


# -- geometry via LP probes --------------------------------------------------


@dataclass(frozen=True)
class PieceGeometry:
    """Facts about a nonempty piece needed by dimension checks and solvers.

    ``support`` lists the coordinates that are positive somewhere on the
    piece; ``eq_rows``/``eq_rhs`` are the explicit and implicit equalities and
    ``ge_rows``/``ge_rhs`` the remaining inequalities (as ``row @ p >= rhs``),
    all restricted to ``support``.
    """

    support: tuple[int, ...]
    eq_rows: np.ndarray
    eq_rhs: np.ndarray
    ge_rows: np.ndarray
    ge_rhs: np.ndarray
    dimension: int


def _ge_form(piece: ConvexPiece):
    eq_rows, eq_rhs, ge_rows, ge_rhs = [], [], [], []
    for c in piece.constraints:
        a = np.array([float(x) for x in c.coefficients])
        b = float(c.bound)
        if c.relation == "=":
            eq_rows.append(a)
            eq_rhs.append(b)
        elif c.relation == ">=":
            ge_rows.append(a)
            ge_rhs.append(b)
        else:
            ge_rows.append(-a)
            ge_rhs.append(-b)
    m = piece.m
    return (
        np.array(eq_rows).reshape(-1, m),
        np.array(eq_rhs),
        np.array(ge_rows).reshape(-1, m),
        np.array(ge_rhs),
    )


def _lp_max(c, eq_rows, eq_rhs, ge_rows, ge_rhs):
    """Maximize ``c @ p`` over the simplex slice; ``None`` if infeasible."""
    m = len(c)
    a_eq = np.vstack([np.ones((1, m)), eq_rows]) if len(eq_rows) else np.ones((1, m))
    b_eq = np.concatenate([[1.0], eq_rhs]) if len(eq_rhs) else np.array([1.0])
    kwargs = {}
    if len(ge_rows):
        kwargs = {"A_ub": -ge_rows, "b_ub": -ge_rhs}
    res = linprog(-np.asarray(c, dtype=float), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * m,
                  method="highs", **kwargs)
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"LP probe failed: {res.message}")
    return -res.fun


@functools.lru_cache(maxsize=256)
def piece_geometry(piece: ConvexPiece) -> PieceGeometry | None:
    """Analyse ``piece``; ``None`` when it is empty."""
    m = piece.m
    eq_rows, eq_rhs, ge_rows, ge_rhs = _ge_form(piece)
    if _lp_max(np.zeros(m), eq_rows, eq_rhs, ge_rows, ge_rhs) is None:
        return None
    support = tuple(
        i for i in range(m)
        if _lp_max(np.eye(m)[i], eq_rows, eq_rhs, ge_rows, ge_rhs) > GEOMETRY_TOL
    )
    implicit, loose = [], []
    for j in range(len(ge_rows)):
        top = _lp_max(ge_rows[j], eq_rows, eq_rhs, ge_rows, ge_rhs)
        (implicit if top - ge_rhs[j] <= GEOMETRY_TOL else loose).append(j)
    cols = list(support)
    all_eq = np.vstack([eq_rows, ge_rows[implicit]]) if len(implicit) else eq_rows
    all_rhs = np.concatenate([eq_rhs, ge_rhs[implicit]])
    hull = np.vstack([np.ones((1, len(cols))), all_eq[:, cols]])
    rank = np.linalg.matrix_rank(hull, tol=GEOMETRY_TOL) if len(cols) else 0
    return PieceGeometry(
        support=support,
        eq_rows=all_eq[:, cols],
        eq_rhs=all_rhs,
        ge_rows=ge_rows[loose][:, cols],
        ge_rhs=ge_rhs[loose],
        dimension=len(cols) - rank,
    )


def piece_dimension(piece: ConvexPiece) -> int | None:
    """Affine dimension of the piece; 0 for a single point, ``None`` if empty."""
    geom = piece_geometry(piece)
    return None if geom is None else geom.dimension


def is_isolated(s: FeasibleSet, p: Pmf) -> bool:
    """True when every piece containing ``p`` is the single point ``{p}``."""
    containing = [piece for piece in s.pieces if _holds_loose(piece, p)]
    if not containing:
        raise ValueError(f"{p} is not in {s.name or 'the set'}")
    return all(piece_dimension(piece) == 0 for piece in containing)


def _holds_loose(piece: ConvexPiece, p: Pmf) -> bool:
    x = p.as_array()
    for c in piece.constraints:
        diff = float(np.dot([float(a) for a in c.coefficients], x)) - float(c.bound)
        if not _compare(diff, c.relation, GEOMETRY_TOL):
            return False
    return True
