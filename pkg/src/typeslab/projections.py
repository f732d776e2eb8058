"""I-, J-, mu-, gamma- and OR-projections of a source onto a feasible set.

I and J projections minimize a divergence over the continuous set; the
other three maximize a probability-based score over the n-types of the set
and are found by exhaustive search.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import Number, Pmf, TypeVec, kl_divergence, symmetric_kl, total_variation
from .feasible import (
    ConvexPiece,
    EmptyTypeSet,
    FeasibleSet,
    InfeasibleSet,
    LinearConstraint,
    contains,
    feasible_type_array,
    is_isolated,
    piece_geometry,
)
from .optimize import KL, Divergence, Jeffreys, SolverOptions, minimize_on_piece
from . import weights as W

KINDS = ("I", "J", "mu", "gamma", "or")
LOG_TIE_WINDOW = 1e-12
# Solver minimizers closer than this (total variation) are one point.
DEDUPE_TOL = 1e-7
NEAR_TIE_REL = 1e-6


class NearTieWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ProjectionSet:
    """Projections of one kind; ``values`` are divergences (I, J) or scores."""

    kind: str
    points: tuple[Pmf, ...]
    values: tuple[Number, ...]
    proper: tuple[bool, ...]
    n: int | None = None
    types: tuple[TypeVec, ...] = ()
    piece_values: tuple[float, ...] = field(default=(), compare=False)
    degenerate: bool = False

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def proper_points(self) -> tuple[Pmf, ...]:
        return tuple(p for p, ok in zip(self.points, self.proper) if ok)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "k": self.k,
            "points": [[_jsonable(w) for w in p.weights] for p in self.points],
            "counts": [list(t.counts) for t in self.types],
            "values": [_jsonable(v) for v in self.values],
            "proper": list(self.proper),
            "degenerate": self.degenerate,
        }


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _restrict_to_support(piece: ConvexPiece, q: Pmf) -> ConvexPiece:
    zeros = [i for i, w in enumerate(q.weights) if w == 0]
    if not zeros:
        return piece
    extra = tuple(
        LinearConstraint(tuple(int(j == i) for j in range(piece.m)), "=", 0) for i in zeros
    )
    return ConvexPiece(piece.m, piece.constraints + extra)


def _continuous_projections(div: Divergence, objective, q: Pmf, s: FeasibleSet,
                            opts: SolverOptions) -> ProjectionSet:
    if contains(s, q):
        return ProjectionSet(div.name, (q,), (0.0,), (not is_isolated(s, q),),
                             piece_values=(0.0,) * len(s.pieces))
    qa = q.as_array()
    found = []
    piece_values = []
    any_nonempty = False
    for piece in s.pieces:
        if div.name == "I":
            piece = _restrict_to_support(piece, q)
        geom = piece_geometry(piece)
        if geom is None:
            piece_values.append(math.inf)
            continue
        any_nonempty = True
        p, _ = minimize_on_piece(div, qa, geom, opts)
        pmf = Pmf(tuple((p / p.sum()).tolist()))
        value = objective(pmf, q)
        piece_values.append(value)
        found.append((value, pmf))
    if not any_nonempty:
        raise InfeasibleSet(f"set {s.name or '<unnamed>'} is empty")
    finite = [v for v, _ in found if math.isfinite(v)]
    if not finite:
        raise InfeasibleSet(f"{div.name}-divergence is infinite on all of {s.name or 'the set'}")
    best = min(finite)
    points, values = [], []
    for value, pmf in found:
        if not math.isclose(value, best, rel_tol=opts.tie_tol, abs_tol=opts.tol):
            if math.isclose(value, best, rel_tol=NEAR_TIE_REL):
                warnings.warn(
                    f"near-tie in {div.name}-projection: piece value {value!r} vs minimum "
                    f"{best!r} (gap {value - best:.3g}); not counted as a projection",
                    NearTieWarning, stacklevel=3,
                )
            continue
        if any(total_variation(pmf, other) < DEDUPE_TOL for other in points):
            continue
        points.append(pmf)
        values.append(value)
    proper = tuple(not is_isolated(s, p) for p in points)
    return ProjectionSet(div.name, tuple(points), tuple(values), proper,
                         piece_values=tuple(piece_values))


def i_projections(q: Pmf, s: FeasibleSet, opts: SolverOptions | None = None) -> ProjectionSet:
    """All minimizers of ``I(p || q)`` over ``s``, one candidate per piece."""
    _check_alphabet(q, s)
    return _continuous_projections(KL(), kl_divergence, q, s, opts or SolverOptions())


def j_projections(q: Pmf, s: FeasibleSet, opts: SolverOptions | None = None) -> ProjectionSet:
    """All minimizers of the Jeffreys divergence over ``s``; ``q`` must be strictly positive."""
    _check_alphabet(q, s)
    if any(w <= 0 for w in q.weights):
        raise ValueError("J-projection needs a strictly positive source")
    return _continuous_projections(Jeffreys(), symmetric_kl, q, s, opts or SolverOptions())


def _check_alphabet(q: Pmf, s: FeasibleSet):
    if len(q) != s.m:
        raise ValueError(f"source has {len(q)} letters, set has {s.m}")


# -- finite-n projections ----------------------------------------------------


def _feasible_rows(s: FeasibleSet, n: int) -> np.ndarray:
    rows = feasible_type_array(s, n)
    if len(rows) == 0:
        raise EmptyTypeSet(s.name, n)
    return rows


def _finite_result(kind, s, n, rows, idx, values, degenerate=False) -> ProjectionSet:
    types = tuple(TypeVec(tuple(int(c) for c in rows[i])) for i in idx)
    points = tuple(t.pmf() for t in types)
    proper = tuple(not is_isolated(s, p) for p in points)
    return ProjectionSet(kind, points, tuple(values), proper, n=n, types=types,
                         degenerate=degenerate)


def _argmax_exact(scores: list) -> list[int]:
    top = max(scores)
    return [i for i, v in enumerate(scores) if v == top]


def _argmax_log(logs: np.ndarray) -> list[int]:
    top = float(np.max(logs))
    if top == -math.inf:
        return []
    return [int(i) for i in np.flatnonzero(logs >= top - LOG_TIE_WINDOW)]


def mu_projections(q: Pmf, s: FeasibleSet, n: int, mode: str = "auto") -> ProjectionSet:
    """Most probable n-types in ``s`` under ``q`` (all ties)."""
    _check_alphabet(q, s)
    rows = _feasible_rows(s, n)
    if W.resolve_mode(mode, q, n) == "exact":
        w, denom = W.exact_weights(rows, q)
        idx = _argmax_exact(w)
        return _finite_result("mu", s, n, rows, idx, [Fraction(w[i], denom) for i in idx])
    logs = W.log_weights(rows, q)
    idx = _argmax_log(logs)
    return _finite_result("mu", s, n, rows, idx, [math.exp(logs[i]) for i in idx])


def _two_way_check(q: Pmf, n: int):
    if not q.exact:
        raise ValueError("gamma/OR projections need a rational source distribution")
    W.source_counts(q, n)


def gamma_projections(q: Pmf, s: FeasibleSet, n: int, mode: str = "exact") -> ProjectionSet:
    """Maximizers of ``pi(nu; q) * pi(nq; nu)`` over the n-types of ``s``."""
    _check_alphabet(q, s)
    _two_way_check(q, n)
    rows = _feasible_rows(s, n)
    if W.resolve_mode(mode, q, n) == "exact":
        w, denom = W.jeffreys_exact_weights(rows, q)
        if max(w) == 0:
            return ProjectionSet("gamma", (), (), (), n=n, degenerate=True)
        idx = _argmax_exact(w)
        return _finite_result("gamma", s, n, rows, idx, [Fraction(w[i], denom) for i in idx])
    logs = W.jeffreys_log_weights(rows, q)
    idx = _argmax_log(logs)
    if not idx:
        return ProjectionSet("gamma", (), (), (), n=n, degenerate=True)
    return _finite_result("gamma", s, n, rows, idx, [math.exp(logs[i]) for i in idx])


def or_projections(q: Pmf, s: FeasibleSet, n: int, mode: str = "exact") -> ProjectionSet:
    """Maximizers of ``pi(nu; q) + pi(nq; nu)`` over the n-types of ``s``."""
    _check_alphabet(q, s)
    _two_way_check(q, n)
    rows = _feasible_rows(s, n)
    if W.resolve_mode(mode, q, n) == "exact":
        w1, d1 = W.exact_weights(rows, q)
        w2, d2 = W.reverse_weights(rows, q)
        scores = [x * d2 + y * d1 for x, y in zip(w1, w2)]
        idx = _argmax_exact(scores)
        return _finite_result("or", s, n, rows, idx,
                              [Fraction(scores[i], d1 * d2) for i in idx])
    logs = np.logaddexp(W.log_weights(rows, q), W.log_reverse_weights(rows, q))
    idx = _argmax_log(logs)
    return _finite_result("or", s, n, rows, idx, [math.exp(logs[i]) for i in idx])


def project(kind: str, q: Pmf, s: FeasibleSet, n: int | None = None, mode: str = "auto",
            opts: SolverOptions | None = None) -> ProjectionSet:
    if kind == "I":
        return i_projections(q, s, opts)
    if kind == "J":
        return j_projections(q, s, opts)
    if n is None:
        raise ValueError(f"{kind}-projections are defined on n-types; give n")
    if kind == "mu":
        return mu_projections(q, s, n, mode)
    finite_mode = "exact" if mode == "auto" else mode
    if kind == "gamma":
        return gamma_projections(q, s, n, finite_mode)
    if kind == "or":
        return or_projections(q, s, n, finite_mode)
    raise ValueError(f"unknown projection kind {kind!r}; expected one of {KINDS}")


def projection_distance(a: ProjectionSet, b: ProjectionSet) -> float:
    """Largest distance from a point of ``a`` to its nearest point of ``b``."""
    if not a.points or not b.points:
        raise ValueError("distance between projection sets needs points on both sides")
    return max(
        min(float(total_variation(p.to_float(), r.to_float())) for r in b.points)
        for p in a.points
    )
