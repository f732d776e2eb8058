"""Minimization of separable convex divergences over one polytope piece.

The minimizer of a strictly convex divergence over a polytope is the
minimizer over the affine slice of its active constraints.  With the few
inequalities a piece carries, every candidate active set is tried: each
slice is solved by damped Newton in its null space, starting from a strictly
positive point found by LP, and the best candidate that satisfies the
remaining inequalities wins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize

from .feasible import PieceGeometry

MAX_ENUMERATED_INEQUALITIES = 12
FEASIBILITY_TOL = 1e-10


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float = math.nan):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 200
    tol: float = 1e-12
    tie_tol: float = 1e-9
    multistart: int = 1

    def __post_init__(self):
        if self.tol <= 0 or self.tie_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.tie_tol < self.tol:
            raise ValueError("tie tolerance must not be below the convergence tolerance")
        if self.max_iter < 1 or self.multistart < 1:
            raise ValueError("max_iter and multistart must be >= 1")


class Divergence:
    """Separable objective ``sum_i f(p_i, q_i)`` with its gradient and Hessian diagonal."""

    name = ""

    def value(self, p, q) -> float:
        raise NotImplementedError

    def grad(self, p, q):
        raise NotImplementedError

    def hess(self, p, q):
        raise NotImplementedError


class KL(Divergence):
    name = "I"

    def value(self, p, q):
        return math.fsum(p * np.log(p / q))

    def grad(self, p, q):
        return np.log(p / q) + 1.0

    def hess(self, p, q):
        return 1.0 / p


class Jeffreys(Divergence):
    name = "J"

    def value(self, p, q):
        return math.fsum((p - q) * np.log(p / q))

    def grad(self, p, q):
        return np.log(p / q) + 1.0 - q / p

    def hess(self, p, q):
        return 1.0 / p + q / p**2


def _interior_point(M: np.ndarray, c: np.ndarray):
    """A point of ``{M p = c}`` maximizing its smallest coordinate, or None."""
    k = M.shape[1]
    # variables (p, t): maximize t subject to M p = c, p_i >= t, t <= 1
    a_eq = np.hstack([M, np.zeros((M.shape[0], 1))])
    a_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    obj = np.zeros(k + 1)
    obj[-1] = -1.0
    res = linprog(obj, A_ub=a_ub, b_ub=np.zeros(k), A_eq=a_eq, b_eq=c,
                  bounds=[(0, None)] * k + [(None, 1.0)], method="highs")
    if res.status != 0 or res.x[-1] <= 1e-12:
        return None
    return res.x[:k]


def _newton_on_slice(div: Divergence, q, M, c, p0, opts: SolverOptions):
    basis = null_space(M)
    pinv = np.linalg.pinv(M)
    p = p0.copy()
    if basis.shape[1] == 0:
        return p
    dec2 = math.inf
    for _ in range(opts.max_iter):
        g = div.grad(p, q)
        h = div.hess(p, q)
        gr = basis.T @ g
        H = basis.T @ (h[:, None] * basis)
        d = -np.linalg.solve(H, gr)
        dec2 = float(-gr @ d)
        if dec2 <= max(opts.tol**2, 1e-30):
            break
        step = basis @ d
        neg = step < 0
        alpha = min(1.0, 0.99 * float(np.min(-p[neg] / step[neg]))) if neg.any() else 1.0
        f0 = div.value(p, q)
        while alpha > 1e-20:
            trial = p + alpha * step
            if np.all(trial > 0) and div.value(trial, q) <= f0 - 1e-4 * alpha * dec2 + 1e-15:
                break
            alpha *= 0.5
        else:
            break
        p = trial + pinv @ (c - M @ trial)
        p = np.where(p > 0, p, trial)
    if dec2 / 2 > opts.tol:
        raise SolverError("Newton iteration did not converge", dec2 / 2)
    return p


def minimize_on_piece(div: Divergence, q: np.ndarray, geom: PieceGeometry,
                      opts: SolverOptions) -> tuple[np.ndarray, float]:
    """Minimize ``div(., q)`` over a nonempty analysed piece.

    Returns the full-length minimizer and its value; the value is ``inf``
    when the divergence is infinite everywhere on the piece.
    """
    m = len(q)
    cols = list(geom.support)
    if isinstance(div, Jeffreys) and len(cols) < m:
        return _embed(np.full(len(cols), 1.0 / max(len(cols), 1)), cols, m), math.inf
    qs = q[cols]
    if np.any(qs <= 0):
        return _embed(np.full(len(cols), 1.0 / len(cols)), cols, m), math.inf
    base_M = np.vstack([np.ones((1, len(cols))), geom.eq_rows])
    base_c = np.concatenate([[1.0], geom.eq_rhs])
    n_ge = len(geom.ge_rows)

    if n_ge > MAX_ENUMERATED_INEQUALITIES:
        subsets = [_guess_active_set(div, qs, geom, base_M, base_c)]
    else:
        subsets = itertools.chain.from_iterable(
            itertools.combinations(range(n_ge), r) for r in range(n_ge + 1)
        )
    best, best_val = None, math.inf
    for active in subsets:
        active = list(active)
        M = np.vstack([base_M, geom.ge_rows[active]])
        c = np.concatenate([base_c, geom.ge_rhs[active]])
        p0 = _interior_point(M, c)
        if p0 is None:
            continue
        p = _newton_on_slice(div, qs, M, c, p0, opts)
        if n_ge and np.any(geom.ge_rows @ p < geom.ge_rhs - FEASIBILITY_TOL):
            continue
        val = div.value(p, qs)
        if val < best_val:
            best, best_val = p, val
    if best is None:
        raise SolverError("no feasible active set found", math.inf)
    return _embed(best, cols, m), best_val


def _guess_active_set(div, qs, geom, base_M, base_c):
    p0 = _interior_point(base_M, base_c)
    if p0 is None:
        raise SolverError("piece has no strictly positive point on its support", math.inf)
    cons = [{"type": "eq", "fun": lambda p: base_M @ p - base_c}]
    if len(geom.ge_rows):
        cons.append({"type": "ineq", "fun": lambda p: geom.ge_rows @ p - geom.ge_rhs})
    res = minimize(lambda p: div.value(np.maximum(p, 1e-300), qs), p0,
                   jac=lambda p: div.grad(np.maximum(p, 1e-300), qs),
                   constraints=cons, bounds=[(1e-300, 1.0)] * len(qs), method="SLSQP",
                   options={"maxiter": 1000, "ftol": 1e-14})
    slack = geom.ge_rows @ res.x - geom.ge_rhs
    return tuple(np.flatnonzero(slack < 1e-7))


def _embed(values, cols, m):
    full = np.zeros(m)
    full[cols] = values
    return full
