"""Dense two-phase simplex for small linear programs.

All problems have the form ``maximize <c, x> subject to A x <= b`` with ``x``
free.  Free variables are split as ``x = x+ - x-``; rows with negative right
hand side get an artificial variable and are handled by a phase-one
objective.  Pivoting uses Bland's rule, so the method terminates and its
output is a deterministic function of its input.

The kernels are compiled with numba; the Python wrappers below translate
status codes into exceptions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

EPS_LP = 1e-9
_PIVOT_TOL = 1e-11
_MAX_ITER = 20000

OPTIMAL, INFEASIBLE, UNBOUNDED, STALLED = 0, 1, 2, 3


class LpError(Exception):
    pass


class LpInfeasible(LpError):
    pass


class LpUnbounded(LpError):
    pass


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray
    normals: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.objective, dtype=np.float64).reshape(-1)
        A = np.ascontiguousarray(self.normals, dtype=np.float64)
        b = np.ascontiguousarray(self.bounds, dtype=np.float64).reshape(-1)
        if A.ndim != 2 or A.shape[0] < 1:
            raise ValueError("need at least one constraint")
        if A.shape[1] != c.shape[0] or A.shape[0] != b.shape[0]:
            raise ValueError("inconsistent LP dimensions")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "bounds", b)

    @classmethod
    def from_constraints(cls, objective, constraints):
        normals = [n for n, _ in constraints]
        bounds = [b for _, b in constraints]
        return cls(np.asarray(objective, float), np.asarray(normals, float), np.asarray(bounds, float))


@dataclass(frozen=True)
class LpResult:
    optimal_value: float
    optimizer: np.ndarray


@njit(cache=True)
def _pivot(T, basis, r, j):
    T[r, :] /= T[r, j]
    for i in range(T.shape[0]):
        if i != r:
            f = T[i, j]
            if f != 0.0:
                T[i, :] -= f * T[r, :]
    basis[r] = j


@njit(cache=True)
def _iterate(T, basis, n_cols):
    """Run Bland-rule pivots on columns [0, n_cols). Returns status."""
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    for _ in range(_MAX_ITER):
        enter = -1
        for j in range(n_cols):
            if T[m, j] < -_PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        leave = -1
        best = 0.0
        for i in range(m):
            a = T[i, enter]
            if a > _PIVOT_TOL:
                ratio = T[i, rhs] / a
                if leave < 0 or ratio < best - 1e-14 or (
                    abs(ratio - best) <= 1e-14 and basis[i] < basis[leave]
                ):
                    leave = i
                    best = ratio
        if leave < 0:
            return UNBOUNDED
        _pivot(T, basis, leave, enter)
    return STALLED


@njit(cache=True)
def simplex_kernel(A, b, c, feas_tol):
    """maximize c.x s.t. A x <= b, x free. Returns (status, value, x)."""
    m, d = A.shape
    n_art = 0
    for i in range(m):
        if b[i] < 0.0:
            n_art += 1
    art0 = 2 * d + m
    nv = art0 + n_art
    T = np.zeros((m + 1, nv + 1))
    basis = np.empty(m, np.int64)
    k = 0
    for i in range(m):
        s = 1.0 if b[i] >= 0.0 else -1.0
        for j in range(d):
            T[i, j] = s * A[i, j]
            T[i, d + j] = -s * A[i, j]
        T[i, 2 * d + i] = s
        T[i, nv] = s * b[i]
        if b[i] < 0.0:
            T[i, art0 + k] = 1.0
            basis[i] = art0 + k
            k += 1
        else:
            basis[i] = 2 * d + i
    x = np.zeros(d)

    if n_art > 0:
        for j in range(art0, nv):
            T[m, j] = 1.0
        for i in range(m):
            if basis[i] >= art0:
                T[m, :] -= T[i, :]
        st = _iterate(T, basis, nv)
        if st == STALLED:
            return STALLED, 0.0, x
        if T[m, nv] < -feas_tol:
            return INFEASIBLE, 0.0, x
        # drive remaining artificials out of the basis
        for i in range(m):
            if basis[i] >= art0:
                for j in range(art0):
                    if abs(T[i, j]) > _PIVOT_TOL:
                        _pivot(T, basis, i, j)
                        break

    T[m, :] = 0.0
    for j in range(d):
        T[m, j] = -c[j]
        T[m, d + j] = c[j]
    for i in range(m):
        bi = basis[i]
        if bi < d:
            cb = c[bi]
        elif bi < 2 * d:
            cb = -c[bi - d]
        else:
            cb = 0.0
        if cb != 0.0:
            T[m, :] += cb * T[i, :]
    st = _iterate(T, basis, art0)
    if st != OPTIMAL:
        return st, 0.0, x
    for i in range(m):
        bi = basis[i]
        if bi < d:
            x[bi] += T[i, nv]
        elif bi < 2 * d:
            x[bi - d] -= T[i, nv]
    return OPTIMAL, T[m, nv], x


@njit(cache=True)
def support_many_kernel(A, b, U):
    """Support values h(P, U[k]) for each row of U; nan where not optimal."""
    out = np.empty(U.shape[0])
    for k in range(U.shape[0]):
        st, val, _ = simplex_kernel(A, b, U[k], EPS_LP)
        out[k] = val if st == OPTIMAL else np.nan
    return out


@njit(cache=True)
def chebyshev_kernel(A, b, cap):
    """Largest ball radius inside {A x <= b} (rows of A unit), capped.

    Returns (status, radius, center).
    """
    m, d = A.shape
    A2 = np.zeros((m + 1, d + 1))
    b2 = np.empty(m + 1)
    for i in range(m):
        nrm = 0.0
        for j in range(d):
            A2[i, j] = A[i, j]
            nrm += A[i, j] * A[i, j]
        A2[i, d] = np.sqrt(nrm)
        b2[i] = b[i]
    A2[m, d] = 1.0
    b2[m] = cap
    c = np.zeros(d + 1)
    c[d] = 1.0
    st, val, x = simplex_kernel(A2, b2, c, EPS_LP)
    return st, val, x[:d].copy()


@njit(cache=True)
def redundant_mask_kernel(A, b, eps):
    """Greedy redundancy marking: row i is dropped when the remaining kept
    rows already imply it."""
    m, d = A.shape
    keep = np.ones(m, np.bool_)
    for i in range(m):
        cnt = 0
        for r in range(m):
            if r != i and keep[r]:
                cnt += 1
        if cnt == 0:
            continue
        A2 = np.empty((cnt, d))
        b2 = np.empty(cnt)
        q = 0
        for r in range(m):
            if r != i and keep[r]:
                A2[q, :] = A[r, :]
                b2[q] = b[r]
                q += 1
        st, val, _ = simplex_kernel(A2, b2, A[i].copy(), EPS_LP)
        if st == OPTIMAL and val <= b[i] + eps:
            keep[i] = False
    return keep


def _arrays(A, b):
    return (np.ascontiguousarray(A, dtype=np.float64), np.ascontiguousarray(b, dtype=np.float64))


def solve_lp(problem: LpProblem) -> LpResult:
    """Maximize the objective over the feasible region.

    Raises LpInfeasible or LpUnbounded.
    """
    st, val, x = simplex_kernel(problem.normals, problem.bounds, problem.objective, EPS_LP)
    if st == INFEASIBLE:
        raise LpInfeasible("no point satisfies all constraints")
    if st == UNBOUNDED:
        raise LpUnbounded("objective unbounded above")
    if st == STALLED:
        raise LpError("simplex iteration limit reached")
    return LpResult(float(val), x)


def feasible_point(normals, bounds) -> np.ndarray:
    """A point of {x : normals @ x <= bounds}, as central as a capped
    Chebyshev ball allows.  Raises LpInfeasible."""
    A, b = _arrays(normals, bounds)
    if A.ndim != 2 or A.shape[0] < 1:
        raise ValueError("need at least one constraint")
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0):
        # 0 . x <= b is either vacuous or contradictory
        if np.any(b[norms == 0] < -EPS_LP):
            raise LpInfeasible("contradictory constant constraint")
        A, b, norms = A[norms > 0], b[norms > 0], norms[norms > 0]
        if A.shape[0] == 0:
            return np.zeros(np.asarray(normals).shape[1])
    st, r, x = chebyshev_kernel(A / norms[:, None], b / norms, 1.0)
    if st != OPTIMAL or r < -EPS_LP:
        raise LpInfeasible("no point satisfies all constraints")
    return x


def support_values(A, b, U) -> np.ndarray:
    """Batch of support-function LPs; raises LpUnbounded/LpError on failure."""
    A, b = _arrays(A, b)
    U = np.ascontiguousarray(np.atleast_2d(U), dtype=np.float64)
    out = support_many_kernel(A, b, U)
    if np.any(np.isnan(out)):
        raise LpUnbounded("support function not finite (unbounded or empty polytope)")
    return out
