from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from tessforest.linalg_lp import (
    EPS_LP,
    LpInfeasible,
    LpProblem,
    LpUnbounded,
    feasible_point,
    solve_lp,
    support_values,
)

SQUARE = (np.array([[1.0, 0], [0, 1], [-1, 0], [0, -1]]), np.array([1.0, 1, 0, 0]))


def test_box_support():
    r = solve_lp(LpProblem([1.0, 0.0], *SQUARE))
    assert r.optimal_value == pytest.approx(1.0, abs=EPS_LP)
    assert r.optimizer[0] == pytest.approx(1.0, abs=EPS_LP)


def test_corner_maximizer():
    r = solve_lp(LpProblem([1.0, 1.0], *SQUARE))
    assert r.optimal_value == pytest.approx(2.0, abs=EPS_LP)
    np.testing.assert_allclose(r.optimizer, [1.0, 1.0], atol=EPS_LP)


def test_unbounded_half_line():
    with pytest.raises(LpUnbounded):
        solve_lp(LpProblem([1.0, 0.0], [[-1.0, 0.0]], [0.0]))


def test_infeasible():
    with pytest.raises(LpInfeasible):
        solve_lp(LpProblem([0.3, 1.0], [[1.0, 0.0], [-1.0, 0.0]], [0.0, -1.0]))


def test_from_constraints_matches():
    p = LpProblem.from_constraints([1.0, 1.0], [([1.0, 0.0], 1.0), ([0.0, 1.0], 2.0),
                                                 ([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0)])
    assert solve_lp(p).optimal_value == pytest.approx(3.0, abs=EPS_LP)


@pytest.mark.parametrize("bad", [
    dict(objective=[1.0], normals=np.zeros((0, 1)), bounds=[]),
    dict(objective=[1.0, 2.0], normals=[[1.0]], bounds=[1.0]),
    dict(objective=[np.nan], normals=[[1.0]], bounds=[1.0]),
])
def test_malformed_problem(bad):
    with pytest.raises(ValueError):
        LpProblem(**bad)


def test_feasible_point_square():
    x = feasible_point(*SQUARE)
    assert np.all(SQUARE[0] @ x <= SQUARE[1] + EPS_LP)


def test_feasible_point_infeasible():
    with pytest.raises(LpInfeasible):
        feasible_point([[1.0], [-1.0]], [-1.0, -1.0])


def test_feasible_point_thin_strip():
    A = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    b = np.array([1e-9, 0, 1, 1])
    x = feasible_point(A, b)
    assert abs(x[0]) <= 1e-9 + EPS_LP
    assert np.all(A @ x <= b + EPS_LP)


def _random_bounded_lp(g, d, m):
    A = np.vstack([np.eye(d), -np.eye(d), g.standard_normal((m, d))])
    b = np.concatenate([g.uniform(0.5, 2, 2 * d), g.uniform(0.05, 2, m)])
    return A, b


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 5), m=st.integers(0, 10))
def test_strong_duality_against_independent_dual(seed, d, m):
    # dual min b.y s.t. A^T y = c, y >= 0 solved by scipy
    g = np.random.default_rng(seed)
    A, b = _random_bounded_lp(g, d, m)
    c = g.standard_normal(d)
    primal = solve_lp(LpProblem(c, A, b))
    dual = linprog(b, A_eq=A.T, b_eq=c, bounds=[(0, None)] * len(b), method="highs")
    assert dual.status == 0
    assert abs(primal.optimal_value - dual.fun) <= 10 * EPS_LP
    assert np.all(A @ primal.optimizer <= b + EPS_LP)
    assert c @ primal.optimizer == pytest.approx(primal.optimal_value, abs=EPS_LP)


def test_vertex_generated_polytope():
    g = np.random.default_rng(11)
    for d in (2, 3, 4):
        V = g.standard_normal((4 * d + 3, d))
        hull = ConvexHull(V)
        A, b = hull.equations[:, :d], -hull.equations[:, d]
        U = g.standard_normal((100, d))
        want = (U @ V.T).max(axis=1)
        got = np.array([solve_lp(LpProblem(u, A, b)).optimal_value for u in U])
        np.testing.assert_allclose(got, want, atol=EPS_LP)
        np.testing.assert_allclose(support_values(A, b, U), want, atol=EPS_LP)


def test_degenerate_vertex_terminates():
    # many constraints active at the origin: classic cycling bait for Dantzig's rule
    ang = np.linspace(0, np.pi / 2, 9)
    A = np.vstack([np.column_stack([-np.cos(ang), -np.sin(ang)]), [[1.0, 1.0]]])
    b = np.concatenate([np.zeros(9), [1.0]])
    r = solve_lp(LpProblem([1.0, 0.5], A, b))
    assert r.optimal_value == pytest.approx(1.0, abs=EPS_LP)


def test_bit_identical_results():
    g = np.random.default_rng(5)
    A, b = _random_bounded_lp(g, 3, 6)
    c = g.standard_normal(3)
    r1 = solve_lp(LpProblem(c, A, b))
    r2 = solve_lp(LpProblem(c.copy(), A.copy(), b.copy()))
    assert r1.optimal_value == r2.optimal_value
    assert np.array_equal(r1.optimizer, r2.optimizer)
