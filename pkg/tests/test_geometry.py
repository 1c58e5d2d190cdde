from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tessforest import geometry as geo
from tessforest.geometry import Ball, Box, HPolytope, Hyperplane
from tessforest.rng import RngStream

SQ = Box.cube(2)
SQP = SQ.to_polytope()
TRI = HPolytope([[-1.0, 0], [0, -1], [1, 1]], [0.0, 0, 1])
R2 = 1 / math.sqrt(2)


def test_hyperplane_requires_unit_direction():
    with pytest.raises(ValueError):
        Hyperplane([1.0, 1.0], 0.0)
    Hyperplane([R2, R2], 0.3)


def test_window_invariants():
    with pytest.raises(ValueError):
        Box([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        Ball([0.0, 0.0], 0.0)


def test_support_examples():
    assert geo.support(SQ, [1.0, 0.0]) == 1.0
    assert geo.support(Ball([0.0, 0.0, 0.0], 2.5), [0.0, 0.6, 0.8]) == pytest.approx(2.5)
    assert geo.support(TRI, [R2, R2]) == pytest.approx(R2, abs=1e-9)


def test_width_examples():
    for i in range(3):
        assert geo.width(Box.cube(3), np.eye(3)[i]) == pytest.approx(1.0)
    assert geo.width(Ball([1.0, 2.0], 0.7), [R2, -R2]) == pytest.approx(1.4)
    assert geo.width(SQP, [R2, R2]) == pytest.approx(math.sqrt(2), abs=1e-9)


def test_polytope_support_matches_box_closed_form():
    g = np.random.default_rng(0)
    box = Box([-1.0, 0.5, 2.0], [0.3, 0.9, 7.0])
    U = g.standard_normal((1000, 3))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    np.testing.assert_allclose(geo.support_many(box.to_polytope(), U), geo.support_many(box, U), atol=1e-9)


def test_hits_examples():
    assert geo.hits(SQP, Hyperplane([1.0, 0.0], 0.5))
    assert not geo.hits(SQP, Hyperplane([1.0, 0.0], 1.5))
    assert geo.hits(SQP, Hyperplane([1.0, 0.0], 1.0))


def test_split_examples():
    below, above = geo.split(SQP, Hyperplane([1.0, 0.0], 0.5))
    np.testing.assert_allclose(below.bounding_box()[1], [0.5, 1.0], atol=1e-9)
    np.testing.assert_allclose(above.bounding_box()[0], [0.5, 0.0], atol=1e-9)
    below, above = geo.split(SQP, Hyperplane([1.0, 0.0], 2.0))
    assert above is None and below is SQP
    below, above = geo.split(SQP, Hyperplane([R2, R2], R2))
    for k, piece in enumerate((below, above)):
        v, se = geo.mc_volume(piece, 40000, RngStream(1, (k,)))
        assert abs(v - 0.5) <= 4 * se


def test_grazing_split_has_one_empty_side():
    below, above = geo.split(SQP, Hyperplane([1.0, 0.0], 1.0))
    assert above is None and below is not None


def test_contains_and_tie_breaking():
    assert geo.contains(SQP, [0.5, 0.5])
    assert not geo.contains(SQP, [2.0, 0.0])
    below, above = geo.split(SQP, Hyperplane([1.0, 0.0], 0.5))
    # the point on the cut is inside both closed pieces; cell lookup sends it below
    from tessforest.directions import DirectionalDistribution
    from tessforest.tessellation import Internal, Leaf, StitPartition
    root = Internal(Hyperplane([1.0, 0.0], 0.5), 0.1, Leaf(below, 0.1), Leaf(above, 0.1))
    p = StitPartition(SQ, DirectionalDistribution.axis(2), 1.0, root)
    assert p.cell_of([0.5, 0.2]) == 0


def test_bounding_ball_examples():
    c, r = geo.bounding_ball(SQP)
    np.testing.assert_allclose(c, [0.5, 0.5])
    assert r == pytest.approx(math.sqrt(2) / 2)
    thin = SQP.with_halfspace([1.0, 0.0], 1e-8)
    _, r = geo.bounding_ball(thin)
    assert r == pytest.approx(0.5, abs=1e-6)


def test_mc_volume_examples():
    v, se = geo.mc_volume(SQP, 500, RngStream(2))
    assert v == 1.0 and se == 0.0
    v, se = geo.mc_volume(TRI, 100_000, RngStream(3))
    assert abs(v - 0.5) <= 4 * se
    strip = SQP.with_halfspace([1.0, 0.0], 1e-3)
    v, se = geo.mc_volume(strip, 10_000, RngStream(4))
    assert abs(v - 1e-3) <= 4 * se + 1e-12
    with pytest.raises(ValueError):
        geo.mc_volume(SQP, 99, RngStream(0))


def test_diameter_surrogate_examples():
    assert geo.diameter_surrogate(SQP, np.eye(2)) == pytest.approx(1.0)
    dirs = geo.sphere_directions(2, 256)
    s = geo.diameter_surrogate(SQP, dirs)
    assert 1.41 <= s <= math.sqrt(2) + 1e-9
    assert geo.diameter_surrogate(SQP.scaled(2.0), dirs) == pytest.approx(2 * s, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.01, 100.0))
def test_surrogate_homogeneity_property(seed, s):
    g = np.random.default_rng(seed)
    P = SQP
    for _ in range(3):
        u = g.standard_normal(2)
        u /= np.linalg.norm(u)
        Q = P.with_halfspace(u, float(u @ [0.5, 0.5] + g.uniform(0.05, 0.4)))
        P = Q
    dirs = geo.sphere_directions(2, 64, seed=3)
    assert geo.diameter_surrogate(P.scaled(s), dirs) == pytest.approx(s * geo.diameter_surrogate(P, dirs),
                                                                      rel=1e-9)


def test_centroid_examples():
    c = geo.centroid_estimate(Box.cube(2, -0.5, 0.5).to_polytope(), 20000, RngStream(5))
    assert np.all(np.abs(c) < 0.02)
    n = 100_000
    g = np.random.default_rng(6)
    c = geo.centroid_estimate(TRI, n, RngStream(6))
    # SE per coordinate: sd of a triangle marginal (1/sqrt(18)) over sqrt(accepted)
    se = (1 / math.sqrt(18)) / math.sqrt(n / 2)
    assert np.all(np.abs(c - 1 / 3) <= 4 * se)
    v = np.array([3.0, -1.0])
    c1 = geo.centroid_estimate(TRI, 20000, RngStream(7))
    c2 = geo.centroid_estimate(TRI.translated(v), 20000, RngStream(7))
    np.testing.assert_allclose(c2 - c1, v, atol=1e-9)
    del g


def test_centroid_requires_hits():
    # a diagonal sliver: its bounding box is the whole square
    sliver = SQP.with_halfspace([R2, -R2], 1e-9).with_halfspace([-R2, R2], 1e-9)
    with pytest.raises(ValueError):
        geo.centroid_estimate(sliver, 100, RngStream(0))


def test_polygon_vertices_examples():
    V = geo.polygon_vertices_2d(SQP)
    assert len(V) == 4
    start = int(np.argmin(V.sum(axis=1)))
    np.testing.assert_allclose(np.roll(V, -start, axis=0), [[0, 0], [1, 0], [1, 1], [0, 1]], atol=1e-12)
    V2 = geo.polygon_vertices_2d(HPolytope(np.vstack([SQP.normals, [[1.0, 0.0]]]),
                                           np.concatenate([SQP.bounds, [5.0]])))
    assert len(V2) == 4
    below, _ = geo.split(SQP, Hyperplane([R2, R2], R2))
    assert len(geo.polygon_vertices_2d(below)) == 3
    with pytest.raises(ValueError):
        geo.polygon_vertices_2d(Box.cube(3).to_polytope())


def _signed_area(V):
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_split_conservation_and_ccw(seed):
    g = np.random.default_rng(seed)
    P = Box.cube(2, -1, 1).to_polytope()
    for _ in range(int(g.integers(0, 4))):
        u = g.standard_normal(2)
        u /= np.linalg.norm(u)
        P = P.with_halfspace(u, float(g.uniform(0.1, 0.9)))
    u = g.standard_normal(2)
    u /= np.linalg.norm(u)
    h = Hyperplane(u, float(g.uniform(-0.5, 0.5)))
    below, above = geo.split(P, h)
    areas = [_signed_area(geo.polygon_vertices_2d(Q)) if Q is not None else 0.0 for Q in (below, above)]
    assert all(a >= 0 for a in areas)
    assert sum(areas) == pytest.approx(_signed_area(geo.polygon_vertices_2d(P)), rel=1e-9)
    if not geo.hits(P, h):
        assert (below is None) != (above is None)


def test_redundant_rows_pruned_without_changing_shape():
    P = SQP
    for b in np.linspace(2, 10, 20):
        P = P.with_halfspace([1.0, 0.0], float(b))
    assert P.n_halfspaces <= 4 * 2 + 1
    np.testing.assert_allclose(P.bounding_box()[1], [1.0, 1.0], atol=1e-9)


def test_sphere_directions_deterministic_and_unit():
    for d in (1, 2, 3, 5):
        a = geo.sphere_directions(d, 64, seed=4)
        b = geo.sphere_directions(d, 64, seed=4)
        assert np.array_equal(a, b)
        np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0)


def test_touches_box():
    W = Box.cube(2, -1, 1)
    assert geo.touches_box(W.to_polytope(), W)
    inner = Box.cube(2, -0.5, 0.5).to_polytope()
    assert not geo.touches_box(inner, W)
