from __future__ import annotations

import json
import math

import numpy as np
import pytest

from tessforest import geometry as geo
from tessforest.directions import DirectionalDistribution
from tessforest.geometry import Ball, Box, Hyperplane
from tessforest.rng import RngStream
from tessforest.stats import ks_two_sample
from tessforest.tessellation import (
    Internal,
    Leaf,
    PhtPartition,
    ResourceCapError,
    StitPartition,
    cell_count,
    cell_of,
    enumerate_cells,
    iterate,
    mondrian_lifetime,
    partition_from_dict,
    sample_partition,
    sample_pht,
    sample_stit,
    sample_stit_zero_cell,
    sample_zero_cell,
    zero_cell,
)

SQ = Box.cube(2)
AX1 = DirectionalDistribution.axis(1)
AX2 = DirectionalDistribution.axis(2)
ISO2 = DirectionalDistribution.isotropic(2)
UNIT = Box.cube(1)


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    return v.mean(), v.std(ddof=1) / math.sqrt(len(v))


def test_small_lifetime_no_cut_frequency():
    # lambda * Lambda([W]) = 0.1 for the unit square under the axis measure
    s = RngStream(10)
    n = 4000
    single = np.array([cell_count(sample_stit(SQ, AX2, 0.1, s.child(i))) == 1 for i in range(n)])
    p = math.exp(-0.1)
    assert p == pytest.approx(0.905, abs=5e-4)
    assert abs(single.mean() - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_one_dimensional_cell_count_mean():
    s = RngStream(11)
    lam = 3.0
    counts = [cell_count(sample_stit(UNIT, AX1, lam, s.child(i))) for i in range(3000)]
    m, se = _mean_se(counts)
    assert abs(m - (1 + lam)) <= 4 * se


def test_mondrian_convention_small():
    # Mondrian lifetime 1 in d=2 is lifetime 2 here; E[N] = (1 + 1)^2
    assert mondrian_lifetime(1.0, 2) == 2.0
    s = RngStream(12)
    counts = [cell_count(sample_stit(SQ, AX2, mondrian_lifetime(1.0, 2), s.child(i))) for i in range(2000)]
    m, se = _mean_se(counts)
    assert abs(m - 4.0) <= 4 * se


def test_cut_times_increase_and_children_nonempty():
    p = sample_stit(SQ, ISO2, 6.0, RngStream(13))
    stack = [(p.root, 0.0)]
    while stack:
        node, t = stack.pop()
        if isinstance(node, Leaf):
            assert node.birth_time >= t
            continue
        assert t < node.cut_time <= p.lifetime
        for child in (node.below, node.above):
            stack.append((child, node.cut_time))
    for c in p.cells():
        assert geo.has_interior(c)


@pytest.mark.parametrize("kind,phi", [("stit", AX2), ("stit", ISO2), ("pht", AX2), ("pht", ISO2)])
def test_cells_tile_the_window(kind, phi):
    p = sample_partition(kind, SQ, phi, 4.0, RngStream(14))
    vols, ses = [], []
    for k, c in enumerate(p.cells()):
        v, se = geo.mc_volume(c, 4000, RngStream(15, (k,)))
        vols.append(v)
        ses.append(se)
    assert abs(sum(vols) - 1.0) <= 4 * math.sqrt(sum(s * s for s in ses)) + 1e-12
    # and every random point lands in exactly one cell
    X = np.random.default_rng(0).random((300, 2))
    hits = np.array([geo.contains_points(c, X) for c in p.cells()]).sum(axis=0)
    assert np.all(hits >= 1)


def test_pht_hyperplane_count_mean():
    s = RngStream(16)
    n = [len(sample_pht(SQ, AX2, 4.0, s.child(i)).hyperplanes) for i in range(3000)]
    m, se = _mean_se(n)
    assert abs(m - 4.0) <= 4 * se


def test_pht_hyperplanes_hit_window():
    p = sample_pht(SQ, ISO2, 8.0, RngStream(17))
    assert all(geo.hits(SQ.to_polytope(), h) for h in p.hyperplanes)


def test_one_dimensional_pht_matches_stit():
    s = RngStream(18)
    a = [cell_count(sample_stit(UNIT, AX1, 2.5, s.child(0, i))) for i in range(2000)]
    b = [cell_count(sample_pht(UNIT, AX1, 2.5, s.child(1, i))) for i in range(2000)]
    _, p = ks_two_sample(a, b)
    assert p > 0.01


def test_enumeration_examples():
    assert len(enumerate_cells(PhtPartition(SQ, AX2, 1.0, []))) == 1
    cross = PhtPartition(SQ, AX2, 1.0, [Hyperplane([1.0, 0.0], 0.5), Hyperplane([0.0, 1.0], 0.5)])
    cells = enumerate_cells(cross)
    assert len(cells) == 4
    for c in cells:
        lo, hi = c.bounding_box()
        np.testing.assert_allclose(hi - lo, [0.5, 0.5], atol=1e-9)
    for k in (1, 3, 7):
        hs = [Hyperplane([1.0, 0.0], (i + 1) / (k + 1)) for i in range(k)]
        assert cell_count(PhtPartition(SQ, AX2, 1.0, hs)) == k + 1


def test_pht_general_position_count():
    # lines in general position crossing the square: the count follows from
    # Euler's relation, 1 + (lines) + (crossings inside)
    p = sample_pht(SQ, ISO2, 6.0, RngStream(19))
    U, T = p.U, p.T
    inside = 0
    for i in range(len(T)):
        for j in range(i + 1, len(T)):
            x = np.linalg.solve(np.vstack([U[i], U[j]]), [T[i], T[j]])
            inside += bool(np.all((x > 0) & (x < 1)))
    assert cell_count(p) == 1 + len(T) + inside


def test_cell_of_examples():
    p = sample_stit(SQ, AX2, 1e-9, RngStream(1))
    assert cell_count(p) == 1 and cell_of(p, [0.3, 0.7]) == 0
    left = SQ.to_polytope().with_halfspace([1.0, 0.0], 0.5)
    right = SQ.to_polytope().with_halfspace([-1.0, 0.0], -0.5)
    root = Internal(Hyperplane([1.0, 0.0], 0.5), 0.2, Leaf(left, 0.2), Leaf(right, 0.2))
    q = StitPartition(SQ, AX2, 1.0, root)
    assert q.leaves[cell_of(q, [0.25, 0.9])].cell is left
    with pytest.raises(ValueError):
        cell_of(q, [1.5, 0.5])


@pytest.mark.parametrize("kind,phi", [("stit", ISO2), ("pht", ISO2), ("pht", AX2)])
def test_cross_lookup_consistency(kind, phi):
    p = sample_partition(kind, SQ, phi, 6.0, RngStream(20))
    X = np.random.default_rng(1).random((1000, 2))
    keys, inv = p.cell_keys(X)
    for k, key in enumerate(keys):
        P = p.cell_polytope(key)
        assert np.all(geo.contains_points(P, X[inv == k]))
    if kind == "pht":
        polys, ekeys = p.enumerate_with_keys()
        assert set(keys) <= set(ekeys)
        same = {key: P for P, key in zip(polys, ekeys)}
        for k, key in enumerate(keys):
            assert np.all(geo.contains_points(same[key], X[inv == k]))


def test_zero_cell_examples():
    W = Box.cube(2, -1, 1)
    p = PhtPartition(W, AX2, 1.0, [])
    lo, hi = zero_cell(p).bounding_box()
    np.testing.assert_allclose(lo, [-1, -1])
    np.testing.assert_allclose(hi, [1, 1])
    a = 0.4
    q = PhtPartition(Box.cube(1, -1, 1), AX1, 1.0, [Hyperplane([1.0], a), Hyperplane([1.0], -a)])
    lo, hi = zero_cell(q).bounding_box()
    assert lo[0] == pytest.approx(-a) and hi[0] == pytest.approx(a)
    with pytest.raises(ValueError):
        zero_cell(sample_stit(SQ, AX2, 1.0, RngStream(0)))  # origin on the boundary


@pytest.mark.parametrize("phi", [AX2, ISO2])
def test_zero_cell_shortcuts_match_full_partitions(phi):
    W = Box.cube(2, -2, 2)
    for i in range(20):
        # streams are stateful, so each sampler gets a fresh one at the same position
        s = lambda: RngStream(21, (i,))  # noqa: E731
        full = sample_stit(W, phi, 3.0, s()).zero_cell()
        fast = sample_stit_zero_cell(W, phi, 3.0, s())
        np.testing.assert_allclose(full.bounding_box(), fast.bounding_box(), atol=1e-12)
        pht = sample_pht(W, phi, 3.0, s())
        z = sample_zero_cell("pht", W, phi, 3.0, s())
        brute = [c for c in pht.cells() if geo.contains(c, [0.0, 0.0])]
        assert len(brute) == 1
        np.testing.assert_allclose(z.bounding_box(), brute[0].bounding_box(), atol=1e-9)


def test_iterate_small_second_lifetime_leaves_partition():
    p1 = sample_stit(SQ, ISO2, 2.0, RngStream(22))
    p = iterate(p1, 1e-12, RngStream(23))
    assert p.lifetime == pytest.approx(2.0)
    assert cell_count(p) == cell_count(p1)


def test_iterate_mean_additivity_one_dimension():
    s = RngStream(24)
    a, b = [], []
    for i in range(2000):
        a.append(cell_count(iterate(sample_stit(UNIT, AX1, 1.0, s.child(0, i)), 1.5, s.child(1, i))))
        b.append(cell_count(sample_stit(UNIT, AX1, 2.5, s.child(2, i))))
    for v in (a, b):
        m, se = _mean_se(v)
        assert abs(m - 3.5) <= 4 * se


def test_serialization_round_trip_bit_exact():
    X = np.random.default_rng(2).random((500, 2))
    for kind, phi in (("stit", ISO2), ("pht", ISO2), ("stit", AX2)):
        p = sample_partition(kind, SQ, phi, 5.0, RngStream(25))
        doc = json.loads(json.dumps(p.to_dict()))
        q = partition_from_dict(doc)
        assert q.to_dict() == p.to_dict()
        kp, ip = p.cell_keys(X)
        kq, iq = q.cell_keys(X)
        assert kp == kq and np.array_equal(ip, iq)
        assert cell_count(q) == cell_count(p)
    with pytest.raises(ValueError):
        partition_from_dict({**doc, "format_version": 99})


def test_determinism():
    for kind in ("stit", "pht"):
        a = sample_partition(kind, SQ, ISO2, 7.0, RngStream(26)).to_dict()
        b = sample_partition(kind, SQ, ISO2, 7.0, RngStream(26)).to_dict()
        c = sample_partition(kind, SQ, ISO2, 7.0, RngStream(27)).to_dict()
        assert a == b and a != c


def test_resource_cap():
    with pytest.raises(ResourceCapError):
        sample_stit(SQ, AX2, 50.0, RngStream(0), max_cells=20)
    with pytest.raises(ResourceCapError):
        sample_pht(SQ, AX2, 50.0, RngStream(0), max_cells=20)
    grid = [Hyperplane(e, (i + 1) / 6) for e in ([1.0, 0.0], [0.0, 1.0]) for i in range(5)]
    p = PhtPartition(SQ, AX2, 1.0, grid, max_cells=20)  # 36 cells
    with pytest.raises(ResourceCapError):
        p.cells()


def test_ball_window_stit():
    B = Ball([0.0, 0.0], 1.0)
    p = sample_stit(B, ISO2, 3.0, RngStream(28))
    X = np.random.default_rng(3).standard_normal((200, 2))
    X = X / np.linalg.norm(X, axis=1, keepdims=True) * 0.9
    keys, _ = p.cell_keys(X)
    assert len(keys) >= 1


def test_invalid_arguments():
    with pytest.raises(ValueError):
        sample_stit(SQ, AX2, 0.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_pht(SQ, AX2, -1.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_stit(SQ, DirectionalDistribution.axis(3), 1.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_partition("voronoi", SQ, AX2, 1.0, RngStream(0))


def test_pht_cell_count_matches_enumeration_size_distribution():
    # PHT cell counts under the axis measure: (1 + N1)(1 + N2), N_i ~ Poisson(lambda / 2)
    s = RngStream(29)
    lam = 3.0
    counts = [cell_count(sample_pht(SQ, AX2, lam, s.child(i))) for i in range(2000)]
    m, se = _mean_se(counts)
    assert abs(m - (1 + lam / 2) ** 2) <= 4 * se
