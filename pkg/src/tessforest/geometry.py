"""Windows, hyperplanes and H-polytope cells.

Cells are stored as intersections of halfspaces ``<n, x> <= b`` with unit
normals; every metric query on a cell is answered with the LP kernels in
:mod:`tessforest.linalg_lp`.  Windows (boxes and balls) use closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import linalg_lp as lp
from .rng import RngStream

EPS = lp.EPS_LP


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.size < 1 or not np.all(np.isfinite(v)):
        raise ValueError("vectors must be finite with dimension >= 1")
    return v


@dataclass(frozen=True)
class Hyperplane:
    """H(u, t) = {x : <x, u> = t}."""

    direction: np.ndarray
    offset: float

    def __post_init__(self):
        u = _vec(self.direction)
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ValueError("hyperplane direction must be a unit vector")
        object.__setattr__(self, "direction", u)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dimension(self) -> int:
        return self.direction.size

    def side(self, X) -> np.ndarray:
        """True where a point lies strictly above (<u,x> > t)."""
        return np.atleast_2d(X) @ self.direction > self.offset


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lower), _vec(self.upper)
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise ValueError("box needs lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, d: int, lo: float = 0.0, hi: float = 1.0) -> "Box":
        return cls(np.full(d, lo), np.full(d, hi))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def sides(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def to_polytope(self) -> "HPolytope":
        d = self.dimension
        eye = np.eye(d)
        return HPolytope(np.vstack([eye, -eye]), np.concatenate([self.upper, -self.lower]))

    def contains(self, X, tol: float = EPS) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lower - tol) & (X <= self.upper + tol), axis=1)

    def interior_contains(self, x, tol: float = EPS) -> bool:
        x = _vec(x)
        return bool(np.all((x > self.lower + tol) & (x < self.upper - tol)))

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def to_dict(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _vec(self.center)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dimension(self) -> int:
        return self.center.size

    def contains(self, X, tol: float = EPS) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.linalg.norm(X - self.center, axis=1) <= self.radius + tol

    def interior_contains(self, x, tol: float = EPS) -> bool:
        return bool(np.linalg.norm(_vec(x) - self.center) < self.radius - tol)

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def enclosing_box(self) -> Box:
        return Box(*self.bounding_box())

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


Window = Union[Box, Ball]


def window_from_dict(spec: dict) -> Window:
    kind = spec.get("kind")
    if kind == "box":
        return Box(spec["lower"], spec["upper"])
    if kind == "ball":
        return Ball(spec["center"], spec["radius"])
    raise ValueError(f"unknown window kind {kind!r}")


class HPolytope:
    """Convex cell {x : normals @ x <= bounds}, rows of ``normals`` unit.

    Immutable apart from the bounding-box cache, which is written once with
    a single attribute assignment.
    """

    __slots__ = ("normals", "bounds", "_bbox")

    def __init__(self, normals, bounds):
        A = np.array(normals, dtype=np.float64, ndmin=2)
        b = np.array(bounds, dtype=np.float64).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError("normals and bounds disagree in length")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero normal")
        self.normals = np.ascontiguousarray(A / norms[:, None])
        self.bounds = np.ascontiguousarray(b / norms)
        self.normals.flags.writeable = False
        self.bounds.flags.writeable = False
        self._bbox = None

    @property
    def dimension(self) -> int:
        return self.normals.shape[1]

    @property
    def n_halfspaces(self) -> int:
        return self.normals.shape[0]

    def with_halfspace(self, normal, bound, prune: bool = True) -> "HPolytope":
        A = np.vstack([self.normals, np.reshape(normal, (1, -1))])
        b = np.append(self.bounds, bound)
        P = HPolytope(A, b)
        if prune and P.n_halfspaces > 4 * P.dimension:
            P = P.pruned()
        return P

    def pruned(self) -> "HPolytope":
        keep = lp.redundant_mask_kernel(self.normals, self.bounds, EPS)
        return HPolytope(self.normals[keep], self.bounds[keep])

    def bounding_box(self):
        if self._bbox is None:
            d = self.dimension
            eye = np.eye(d)
            vals = lp.support_values(self.normals, self.bounds, np.vstack([eye, -eye]))
            self._bbox = (-vals[d:], vals[:d])
        lo, hi = self._bbox
        return lo.copy(), hi.copy()

    def scaled(self, s: float) -> "HPolytope":
        if not s > 0:
            raise ValueError("scale must be positive")
        return HPolytope(self.normals, self.bounds * s)

    def translated(self, v) -> "HPolytope":
        return HPolytope(self.normals, self.bounds + self.normals @ _vec(v))

    def to_dict(self):
        return {"normals": self.normals.tolist(), "bounds": self.bounds.tolist()}

    def __repr__(self):
        return f"HPolytope(d={self.dimension}, m={self.n_halfspaces})"


Body = Union[Box, Ball, HPolytope]


def as_polytope(body) -> HPolytope:
    if isinstance(body, HPolytope):
        return body
    if isinstance(body, Box):
        return body.to_polytope()
    raise ValueError("ball windows have no exact polytope form")


# ---------------------------------------------------------------- queries

def support(body: Body, u) -> float:
    """h(body, u) = sup over the body of <u, x>."""
    u = _vec(u)
    if isinstance(body, Box):
        return float(np.sum(np.maximum(u * body.lower, u * body.upper)))
    if isinstance(body, Ball):
        return float(u @ body.center + body.radius * np.linalg.norm(u))
    return float(lp.support_values(body.normals, body.bounds, u)[0])


def support_many(body: Body, U) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    if isinstance(body, Box):
        return np.sum(np.maximum(U * body.lower, U * body.upper), axis=1)
    if isinstance(body, Ball):
        return U @ body.center + body.radius * np.linalg.norm(U, axis=1)
    return lp.support_values(body.normals, body.bounds, U)


def width(body: Body, u) -> float:
    u = _vec(u)
    h = support_many(body, np.vstack([u, -u]))
    return float(h[0] + h[1])


def widths(body: Body, U) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    h = support_many(body, np.vstack([U, -U]))
    k = U.shape[0]
    return h[:k] + h[k:]


def hits(cell: Body, h: Hyperplane) -> bool:
    """Does the hyperplane meet the closed cell?"""
    u = h.direction
    s = support_many(cell, np.vstack([u, -u]))
    return bool(-s[1] - EPS <= h.offset <= s[0] + EPS)


def has_interior(cell: HPolytope) -> bool:
    d = cell.dimension
    st, r, _ = lp.chebyshev_kernel(cell.normals, cell.bounds, 1.0)
    return st == lp.OPTIMAL and r > EPS and d >= 1


def split(cell: HPolytope, h: Hyperplane):
    """(below, above) pieces of the cell; an empty-interior side is None and
    the other side is then the cell itself."""
    u, t = h.direction, h.offset
    below = cell.with_halfspace(u, t)
    if not has_interior(below):
        return None, cell
    above = cell.with_halfspace(-u, -t)
    if not has_interior(above):
        return cell, None
    return below, above


def contains(cell: Body, x) -> bool:
    return bool(contains_points(cell, _vec(x))[0])


def contains_points(cell: Body, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if isinstance(cell, (Box, Ball)):
        return cell.contains(X)
    return np.all(X @ cell.normals.T <= cell.bounds + EPS, axis=1)


def bounding_ball(cell: Body):
    """(center, radius) of the ball circumscribing the axis bounding box."""
    if isinstance(cell, Ball):
        return cell.center.copy(), cell.radius
    lo, hi = cell.bounding_box()
    return (lo + hi) / 2.0, float(np.linalg.norm(hi - lo) / 2.0)


def mc_volume(cell: Body, n_points: int, rng):
    """Hit-or-miss volume estimate over the bounding box: (estimate, std_error)."""
    if n_points < 100:
        raise ValueError("n_points must be at least 100")
    lo, hi = cell.bounding_box()
    g = _gen(rng)
    X = lo + (hi - lo) * g.random((n_points, lo.size))
    p = float(np.mean(contains_points(cell, X)))
    vol = float(np.prod(hi - lo))
    return vol * p, vol * np.sqrt(p * (1.0 - p) / n_points)


def centroid_estimate(cell: Body, n_points: int, rng) -> np.ndarray:
    if n_points < 100:
        raise ValueError("n_points must be at least 100")
    lo, hi = cell.bounding_box()
    g = _gen(rng)
    X = lo + (hi - lo) * g.random((n_points, lo.size))
    inside = contains_points(cell, X)
    if not inside.any():
        raise ValueError("no sample landed inside the cell; increase n_points")
    return X[inside].mean(axis=0)


def sphere_directions(d: int, k: int = 256, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform unit directions, one per antipodal pair.

    d=2 uses equally spaced angles on [0, pi) with a seeded rotation (seed 0
    means no rotation); d>=3 maps a scrambled Halton sequence through the
    Gaussian quantile function.
    """
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        off = 0.0 if seed == 0 else np.random.default_rng(seed).random()
        ang = np.pi * (np.arange(k) + off) / k
        return np.column_stack([np.cos(ang), np.sin(ang)])
    from scipy.stats import norm, qmc

    pts = qmc.Halton(d, scramble=True, seed=seed).random(k)
    Z = norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def diameter_surrogate(cell: Body, directions) -> float:
    """max over the direction set of the cell's width."""
    return float(np.max(widths(cell, directions)))


def touches_box(cell: HPolytope, box: Box, tol: float = 1e-7) -> bool:
    """Does the cell reach the boundary of the (containing) box window?"""
    lo, hi = cell.bounding_box()
    return bool(np.any(lo <= box.lower + tol) or np.any(hi >= box.upper - tol))


def polygon_vertices_2d(cell: Body, tol: float = 1e-9) -> np.ndarray:
    """Counterclockwise vertex cycle of a bounded planar cell."""
    P = as_polytope(cell)
    if P.dimension != 2:
        raise ValueError("polygon_vertices_2d needs a 2-dimensional cell")
    A, b = P.normals, P.bounds
    pts = []
    m = A.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            M = A[[i, j]]
            det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            if abs(det) < 1e-14:
                continue
            v = np.linalg.solve(M, b[[i, j]])
            if np.all(A @ v <= b + tol * max(1.0, np.abs(b).max())):
                pts.append(v)
    uniq = []
    for p in pts:
        if not any(np.linalg.norm(p - q) <= tol for q in uniq):
            uniq.append(p)
    V = np.array(uniq).reshape(-1, 2)
    if len(V) < 3:
        return V
    c = V.mean(axis=0)
    order = np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))
    return V[order]
