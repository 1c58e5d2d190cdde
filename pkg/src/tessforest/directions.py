"""Directional distributions, associated zonoids, and hyperplane sampling.

A directional distribution is an even probability measure on the sphere.
Discrete measures store one representative per antipodal pair (first
nonzero coordinate positive) with the pair's total weight; samplers flip
the sign with probability 1/2.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import geometry as geo
from .geometry import Ball, Box, HPolytope, Hyperplane

MAX_REJECTIONS = 10**6


def isotropic_constant(d: int) -> float:
    """c_d with h(Pi, v) = c_d |v| for the isotropic zonoid."""
    return math.gamma(d / 2) / (2 * math.sqrt(math.pi) * math.gamma((d + 1) / 2))


def unit_ball_volume(k: int) -> float:
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def _canonical(u: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(u) > 1e-15)
    return -u if u[nz[0]] < 0 else u


@dataclass(frozen=True)
class DirectionalDistribution:
    kind: str  # "discrete" | "isotropic"
    d: int
    atoms: np.ndarray | None = None
    weights: np.ndarray | None = None

    @classmethod
    def discrete(cls, atoms, weights=None) -> "DirectionalDistribution":
        U = np.array(atoms, dtype=np.float64, ndmin=2)
        k, d = U.shape
        w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != k or np.any(w <= 0):
            raise ValueError("weights must be positive, one per atom")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {w.sum()}")
        norms = np.linalg.norm(U, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero atom")
        # leave already-unit atoms untouched so a serialized phi reloads bit-exactly
        U = np.where(np.abs(norms - 1.0)[:, None] > 1e-14, U / norms[:, None], U)
        merged: list[list] = []
        for u, wi in zip(U, w):
            u = _canonical(u)
            for m in merged:
                if np.linalg.norm(m[0] - u) < 1e-12:
                    m[1] += wi
                    break
            else:
                merged.append([u, wi])
        atoms_c = np.array([m[0] for m in merged])
        w_c = np.array([m[1] for m in merged])
        total = w_c.sum()
        return cls("discrete", d, atoms_c, w_c if abs(total - 1.0) <= 1e-14 else w_c / total)

    @classmethod
    def axis(cls, d: int) -> "DirectionalDistribution":
        """Uniform on the coordinate directions (the Mondrian case)."""
        return cls.discrete(np.eye(d))

    @classmethod
    def isotropic(cls, d: int) -> "DirectionalDistribution":
        if d < 1:
            raise ValueError("dimension must be >= 1")
        if d == 1:
            return cls.axis(1)
        return cls("isotropic", d)

    @classmethod
    def from_dict(cls, spec: dict, d: int | None = None) -> "DirectionalDistribution":
        kind = spec.get("kind")
        if kind == "axis":
            return cls.axis(int(spec.get("d", d)))
        if kind == "isotropic":
            return cls.isotropic(int(spec.get("d", d)))
        if kind == "discrete":
            return cls.discrete(spec["atoms"], spec.get("weights"))
        raise ValueError(f"unknown directional distribution kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "isotropic":
            return {"kind": "isotropic", "d": self.d}
        return {"kind": "discrete", "atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    def sample_direction(self, g: np.random.Generator) -> np.ndarray:
        if self.is_discrete:
            j = self._pick(g, self.weights)
            u = self.atoms[j]
            return -u if g.random() < 0.5 else u.copy()
        z = g.standard_normal(self.d)
        return z / np.linalg.norm(z)

    @staticmethod
    def _pick(g, w) -> int:
        j = int(np.searchsorted(np.cumsum(w), g.random() * w.sum(), side="right"))
        return min(j, len(w) - 1)


# ------------------------------------------------------------------ zonoid

def zonoid_support(phi: DirectionalDistribution, v) -> float:
    """h(Pi, v) = (1/2) * integral of |<u, v>| dphi(u)."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if phi.is_discrete:
        return float(0.5 * np.sum(phi.weights * np.abs(phi.atoms @ v)))
    return isotropic_constant(phi.d) * float(np.linalg.norm(v))


def zonoid_volume(phi: DirectionalDistribution) -> float:
    """vol_d(Pi); Pi is the zonotope sum of segments [-w_j u_j/2, w_j u_j/2]."""
    d = phi.d
    if not phi.is_discrete:
        return unit_ball_volume(d) * isotropic_constant(d) ** d
    S = phi.atoms * phi.weights[:, None]
    if S.shape[0] < d or np.linalg.matrix_rank(phi.atoms) < d:
        raise ValueError("directions span a proper subspace: zonoid is flat")
    total = 0.0
    for idx in itertools.combinations(range(S.shape[0]), d):
        total += abs(np.linalg.det(S[list(idx)]))
    return total


def h_min(phi: DirectionalDistribution, directions) -> float:
    """min of h(Pi, u) over a finite direction set."""
    U = np.atleast_2d(directions)
    if phi.is_discrete:
        return float(np.min(0.5 * np.abs(U @ phi.atoms.T) @ phi.weights))
    return isotropic_constant(phi.d)


class LambdaValue(NamedTuple):
    value: float
    bound_only: bool


def lambda_of(phi: DirectionalDistribution, body) -> LambdaValue:
    """Hyperplane measure of the set of hyperplanes hitting ``body``.

    Exact for discrete phi and for isotropic phi on balls and boxes; for
    isotropic phi on a general polytope, returns the bounding-ball value
    2r flagged ``bound_only``.
    """
    if phi.is_discrete:
        return LambdaValue(float(phi.weights @ geo.widths(body, phi.atoms)), False)
    if isinstance(body, Ball):
        return LambdaValue(2.0 * body.radius, False)
    if isinstance(body, Box):
        return LambdaValue(2.0 * isotropic_constant(phi.d) * float(body.sides.sum()), False)
    _, r = geo.bounding_ball(body)
    return LambdaValue(2.0 * r, True)


# ---------------------------------------------------------------- sampling

def sample_hit(phi: DirectionalDistribution, cell, rng, horizon: float = math.inf):
    """First hyperplane of a unit-rate Lambda clock that hits ``cell``.

    Candidates arrive at rate Lambda([B]) = 2r for the bounding ball B and
    are accepted when they hit the cell.  Returns ``(hyperplane, waiting)``
    where ``waiting`` sums all candidate inter-arrival times.  When the
    summed waiting time passes ``horizon`` the search stops early and
    returns ``(None, waiting)``; candidates beyond the horizon are never
    consulted, so the draws up to that point are the same either way.
    """
    g = geo._gen(rng)
    c, r = geo.bounding_ball(cell)
    rate = 2.0 * r
    if not rate > 0:
        raise ValueError("degenerate cell: zero bounding radius")
    waiting = 0.0
    for _ in range(MAX_REJECTIONS):
        waiting += g.exponential(1.0 / rate)
        if waiting > horizon:
            return None, waiting
        u = phi.sample_direction(g)
        t = float(u @ c) + r * (2.0 * g.random() - 1.0)
        h = Hyperplane(u, t)
        if geo.hits(cell, h):
            return h, waiting
    raise RuntimeError(f"{MAX_REJECTIONS} rejections in sample_hit: degenerate cell")


def sample_window_hyperplane(phi: DirectionalDistribution, window, g: np.random.Generator) -> Hyperplane:
    """One hyperplane from Lambda conditioned on hitting a box or ball window."""
    if isinstance(window, Ball):
        u = phi.sample_direction(g)
        t = float(u @ window.center) + window.radius * (2.0 * g.random() - 1.0)
        return Hyperplane(u, t)
    if not isinstance(window, Box):
        raise ValueError("window must be a Box or Ball")
    if phi.is_discrete:
        w = phi.weights * geo.widths(window, phi.atoms)
        u = phi.atoms[DirectionalDistribution._pick(g, w)]
        u = -u if g.random() < 0.5 else u.copy()
    else:
        wmax = float(np.linalg.norm(window.sides))
        for _ in range(MAX_REJECTIONS):
            u = phi.sample_direction(g)
            if g.random() * wmax <= geo.width(window, u):
                break
        else:
            raise RuntimeError("direction rejection failed")
    hi = geo.support(window, u)
    lo = -geo.support(window, -u)
    return Hyperplane(u, lo + (hi - lo) * g.random())
