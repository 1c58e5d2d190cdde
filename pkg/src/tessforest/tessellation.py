"""STIT and Poisson hyperplane partitions of a window.

STIT partitions are stored as cut trees: every internal node records the
hyperplane that split its cell and the time of the cut.  Each node owns a
derived random stream (children get ``child(0)`` for the ``<=`` side and
``child(1)`` for the other), so a seed reproduces the same tree no matter in
which order the tree is grown.

Lifetime convention: ``lifetime`` multiplies the probability-normalized
hyperplane measure.  The axis-aligned (Mondrian) literature normalizes each
coordinate direction to unit rate instead; ``mondrian_lifetime(lam, d)``
converts (a Mondrian lifetime ``lam`` corresponds to ``d * lam`` here).
"""
from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import geometry as geo
from .directions import DirectionalDistribution, lambda_of, sample_hit, sample_window_hyperplane
from .geometry import Ball, Box, HPolytope, Hyperplane
from .rng import RngStream, as_stream

FORMAT_VERSION = 1
DEFAULT_MAX_CELLS = 10**7


class ResourceCapError(RuntimeError):
    pass


def mondrian_lifetime(lam: float, d: int) -> float:
    return d * lam


@dataclass
class Leaf:
    cell: HPolytope
    birth_time: float
    index: int = -1


@dataclass
class Internal:
    cut: Hyperplane
    cut_time: float
    below: "Node" = None
    above: "Node" = None


Node = Union[Leaf, Internal]


def _root_cell(window) -> HPolytope:
    if isinstance(window, Box):
        return window.to_polytope()
    if isinstance(window, Ball):
        # a STIT on the enclosing box restricted to the ball has the law of
        # the STIT on the ball
        return window.enclosing_box().to_polytope()
    raise ValueError("window must be a Box or Ball")


def _check_inside(window, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != window.dimension:
        raise ValueError(f"points have dimension {X.shape[1]}, window has {window.dimension}")
    ok = window.contains(X)
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise ValueError(f"point {bad} lies outside the window")
    return X


class Partition(ABC):
    window: Union[Box, Ball]
    phi: DirectionalDistribution
    lifetime: float

    @property
    def dimension(self) -> int:
        return self.window.dimension

    @abstractmethod
    def cell_keys(self, X):
        """(unique hashable cell keys, inverse index per row of X)."""

    def cell_of(self, x):
        keys, inv = self.cell_keys(np.reshape(x, (1, -1)))
        return keys[inv[0]]

    @abstractmethod
    def cell_polytope(self, key) -> HPolytope:
        ...

    @abstractmethod
    def cells(self) -> list:
        ...

    def cell_count(self) -> int:
        return len(self.cells())

    @abstractmethod
    def zero_cell(self, point=None) -> HPolytope:
        ...

    @abstractmethod
    def to_dict(self) -> dict:
        ...

    def _require_box(self):
        if not isinstance(self.window, Box):
            raise ValueError("cell statistics require a Box window")

    def _check_origin(self, point):
        x = np.zeros(self.dimension) if point is None else np.asarray(point, dtype=np.float64)
        if not self.window.interior_contains(x):
            raise ValueError("point must lie in the window interior")
        return x


# -------------------------------------------------------------------- STIT

class StitPartition(Partition):
    def __init__(self, window, phi, lifetime, root: Node):
        self.window = window
        self.phi = phi
        self.lifetime = float(lifetime)
        self.root = root
        self.leaves: list[Leaf] = []
        stack = [root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                node.index = len(self.leaves)
                self.leaves.append(node)
            else:
                stack.append(node.above)
                stack.append(node.below)

    def cells(self) -> list:
        self._require_box()
        return [leaf.cell for leaf in self.leaves]

    def cell_count(self) -> int:
        self._require_box()
        return len(self.leaves)

    def leaf_labels(self, X) -> np.ndarray:
        X = _check_inside(self.window, X)
        labels = np.empty(X.shape[0], dtype=np.int64)
        stack = [(self.root, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if isinstance(node, Leaf):
                labels[idx] = node.index
                continue
            if idx.size == 0:
                continue
            below = X[idx] @ node.cut.direction <= node.cut.offset
            stack.append((node.below, idx[below]))
            stack.append((node.above, idx[~below]))
        return labels

    def cell_keys(self, X):
        labels = self.leaf_labels(X)
        uniq, inv = np.unique(labels, return_inverse=True)
        return [int(k) for k in uniq], inv.reshape(-1)

    def cell_polytope(self, key) -> HPolytope:
        return self.leaves[int(key)].cell

    def zero_cell(self, point=None) -> HPolytope:
        x = self._check_origin(point)
        return self.leaves[self.leaf_labels(x)[0]].cell

    def depth(self) -> int:
        best = 0
        stack = [(self.root, 0)]
        while stack:
            node, k = stack.pop()
            if isinstance(node, Leaf):
                best = max(best, k)
            else:
                stack += [(node.below, k + 1), (node.above, k + 1)]
        return best

    def to_dict(self) -> dict:
        # flat preorder node list; children referenced by index
        nodes: list[dict] = []
        stack = [(self.root, None, None)]
        while stack:
            n, parent, side = stack.pop()
            i = len(nodes)
            if parent is not None:
                nodes[parent][side] = i
            if isinstance(n, Leaf):
                nodes.append({"leaf": True, "birth_time": n.birth_time})
            else:
                nodes.append({"u": n.cut.direction.tolist(), "t": n.cut.offset,
                              "time": n.cut_time, "below": None, "above": None})
                stack.append((n.above, i, "above"))
                stack.append((n.below, i, "below"))
        return {
            "format_version": FORMAT_VERSION,
            "type": "stit",
            "window": self.window.to_dict(),
            "phi": self.phi.to_dict(),
            "lifetime": self.lifetime,
            "nodes": nodes,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StitPartition":
        window = geo.window_from_dict(doc["window"])
        phi = DirectionalDistribution.from_dict(doc["phi"], window.dimension)
        nodes = doc["nodes"]

        def build(i: int, cell: HPolytope) -> Node:
            rec = nodes[i]
            if rec.get("leaf"):
                return Leaf(cell, rec["birth_time"])
            h = Hyperplane(rec["u"], rec["t"])
            node = Internal(h, rec["time"])
            node.below = build(rec["below"], cell.with_halfspace(h.direction, h.offset))
            node.above = build(rec["above"], cell.with_halfspace(-h.direction, -h.offset))
            return node

        return cls(window, phi, doc["lifetime"], build(0, _root_cell(window)))


def _grow(cell: HPolytope, start: float, end: float, phi, stream: RngStream,
          max_cells: int, budget: list) -> Node:
    """STIT construction inside ``cell`` for times in (start, end]."""
    holder: list = [None]

    def put_root(n):
        holder[0] = n

    stack: list[tuple] = [(cell, start, stream, put_root)]
    while stack:
        c, t, s, attach = stack.pop()
        born = t
        while True:
            h, dt = sample_hit(phi, c, s, horizon=end - t)
            if h is None:
                attach(Leaf(c, born))
                break
            t += dt
            below, above = geo.split(c, h)
            if below is None or above is None:
                continue  # grazing hyperplane leaves the cell unchanged
            budget[0] += 1
            if budget[0] > max_cells:
                raise ResourceCapError(f"STIT exceeded {max_cells} cells")
            node = Internal(h, t)
            attach(node)
            stack.append((above, t, s.child(1), lambda n, node=node: setattr(node, "above", n)))
            stack.append((below, t, s.child(0), lambda n, node=node: setattr(node, "below", n)))
            break
    return holder[0]


def sample_stit(window, phi: DirectionalDistribution, lifetime: float, rng,
                max_cells: int = DEFAULT_MAX_CELLS) -> StitPartition:
    """STIT partition of the window with the given lifetime."""
    if not lifetime > 0:
        raise ValueError("lifetime must be positive")
    if phi.d != window.dimension:
        raise ValueError("phi and window dimensions differ")
    root = _grow(_root_cell(window), 0.0, float(lifetime), phi, as_stream(rng), max_cells, [1])
    return StitPartition(window, phi, lifetime, root)


def sample_stit_zero_cell(window, phi: DirectionalDistribution, lifetime: float, rng,
                          point=None) -> HPolytope:
    """The STIT cell containing ``point`` (default: origin), growing only the
    branch that contains it.

    Uses the same per-node streams as :func:`sample_stit`, so for a given
    stream this equals ``sample_stit(...).zero_cell(point)``.
    """
    x = np.zeros(window.dimension) if point is None else np.asarray(point, dtype=np.float64)
    if not window.interior_contains(x):
        raise ValueError("point must lie in the window interior")
    s = as_stream(rng)
    c = _root_cell(window)
    t, end = 0.0, float(lifetime)
    while True:
        h, dt = sample_hit(phi, c, s, horizon=end - t)
        if h is None:
            return c
        t += dt
        below, above = geo.split(c, h)
        if below is None or above is None:
            continue
        if x @ h.direction <= h.offset:
            c, s = below, s.child(0)
        else:
            c, s = above, s.child(1)


def iterate(p1: StitPartition, lifetime2: float, rng, max_cells: int = DEFAULT_MAX_CELLS) -> StitPartition:
    """Subdivide every leaf of ``p1`` by an independent STIT of lifetime
    ``lifetime2`` grown inside it; the result has lifetime
    ``p1.lifetime + lifetime2``."""
    if not lifetime2 > 0:
        raise ValueError("lifetime must be positive")
    s = as_stream(rng)
    start, end = p1.lifetime, p1.lifetime + float(lifetime2)
    budget = [len(p1.leaves)]

    def copy(node: Node) -> Node:
        if isinstance(node, Leaf):
            sub = _grow(node.cell, start, end, p1.phi, s.child(node.index), max_cells, budget)
            if isinstance(sub, Leaf):
                return Leaf(node.cell, node.birth_time)
            return sub
        out = Internal(node.cut, node.cut_time)
        out.below = copy(node.below)
        out.above = copy(node.above)
        return out

    return StitPartition(p1.window, p1.phi, end, copy(p1.root))


# --------------------------------------------------------------------- PHT

class PhtPartition(Partition):
    def __init__(self, window, phi, intensity, hyperplanes: list[Hyperplane],
                 max_cells: int = DEFAULT_MAX_CELLS):
        self.window = window
        self.phi = phi
        self.lifetime = float(intensity)
        self.hyperplanes = list(hyperplanes)
        d = window.dimension
        self.U = np.array([h.direction for h in self.hyperplanes], dtype=np.float64).reshape(-1, d)
        self.T = np.array([h.offset for h in self.hyperplanes], dtype=np.float64)
        self.max_cells = max_cells
        self._cells = None
        self._lock = threading.Lock()

    @property
    def intensity(self) -> float:
        return self.lifetime

    def sign_matrix(self, X) -> np.ndarray:
        X = _check_inside(self.window, X)
        return X @ self.U.T > self.T

    def _pack(self, S: np.ndarray) -> np.ndarray:
        n = S.shape[0]
        if S.shape[1] == 0:
            return np.zeros((n, 1), dtype=np.uint8)
        return np.packbits(S, axis=1)

    def cell_keys(self, X):
        P = np.ascontiguousarray(self._pack(self.sign_matrix(X)))
        V = P.view(np.dtype((np.void, P.shape[1]))).reshape(-1)
        uniq, inv = np.unique(V, return_inverse=True)
        return [bytes(k) for k in uniq], inv.reshape(-1)

    def _signs_from_key(self, key: bytes) -> np.ndarray:
        H = len(self.hyperplanes)
        if H == 0:
            return np.zeros(0, dtype=bool)
        return np.unpackbits(np.frombuffer(key, dtype=np.uint8))[:H].astype(bool)

    def cell_polytope(self, key) -> HPolytope:
        self._require_box()
        signs = self._signs_from_key(key)
        sgn = np.where(signs, -1.0, 1.0)
        W = self.window.to_polytope()
        A = np.vstack([W.normals, self.U * sgn[:, None]])
        b = np.concatenate([W.bounds, self.T * sgn])
        P = HPolytope(A, b)
        if P.n_halfspaces > 4 * P.dimension:
            P = P.pruned()
        if not geo.has_interior(P):
            raise ValueError("sign vector does not describe a cell")
        return P

    def _enumerate(self):
        pieces = [(self.window.to_polytope(), [])]
        for h in self.hyperplanes:
            nxt = []
            for P, signs in pieces:
                below, above = geo.split(P, h)
                if below is not None:
                    nxt.append((below, signs + [False]))
                if above is not None:
                    nxt.append((above, signs + [True]))
            if len(nxt) > self.max_cells:
                raise ResourceCapError(f"arrangement exceeded {self.max_cells} cells")
            pieces = nxt
        return pieces

    def enumerate_with_keys(self):
        self._require_box()
        with self._lock:
            if self._cells is None:
                pieces = self._enumerate()
                keys = []
                for _, signs in pieces:
                    S = np.array(signs, dtype=bool).reshape(1, -1)
                    keys.append(bytes(self._pack(S)[0]))
                self._cells = ([p for p, _ in pieces], keys)
        return self._cells

    def cells(self) -> list:
        return list(self.enumerate_with_keys()[0])

    def zero_cell(self, point=None) -> HPolytope:
        """Window intersected with the halfspace of every hyperplane that
        contains the point; hyperplanes are added by distance and the scan
        stops once the rest cannot reach the current cell."""
        self._require_box()
        x = self._check_origin(point)
        dist = self.T - self.U @ x
        order = np.argsort(np.abs(dist), kind="stable")
        P = self.window.to_polytope()
        for k in order:
            lo, hi = P.bounding_box()
            reach = np.linalg.norm(np.maximum(np.abs(lo - x), np.abs(hi - x)))
            if abs(dist[k]) > reach:
                break
            if dist[k] >= 0:
                P = P.with_halfspace(self.U[k], self.T[k])
            else:
                P = P.with_halfspace(-self.U[k], -self.T[k])
        return P

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "type": "pht",
            "window": self.window.to_dict(),
            "phi": self.phi.to_dict(),
            "intensity": self.lifetime,
            "hyperplanes": [{"u": h.direction.tolist(), "t": h.offset} for h in self.hyperplanes],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PhtPartition":
        window = geo.window_from_dict(doc["window"])
        phi = DirectionalDistribution.from_dict(doc["phi"], window.dimension)
        hs = [Hyperplane(h["u"], h["t"]) for h in doc["hyperplanes"]]
        return cls(window, phi, doc["intensity"], hs)


def enumerate_cells(p: PhtPartition) -> list:
    return p.cells()


def sample_pht(window, phi: DirectionalDistribution, intensity: float, rng,
               max_cells: int = DEFAULT_MAX_CELLS) -> PhtPartition:
    """Poisson hyperplane partition of a box or ball window."""
    if not intensity > 0:
        raise ValueError("intensity must be positive")
    if phi.d != window.dimension:
        raise ValueError("phi and window dimensions differ")
    lam = lambda_of(phi, window)
    if lam.bound_only:
        raise ValueError("exact hyperplane measure unavailable for this window")
    g = as_stream(rng).gen
    n = int(g.poisson(intensity * lam.value))
    if n > max_cells:
        raise ResourceCapError(f"{n} hyperplanes exceed the cap {max_cells}")
    hs = [sample_window_hyperplane(phi, window, g) for _ in range(n)]
    return PhtPartition(window, phi, intensity, hs, max_cells=max_cells)


def sample_partition(kind: str, window, phi, lam: float, rng, max_cells: int = DEFAULT_MAX_CELLS) -> Partition:
    if kind == "stit":
        return sample_stit(window, phi, lam, rng, max_cells)
    if kind == "pht":
        return sample_pht(window, phi, lam, rng, max_cells)
    raise ValueError(f"unknown sampler {kind!r}")


def sample_zero_cell(kind: str, window, phi, lam: float, rng, point=None) -> HPolytope:
    """Zero cell without materializing the rest of the partition (STIT) or
    the arrangement (PHT)."""
    if kind == "stit":
        return sample_stit_zero_cell(window, phi, lam, rng, point)
    return sample_pht(window, phi, lam, rng).zero_cell(point)


def zero_cell(p: Partition, point=None) -> HPolytope:
    return p.zero_cell(point)


def cell_of(p: Partition, x):
    return p.cell_of(x)


def cell_count(p: Partition) -> int:
    return p.cell_count()


def partition_from_dict(doc: dict) -> Partition:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported partition format version {version!r}")
    kind = doc.get("type")
    if kind == "stit":
        return StitPartition.from_dict(doc)
    if kind == "pht":
        return PhtPartition.from_dict(doc)
    raise ValueError(f"unknown partition type {kind!r}")
