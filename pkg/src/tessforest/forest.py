"""Purely random regression trees and forests over sampled partitions."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import Box, _gen, contains_points
from .rng import RngStream, as_stream
from .tessellation import FORMAT_VERSION, Partition, partition_from_dict, sample_partition


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    window: object

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        self.X = X.reshape(0, self.window.dimension) if X.size == 0 else np.atleast_2d(X)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y lengths differ")
        if self.X.shape[1] != self.window.dimension:
            raise ValueError("X dimension does not match the window")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("responses must be finite")
        ok = self.window.contains(self.X) if len(self.X) else np.ones(0, bool)
        if not ok.all():
            raise ValueError(f"row {int(np.flatnonzero(~ok)[0])} lies outside the window")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]


@dataclass
class TreeModel:
    """Per-cell response counts and sums over one partition."""

    partition: Partition
    aggregates: dict = field(default_factory=dict)  # key -> (count, sum_y)

    def predict(self, X) -> np.ndarray:
        keys, inv = self.partition.cell_keys(np.atleast_2d(X))
        means = np.zeros(len(keys))
        for i, k in enumerate(keys):
            agg = self.aggregates.get(k)
            if agg is not None and agg[0] > 0:
                means[i] = agg[1] / agg[0]
        return means[inv]


@dataclass
class ForestModel:
    trees: list

    @property
    def M(self) -> int:
        return len(self.trees)

    @property
    def lifetime(self) -> float:
        return self.trees[0].partition.lifetime

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)


def fit_tree(partition: Partition, data: Dataset) -> TreeModel:
    if data.dimension != partition.dimension:
        raise ValueError("dataset and partition dimensions differ")
    if data.n == 0:
        return TreeModel(partition, {})
    keys, inv = partition.cell_keys(data.X)
    counts = np.bincount(inv, minlength=len(keys))
    sums = np.bincount(inv, weights=data.y, minlength=len(keys))
    return TreeModel(partition, {k: (int(c), float(s)) for k, c, s in zip(keys, counts, sums)})


def predict_tree(model: TreeModel, x):
    x = np.asarray(x, dtype=np.float64)
    out = model.predict(np.atleast_2d(x))
    return float(out[0]) if x.ndim == 1 else out


def predict_forest(model: ForestModel, x):
    x = np.asarray(x, dtype=np.float64)
    out = model.predict(np.atleast_2d(x))
    return float(out[0]) if x.ndim == 1 else out


def fit_forest(partitions: Sequence[Partition], data: Dataset) -> ForestModel:
    if not partitions:
        raise ValueError("need at least one partition")
    first = partitions[0]
    for p in partitions[1:]:
        if p.lifetime != first.lifetime or p.window.to_dict() != first.window.to_dict():
            raise ValueError("trees of a forest must share window and lifetime")
    return ForestModel([fit_tree(p, data) for p in partitions])


def sample_forest(data: Dataset, sampler: str, phi, lam: float, M: int, rng) -> ForestModel:
    """M i.i.d. partitions (tree m uses ``rng.child(m)``) fitted to ``data``."""
    s = as_stream(rng)
    parts = [sample_partition(sampler, data.window, phi, lam, s.child(m)) for m in range(M)]
    return fit_forest(parts, data)


# ---------------------------------------------------------------- sampling

class UniformBox:
    def __init__(self, window: Box):
        self.window = window

    def sample(self, n: int, rng) -> np.ndarray:
        g = _gen(rng)
        w = self.window
        return w.lower + w.sides * g.random((n, w.dimension))

    def density(self, X) -> np.ndarray:
        return np.full(np.atleast_2d(X).shape[0], 1.0 / self.window.volume)


class DensitySampler:
    """Rejection sampler for a positive density on a box, given as a callable
    with a known upper bound."""

    def __init__(self, window: Box, density: Callable, density_max: float):
        self.window = window
        self._density = density
        self.density_max = float(density_max)

    def density(self, X) -> np.ndarray:
        return np.asarray(self._density(np.atleast_2d(X)), dtype=np.float64)

    def sample(self, n: int, rng) -> np.ndarray:
        g = _gen(rng)
        w = self.window
        out = []
        got = 0
        while got < n:
            m = max(2 * (n - got), 64)
            X = w.lower + w.sides * g.random((m, w.dimension))
            keep = g.random(m) * self.density_max <= self.density(X)
            out.append(X[keep])
            got += int(keep.sum())
        return np.vstack(out)[:n]


def make_dataset(f: Callable, mu, n: int, sigma: float, rng) -> Dataset:
    g = _gen(rng)
    X = mu.sample(n, g)
    y = f(X) + sigma * g.standard_normal(n)
    return Dataset(X, y, mu.window)


def estimate_risk(model, f_true: Callable, mu, n_test: int, rng):
    """Monte Carlo quadratic risk over fresh X ~ mu: (risk, std_error)."""
    if n_test < 1000:
        raise ValueError("n_test must be at least 1000")
    X = mu.sample(n_test, _gen(rng))
    pred = model.predict(X) if hasattr(model, "predict") else model(X)
    err = (pred - f_true(X)) ** 2
    return float(err.mean()), float(err.std(ddof=1) / np.sqrt(n_test))


def cell_means_oracle(partition: Partition, f: Callable, mu, keys, n_per_cell: int, rng) -> dict:
    """E[f(X) | X in cell] per requested cell key.

    Points are drawn uniformly in each cell's bounding box, kept inside the
    cell, and weighted by the density of mu.
    """
    g = _gen(rng)
    out = {}
    for k in keys:
        P = partition.cell_polytope(k)
        lo, hi = P.bounding_box()
        acc_w = acc_fw = 0.0
        got = 0
        for _ in range(10000):
            X = lo + (hi - lo) * g.random((2 * n_per_cell, lo.size))
            X = X[contains_points(P, X)]
            if len(X):
                w = mu.density(X)
                acc_w += w.sum()
                acc_fw += (w * f(X)).sum()
                got += len(X)
            if got >= n_per_cell:
                break
        if got == 0 or acc_w <= 0:
            raise RuntimeError("oracle could not sample inside a cell")
        out[k] = acc_fw / acc_w
    return out


# --------------------------------------------------------------------- I/O

def read_csv(path, d: int | None = None, with_y: bool = True):
    """Read ``x1..xd[,y]`` columns; returns (X, y or None)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        xcols = [h for h in header if h.startswith("x")]
        dd = len(xcols)
        expected = [f"x{i + 1}" for i in range(dd)] + (["y"] if with_y else [])
        if header[: len(expected)] != expected or dd == 0 or (d is not None and dd != d):
            raise ValueError(f"CSV header {header} does not match {expected if dd else 'x1..xd'}")
        rows = [r for r in reader if r]
    arr = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    X = arr[:, :dd]
    y = arr[:, dd] if with_y else None
    return X, y


def write_csv(path, X, y=None, y_name="y", extra=None):
    X = np.atleast_2d(X)
    header = [f"x{i + 1}" for i in range(X.shape[1])]
    cols = [X]
    if y is not None:
        header.append(y_name)
        cols.append(np.reshape(y, (-1, 1)))
    if extra is not None:
        name, vals = extra
        header.append(name)
        cols.append(np.reshape(vals, (-1, 1)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in np.hstack(cols):
            w.writerow([repr(float(v)) for v in row])


def _key_to_json(k):
    return k.hex() if isinstance(k, bytes) else k


def _key_from_json(k, partition_type):
    return bytes.fromhex(k) if partition_type == "pht" else int(k)


def model_to_dict(model: ForestModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "type": "forest",
        "trees": [
            {
                "partition": t.partition.to_dict(),
                "aggregates": [[_key_to_json(k), c, s] for k, (c, s) in t.aggregates.items()],
            }
            for t in model.trees
        ],
    }


def model_from_dict(doc: dict) -> ForestModel:
    if doc.get("format_version") != FORMAT_VERSION or doc.get("type") != "forest":
        raise ValueError("not a forest model document of a supported version")
    trees = []
    for rec in doc["trees"]:
        p = partition_from_dict(rec["partition"])
        ptype = rec["partition"]["type"]
        agg = {_key_from_json(k, ptype): (int(c), float(s)) for k, c, s in rec["aggregates"]}
        trees.append(TreeModel(p, agg))
    return ForestModel(trees)


def save_model(model: ForestModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> ForestModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
