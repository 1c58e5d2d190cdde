"""Closed-form cell counts, two-sample KS, tuning rules and Monte Carlo
experiments (convergence rates, bias-variance splits)."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .directions import DirectionalDistribution, isotropic_constant, unit_ball_volume
from .forest import (
    UniformBox,
    cell_means_oracle,
    estimate_risk,
    fit_forest,
    fit_tree,
    make_dataset,
)
from .geometry import Box
from .rng import RngStream, as_stream
from .tessellation import sample_partition

# ------------------------------------------------------- closed-form counts


@dataclass(frozen=True)
class MondrianCube:
    """Axis-aligned STIT with each coordinate direction at unit rate (the
    Mondrian normalization) on a box with the given side lengths."""

    d: int
    lam: float
    sides: tuple | None = None


@dataclass(frozen=True)
class IsotropicBody:
    d: int
    lam: float
    intrinsic_volumes: tuple  # V_0 .. V_d of the window


@dataclass(frozen=True)
class IsotropicBall:
    d: int
    lam: float
    R: float


def gamma_const(j: int, d: int) -> float:
    return math.gamma((j + 1) / 2) * math.gamma(d / 2) / (math.gamma(j / 2) * math.gamma((d + 1) / 2))


def box_intrinsic_volumes(sides) -> tuple:
    """V_k of a box = k-th elementary symmetric polynomial of its sides."""
    e = [1.0]
    for s in sides:
        e = [1.0] + [e[k] + s * e[k - 1] for k in range(1, len(e))] + [s * e[-1]]
    return tuple(e)


def ball_intrinsic_volumes(d: int, R: float) -> tuple:
    return tuple(
        R**k * math.comb(d, k) * unit_ball_volume(d) / unit_ball_volume(d - k) for k in range(d + 1)
    )


def expected_cell_count(case) -> float:
    """Expected number of cells meeting the window."""
    if isinstance(case, MondrianCube):
        sides = case.sides if case.sides is not None else (1.0,) * case.d
        return float(np.prod([1.0 + case.lam * s for s in sides]))
    if isinstance(case, IsotropicBody):
        V = case.intrinsic_volumes
        if len(V) != case.d + 1 or any(v < 0 for v in V) or abs(V[0] - 1.0) > 1e-12:
            raise ValueError("need nonnegative intrinsic volumes V_0..V_d with V_0 = 1")
        total, prod = 0.0, 1.0
        for k in range(case.d + 1):
            if k > 0:
                prod *= gamma_const(k, case.d)
            total += prod * case.lam**k / math.factorial(k) * V[k]
        return total
    if isinstance(case, IsotropicBall):
        Vpi = ball_intrinsic_volumes(case.d, isotropic_constant(case.d))
        return float(sum((case.lam * case.R) ** k * unit_ball_volume(k) * Vpi[k] for k in range(case.d + 1)))
    raise TypeError(f"unknown closed-form case {case!r}")


# ----------------------------------------------------------------------- KS


def kolmogorov_sf(z: float) -> float:
    """P(K > z) for the Kolmogorov distribution."""
    if z <= 0:
        return 1.0
    if z < 1.18:
        # theta-function form converges fast for small z
        s = sum(math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * z * z)) for k in range(1, 40))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / z * s))
    s = sum((-1) ** (k - 1) * math.exp(-2 * k * k * z * z) for k in range(1, 100))
    return min(1.0, max(0.0, 2.0 * s))


def ks_two_sample(a, b):
    """(sup |F_a - F_b|, asymptotic p-value)."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size < 1 or b.size < 1:
        raise ValueError("empty sample")
    grid = np.concatenate([a, b])
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    D = float(np.max(np.abs(Fa - Fb)))
    ne = a.size * b.size / (a.size + b.size)
    return D, kolmogorov_sf(math.sqrt(ne) * D)


# ------------------------------------------------------------------- tuning


def tune_lambda(rule: str, n: float, L: float, d: int, beta: float) -> float:
    if not (n >= 1 and L > 0 and 0 < beta <= 1):
        raise ValueError("need n >= 1, L > 0, beta in (0, 1]")
    if rule == "C0":
        e = d + 2 * beta
    elif rule == "C1":
        e = d + 2 * beta + 2
    else:
        raise ValueError(f"unknown tuning rule {rule!r}")
    return L ** (2 / e) * n ** (1 / e)


def tune_forest_size(n: float, L: float, d: int, beta: float) -> int:
    if not (n >= 1 and L > 0 and 0 < beta <= 1):
        raise ValueError("need n >= 1, L > 0, beta in (0, 1]")
    e = d + 2 * beta + 2
    m = L ** (4 * beta / e) * n ** (2 * beta / e)
    # absorb floating error so that exact powers are not bumped up
    return max(1, math.ceil(m * (1 - 1e-12)))


# ---------------------------------------------------------- target catalog


@dataclass(frozen=True)
class TargetFunction:
    """Regression function on [0,1]^d with certified Hoelder membership.

    holder0, beta < 1:  f(x) = a |x - x0|^beta, a = L min(1, (sqrt(d)/2)^-beta),
        x0 the cube center; |f| <= L and the beta-Hoelder seminorm is a <= L.
    holder0, beta = 1:  f(x) = a sum_i sin(2 x_i), a = L / max(d, 2 sqrt(d));
        |f| <= a d <= L and |grad f| <= 2 a sqrt(d) <= L.
    holder1 (beta = 1): f(x) = a sum_i g(x_i) with g(t) = 2t^3 - 3t^2 and
        a = L / max(6, d, 1.5 sqrt(d)).  On [0,1]: |g| <= 1, |g'| = 6t(1-t)
        <= 1.5, |g''| = |12t - 6| <= 6.  So |f| <= a d, |grad f| <= 1.5 a
        sqrt(d) and the diagonal Hessian has norm <= 6a, all <= L.  g'
        vanishes at 0 and 1 (no normal gradient on the boundary) and the
        fourth derivative is zero, so away from the boundary the in-cell
        averaging bias has no terms past second order.
    constant:           f(x) = c.
    """

    name: str
    d: int
    L: float = 1.0
    beta: float = 1.0
    c: float = 0.0

    @property
    def smoothness(self) -> int:
        return 1 if self.name == "holder1" else 0

    @property
    def amplitude(self) -> float:
        d, L = self.d, self.L
        if self.name == "holder0":
            if self.beta < 1:
                return L * min(1.0, (math.sqrt(d) / 2) ** (-self.beta))
            return L / max(d, 2 * math.sqrt(d))
        if self.name == "holder1":
            return L / max(6.0, d, 1.5 * math.sqrt(d))
        return 0.0

    @property
    def sup_norm(self) -> float:
        if self.name == "constant":
            return abs(self.c)
        if self.name == "holder0" and self.beta < 1:
            return self.amplitude * (math.sqrt(self.d) / 2) ** self.beta
        return self.amplitude * self.d

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        a = self.amplitude
        if self.name == "holder0":
            if self.beta < 1:
                return a * np.linalg.norm(X - 0.5, axis=1) ** self.beta
            return a * np.sin(2.0 * X).sum(axis=1)
        if self.name == "holder1":
            return a * (2.0 * X**3 - 3.0 * X**2).sum(axis=1)
        if self.name == "constant":
            return np.full(X.shape[0], float(self.c))
        raise ValueError(f"unknown target {self.name!r}")


def catalog_function(smoothness: str, d: int, L: float, beta: float) -> TargetFunction:
    if smoothness == "C0":
        return TargetFunction("holder0", d, L, beta)
    if smoothness == "C1":
        if beta != 1:
            raise ValueError("the C1 catalog function is certified for beta = 1")
        return TargetFunction("holder1", d, L, beta)
    raise ValueError(f"unknown smoothness class {smoothness!r}")


# -------------------------------------------------------------- parallelism


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Order-preserving map; worker processes when threads > 1."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


# --------------------------------------------------------- rate experiments


@dataclass
class RateExperiment:
    d: int = 1
    beta: float = 1.0
    smoothness: str = "C0"
    L: float = 1.0
    sigma: float = 0.1
    n_grid: tuple = (250, 500, 1000, 2000, 4000, 8000, 16000)
    reps: int = 50
    tuning: str = "C0"
    forest_size: object = "one"  # "one" | "C1" | int
    phi: dict = field(default_factory=lambda: {"kind": "axis"})
    sampler: str = "stit"
    n_test: int = 2000
    target: dict | None = None  # override, e.g. {"name": "constant", "c": 1.0}

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 4 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing with at least 4 points")
        self.n_grid = grid

    def function(self) -> TargetFunction:
        if self.target is not None:
            t = dict(self.target)
            return TargetFunction(t.pop("name"), self.d, **t)
        return catalog_function(self.smoothness, self.d, self.L, self.beta)

    def lam(self, n: int) -> float:
        return tune_lambda(self.tuning, n, self.L, self.d, self.beta)

    def forest_M(self, n: int) -> int:
        if self.forest_size == "one":
            return 1
        if self.forest_size == "C1":
            return tune_forest_size(n, self.L, self.d, self.beta)
        return int(self.forest_size)


@dataclass
class RateFit:
    slope: float
    intercept: float
    n_grid: list
    mean_risks: list
    std_errors: list
    lambdas: list
    forest_sizes: list
    rows: list
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _rate_replicate(args):
    e, seed, path, i, r = args
    n = e.n_grid[i]
    s = RngStream(seed, path).child(i, r)
    f = e.function()
    window = Box.cube(e.d)
    mu = UniformBox(window)
    phi = DirectionalDistribution.from_dict(e.phi, e.d)
    lam, M = e.lam(n), e.forest_M(n)
    data = make_dataset(f, mu, n, e.sigma, s.child(0))
    parts = [sample_partition(e.sampler, window, phi, lam, s.child(1, m)) for m in range(M)]
    model = fit_forest(parts, data)
    risk, se = estimate_risk(model, f, mu, e.n_test, s.child(2))
    return {"n": n, "rep": r, "lambda": lam, "M": M, "risk": risk, "risk_se": se}


def run_rate_experiment(e: RateExperiment, rng, threads: int = 1, first_rep: int = 0) -> RateFit:
    """Mean risk per n over independent train/test replicates and the OLS
    slope of log risk on log n.

    Replicates are numbered ``first_rep .. first_rep + e.reps - 1``; runs
    over disjoint ranges are independent and their rows can be pooled with
    :func:`fit_rows`.
    """
    s = as_stream(rng)
    jobs = [(e, s.seed, s.path, i, r) for i in range(len(e.n_grid))
            for r in range(first_rep, first_rep + e.reps)]
    return fit_rows(e, parallel_map(_rate_replicate, jobs, threads))


def fit_rows(e: RateExperiment, rows: list) -> RateFit:
    means, ses, lams, Ms = [], [], [], []
    for n in e.n_grid:
        risks = np.array([row["risk"] for row in rows if row["n"] == n])
        means.append(float(risks.mean()))
        ses.append(float(risks.std(ddof=1) / np.sqrt(len(risks))) if len(risks) > 1 else 0.0)
        lams.append(e.lam(n))
        Ms.append(e.forest_M(n))
    m = np.array(means)
    if np.any(m <= 1e-20):
        return RateFit(math.nan, math.nan, list(e.n_grid), means, ses, lams, Ms, rows, degenerate=True)
    slope, intercept = np.polyfit(np.log(e.n_grid), np.log(m), 1)
    return RateFit(float(slope), float(intercept), list(e.n_grid), means, ses, lams, Ms, rows)


# ----------------------------------------------------- bias-variance study


def _mean_se(v) -> tuple:
    v = np.asarray(v, dtype=np.float64)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0


def bias_variance_study(lam: float, n: int, M: int, f_true: Callable, mu, reps: int, rng,
                        sampler: str = "stit", phi: DirectionalDistribution | None = None,
                        sigma: float = 0.1, n_test: int = 1000, n_oracle: int = 1000,
                        n_fixed: int = 200) -> dict:
    """Monte Carlo split of the tree risk into approximation and estimation
    terms, plus the forest approximation error for M partitions.

    Per replicate: fresh data, M fresh partitions and fresh test points.
    The in-cell conditional mean of f is estimated by the cell oracle.
    A fixed point set shared by all replicates estimates the partition
    average of the cell means and its variance across partitions.
    """
    if reps < 100:
        raise ValueError("need at least 100 replicates")
    s = as_stream(rng)
    window = mu.window
    phi = phi or DirectionalDistribution.axis(window.dimension)
    X_fix = mu.sample(n_fixed, s.child(0).gen)
    f_fix = f_true(X_fix)
    total, bias, var, fbias, cells = [], [], [], [], []
    fbar_fix = np.empty((reps, n_fixed))
    for r in range(reps):
        sr = s.child(1, r)
        data = make_dataset(f_true, mu, n, sigma, sr.child(0))
        parts = [sample_partition(sampler, window, phi, lam, sr.child(1, m)) for m in range(M)]
        X = mu.sample(n_test, sr.child(2).gen)
        fx = f_true(X)
        tree = fit_tree(parts[0], data)
        pred = tree.predict(X)
        fbar_sum = np.zeros(n_test)
        for m, p in enumerate(parts):
            both = np.vstack([X, X_fix]) if m == 0 else X
            keys, inv = p.cell_keys(both)
            means = cell_means_oracle(p, f_true, mu, keys, n_oracle, sr.child(3, m))
            vals = np.array([means[k] for k in keys])[inv]
            fbar = vals[:n_test]
            if m == 0:
                fbar0 = fbar
                fbar_fix[r] = vals[n_test:]
            fbar_sum += fbar
        total.append(np.mean((fx - pred) ** 2))
        bias.append(np.mean((fx - fbar0) ** 2))
        var.append(np.mean((fbar0 - pred) ** 2))
        fbias.append(np.mean((fbar_sum / M - fx) ** 2))
        cells.append(len(parts[0].leaves) if hasattr(parts[0], "leaves") else parts[0].cell_count())
    tilde = fbar_fix.mean(axis=0)
    s2 = fbar_fix.var(axis=0, ddof=1)
    out = {}
    for name, v in [("total", total), ("bias", bias), ("variance", var), ("forest_bias", fbias),
                    ("cells", cells)]:
        out[name], out[name + "_se"] = _mean_se(v)
    out["tilde_bias"] = float(np.mean((f_fix - tilde) ** 2 - s2 / reps))
    out["oracle_variance"] = float(np.mean(s2))
    out["M"] = M
    out["reps"] = reps
    return out
