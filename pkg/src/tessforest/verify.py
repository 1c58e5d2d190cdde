"""Statistical verification suites.

Each suite runs a set of Monte Carlo checks and returns a :class:`SuiteReport`
listing, per check, the observed value, the target, the tolerance and the
margin (tolerance minus deviation; positive means pass).  The CLI ``verify``
command and the acceptance tests both go through :func:`run_suite`.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import geometry as geo
from .directions import DirectionalDistribution, h_min, lambda_of, sample_hit
from .forest import UniformBox, estimate_risk, fit_forest, fit_tree, make_dataset
from .geometry import Box, HPolytope, Hyperplane
from .linalg_lp import LpProblem, solve_lp
from .rng import RngStream, as_stream
from .stats import (
    IsotropicBody,
    MondrianCube,
    RateExperiment,
    bias_variance_study,
    box_intrinsic_volumes,
    catalog_function,
    expected_cell_count,
    fit_rows,
    kolmogorov_sf,
    ks_two_sample,
    parallel_map,
    run_rate_experiment,
)
from .tessellation import (
    FORMAT_VERSION,
    iterate,
    mondrian_lifetime,
    sample_partition,
    sample_pht,
    sample_stit,
    sample_zero_cell,
)

SUITES = ("geometry", "counts", "zerocell", "equality", "markov", "rates", "biasvar")


@dataclass
class Check:
    name: str
    passed: bool
    value: object
    target: object
    tolerance: object
    margin: float
    details: dict = field(default_factory=dict)
    relation: str = "within"  # "within" | "<=" | ">="

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.relation == "within":
            rule = f"|value - {_fmt(self.target)}| <= {_fmt(self.tolerance)}"
        else:
            rule = f"value {self.relation} {_fmt(self.target)}"
        return f"[{status}] {self.name}: value={_fmt(self.value)}; need {rule}; margin={_fmt(self.margin)}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class SuiteReport:
    suite: str
    config: dict
    seed: int
    checks: list
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "suite": self.suite,
            "seed": self.seed,
            "config": self.config,
            "passed": self.passed,
            "seconds": self.seconds,
            "checks": [_jsonable(asdict(c)) for c in self.checks],
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def within(name, value, target, tol, **details) -> Check:
    dev = abs(value - target)
    return Check(name, bool(dev <= tol), value, target, tol, float(tol - dev), details)


def at_most(name, value, bound, **details) -> Check:
    return Check(name, bool(value <= bound), value, bound, 0.0, float(bound - value), details, "<=")


def at_least(name, value, bound, **details) -> Check:
    return Check(name, bool(value >= bound), value, bound, 0.0, float(value - bound), details, ">=")


def _mean_se(v):
    v = np.asarray(v, dtype=np.float64)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def ks_uniform(x, lo, hi):
    """One-sample KS against U(lo, hi): (statistic, asymptotic p-value)."""
    u = np.sort((np.asarray(x, dtype=np.float64) - lo) / (hi - lo))
    n = u.size
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return D, kolmogorov_sf(math.sqrt(n) * D)


# ------------------------------------------------------------------ configs


@dataclass
class GeometryConfig:
    lp_instances: int = 200
    vertex_objectives: int = 100
    support_directions: int = 1000
    split_cases: int = 40
    mc_points: int = 20000
    hit_samples: int = 10000
    tiling_mc_points: int = 4000


@dataclass
class CountsConfig:
    reps: int = 2000
    mondrian_lambda: float = 4.0  # Mondrian convention; STIT lifetime d * lambda
    isotropic_lambda: float = 2.0


@dataclass
class ZeroCellConfig:
    lambdas: tuple = (1.0, 2.0, 4.0)
    half_width: float = 20.0
    samples: int = 2000
    max_discard_rate: float = 0.01
    centroid_lambda: float = 3.0
    centroid_half_width: float = 5.0
    centroid_samples: int = 2000
    mc_points: int = 1000
    n_directions: int = 256
    direction_seed: int = 0


@dataclass
class EqualityConfig:
    lam: float = 3.0
    half_width: float = 5.0
    samples: int = 2000
    mc_points: int = 2000
    n_directions: int = 256
    direction_seed: int = 0
    alpha: float = 0.01


@dataclass
class MarkovConfig:
    lam1: float = 1.5
    lam2: float = 1.5
    reps: int = 2000
    alpha: float = 0.01


@dataclass
class RatesConfig:
    d: int = 1
    beta: float = 1.0
    L: float = 1.0
    n_grid: tuple = (250, 500, 1000, 2000, 4000, 8000, 16000)
    reps: int = 50
    sigma: float = 0.1
    sigma_c1: float = 1.0
    tolerance: float = 0.15
    min_gap: float = 0.05
    n_test: int = 2000
    experiments: tuple = ("c0_stit", "c1_forest", "c0_pht")
    # monotonicity needs each doubling of n to clear 4 standard errors; the
    # slope runs are topped up with further replicates to these totals
    monotone_reps: dict = field(default_factory=lambda: {"c0_stit": 600, "c1_forest": 150, "c0_pht": 600})


@dataclass
class BiasVarConfig:
    lam: float = 10.0
    n: int = 500
    reps: int = 200
    sigma: float = 0.1
    n_test: int = 1000
    n_oracle: int = 1000
    forest_lam: float = 5.0
    forest_M: int = 16
    forest_n: int = 1000
    forest_reps: int = 100


CONFIGS = {
    "geometry": GeometryConfig,
    "counts": CountsConfig,
    "zerocell": ZeroCellConfig,
    "equality": EqualityConfig,
    "markov": MarkovConfig,
    "rates": RatesConfig,
    "biasvar": BiasVarConfig,
}


def make_config(suite: str, overrides: dict | None = None):
    if suite not in CONFIGS:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    cls = CONFIGS[suite]
    names = {f.name for f in fields(cls)}
    overrides = dict(overrides or {})
    unknown = set(overrides) - names
    if unknown:
        raise ValueError(f"unknown {suite} config keys: {sorted(unknown)}")
    for k, v in overrides.items():
        if isinstance(v, list):
            overrides[k] = tuple(v)
    return cls(**overrides)


# ----------------------------------------------------------------- geometry


def _random_polytope(g, d=2):
    """Box [-1,1]^d cut by a few random halfspaces through points near 0."""
    P = Box.cube(d, -1.0, 1.0).to_polytope()
    for _ in range(int(g.integers(0, 5))):
        u = g.standard_normal(d)
        u /= np.linalg.norm(u)
        P = P.with_halfspace(u, float(g.uniform(0.1, 0.9)))
    return P


def suite_geometry(cfg: GeometryConfig, rng: RngStream) -> list:
    from scipy.optimize import linprog
    from scipy.spatial import ConvexHull
    from scipy.stats import chi2

    checks = []
    eps = 1e-9

    # strong duality against an independently solved dual
    g = rng.child(0).gen
    worst = 0.0
    for _ in range(cfg.lp_instances):
        d = int(g.integers(1, 5))
        m = int(g.integers(1, 8))
        A = np.vstack([np.eye(d), -np.eye(d), g.standard_normal((m, d))])
        b = np.concatenate([g.uniform(0.5, 2, d), g.uniform(0.5, 2, d), g.uniform(0.1, 2, m)])
        c = g.standard_normal(d)
        primal = solve_lp(LpProblem(c, A, b)).optimal_value
        dual = linprog(b, A_eq=A.T, b_eq=c, bounds=[(0, None)] * len(b), method="highs")
        worst = max(worst, abs(primal - dual.fun))
    checks.append(at_most("lp_strong_duality", worst, 10 * eps, instances=cfg.lp_instances))

    # V-polytope: support equals the best vertex
    g = rng.child(1).gen
    V = g.standard_normal((12, 3))
    hull = ConvexHull(V)
    P = HPolytope(hull.equations[:, :3], -hull.equations[:, 3])
    U = g.standard_normal((cfg.vertex_objectives, 3))
    got = geo.support_many(P, U)
    want = (U @ V[hull.vertices].T).max(axis=1)
    checks.append(at_most("lp_vertex_polytope", float(np.max(np.abs(got - want))), eps))

    # box support via LP vs closed form
    g = rng.child(2).gen
    box = Box(np.array([-0.3, 0.2, 1.0]), np.array([0.7, 2.5, 1.1]))
    U = g.standard_normal((cfg.support_directions, 3))
    err = np.max(np.abs(geo.support_many(box.to_polytope(), U) - geo.support_many(box, U)))
    checks.append(at_most("support_box_crosscheck", float(err), eps))

    # split conservation of MC volume
    s = rng.child(3)
    worst_z = 0.0
    for i in range(cfg.split_cases):
        g = s.child(i, 0).gen
        P = _random_polytope(g)
        u = g.standard_normal(2)
        u /= np.linalg.norm(u)
        c, _ = geo.bounding_ball(P)
        h = Hyperplane(u, float(u @ c + g.uniform(-0.3, 0.3)))
        below, above = geo.split(P, h)
        v, sv = geo.mc_volume(P, cfg.mc_points, s.child(i, 1))
        parts, spart = 0.0, 0.0
        for j, Q in enumerate((below, above)):
            if Q is not None:
                q, sq = geo.mc_volume(Q, cfg.mc_points, s.child(i, 2 + j))
                parts += q
                spart += sq * sq
        se = math.sqrt(sv * sv + spart)
        worst_z = max(worst_z, abs(parts - v) / se if se > 0 else 0.0)
    checks.append(at_most("split_volume_conservation_z", worst_z, 4.0, cases=cfg.split_cases))

    # diameter surrogate homogeneity
    dirs = geo.sphere_directions(2, 256)
    P = _random_polytope(rng.child(4).gen)
    a, b2 = geo.diameter_surrogate(P, dirs), geo.diameter_surrogate(P.scaled(3.7), dirs)
    checks.append(at_most("surrogate_homogeneity_rel_error", abs(b2 - 3.7 * a) / (3.7 * a), 1e-9))

    # sampler laws on the rectangle [0,2] x [0,1] with axis phi
    phi = DirectionalDistribution.axis(2)
    rect = Box(np.zeros(2), np.array([2.0, 1.0])).to_polytope()
    s = rng.child(5)
    dirs_e1 = np.empty(cfg.hit_samples, dtype=bool)
    offs, waits = [], np.empty(cfg.hit_samples)
    for i in range(cfg.hit_samples):
        h, w = sample_hit(phi, rect, s.child(i))
        e1 = abs(h.direction[0]) > 0.5
        dirs_e1[i] = e1
        waits[i] = w
        if e1:
            offs.append(h.offset * np.sign(h.direction[0]))
    k1 = int(dirs_e1.sum())
    obs = np.array([k1, cfg.hit_samples - k1])
    exp = cfg.hit_samples * np.array([2 / 3, 1 / 3])
    stat = float(((obs - exp) ** 2 / exp).sum())
    p = float(chi2.sf(stat, 1))
    checks.append(at_least("hit_direction_frequency_chi2_p", p, 0.01, e1_fraction=k1 / cfg.hit_samples))
    _, p_off = ks_uniform(offs, 0.0, 2.0)
    checks.append(at_least("hit_offset_uniform_ks_p", p_off, 0.01))
    lam = lambda_of(phi, rect).value
    m, se = _mean_se(waits)
    checks.append(within("hit_waiting_mean", m, 1 / lam, 4 * se, Lambda=lam))
    sq = (waits - waits.mean()) ** 2
    vm, vse = _mean_se(sq)
    checks.append(within("hit_waiting_variance", vm, 1 / lam**2, 4 * vse))

    # isotropic h_min dominates random discrete phi
    g = rng.child(6).gen
    dirs = geo.sphere_directions(2, 256)
    iso = h_min(DirectionalDistribution.isotropic(2), dirs)
    worst = -math.inf
    for _ in range(50):
        k = int(g.integers(2, 6))
        ang = g.uniform(0, math.pi, k)
        ph = DirectionalDistribution.discrete(np.column_stack([np.cos(ang), np.sin(ang)]),
                                              g.dirichlet(np.ones(k)))
        worst = max(worst, h_min(ph, dirs))
    checks.append(at_most("isotropic_hmin_maximal", worst, iso))

    # tiling: cell volumes add up to the window (both samplers)
    for j, kind in enumerate(("stit", "pht")):
        W = Box.cube(2)
        part = sample_partition(kind, W, DirectionalDistribution.isotropic(2), 3.0, rng.child(7, j))
        tot, var = 0.0, 0.0
        for i, C in enumerate(part.cells()):
            v, sv = geo.mc_volume(C, cfg.tiling_mc_points, rng.child(7, j, i))
            tot += v
            var += sv * sv
        checks.append(within(f"tiling_volume_{kind}", tot, 1.0, 4 * math.sqrt(var) + 1e-12,
                             cells=len(part.cells())))
    return checks


# ------------------------------------------------------------------- counts


def _count_job(args):
    seed, path, phi_spec, lam = args
    phi = DirectionalDistribution.from_dict(phi_spec, 2)
    return sample_stit(Box.cube(2), phi, lam, RngStream(seed, path)).cell_count()


def _counts(rng, tag, phi_spec, lam, reps, threads):
    jobs = [(rng.seed, rng.path + (tag, i), phi_spec, lam) for i in range(reps)]
    return np.array(parallel_map(_count_job, jobs, threads), dtype=np.float64)


def suite_counts(cfg: CountsConfig, rng: RngStream, threads: int = 1) -> list:
    checks = []
    target = expected_cell_count(MondrianCube(2, cfg.mondrian_lambda))
    N = _counts(rng, 0, {"kind": "axis"}, mondrian_lifetime(cfg.mondrian_lambda, 2), cfg.reps, threads)
    m, se = _mean_se(N)
    checks.append(within("mondrian_count_4se", m, target, 4 * se, reps=cfg.reps))
    checks.append(within("mondrian_count_5pct", m, target, 0.05 * target))
    target = expected_cell_count(IsotropicBody(2, cfg.isotropic_lambda, box_intrinsic_volumes([1.0, 1.0])))
    N = _counts(rng, 1, {"kind": "isotropic"}, cfg.isotropic_lambda, cfg.reps, threads)
    m, se = _mean_se(N)
    checks.append(within("isotropic_count_4se", m, target, 4 * se, reps=cfg.reps))
    return checks


# ----------------------------------------------------------------- zero cell


def _zero_cell_job(args):
    (seed, path, kind, phi_spec, lam, half, n_mc, dirs_key) = args
    s = RngStream(seed, path)
    W = Box.cube(2, -half, half)
    phi = DirectionalDistribution.from_dict(phi_spec, 2)
    Z = sample_zero_cell(kind, W, phi, lam, s.child(0))
    dirs = geo.sphere_directions(2, dirs_key[0], dirs_key[1])
    vol, _ = geo.mc_volume(Z, n_mc, s.child(1))
    return {
        "touches": geo.touches_box(Z, W),
        "surrogate": geo.diameter_surrogate(Z, dirs),
        "volume": vol,
        "centroid": geo.centroid_estimate(Z, n_mc, s.child(2)).tolist(),
    }


def _zero_cells(rng, tag, kind, phi_spec, lam, half, n, n_mc, dirs_key, threads):
    jobs = [(rng.seed, rng.path + tag + (i,), kind, phi_spec, lam, half, n_mc, dirs_key)
            for i in range(n)]
    return parallel_map(_zero_cell_job, jobs, threads)


PHI_CASES = (("axis", {"kind": "axis"}), ("isotropic", {"kind": "isotropic"}))


def suite_zerocell(cfg: ZeroCellConfig, rng: RngStream, threads: int = 1) -> list:
    checks = []
    dkey = (cfg.n_directions, cfg.direction_seed)
    for pi, (pname, pspec) in enumerate(PHI_CASES):
        m1, m2 = {}, {}
        for li, lam in enumerate(cfg.lambdas):
            kept, drawn, touched = [], 0, 0
            batch = cfg.samples
            while len(kept) < cfg.samples:
                res = _zero_cells(rng, (0, pi, li, drawn // batch), "stit", pspec, lam,
                                  cfg.half_width, batch, cfg.mc_points, dkey, threads)
                drawn += batch
                touched += sum(r["touches"] for r in res)
                kept += [r["surrogate"] for r in res if not r["touches"]]
            kept = np.array(kept[: cfg.samples])
            checks.append(at_most(f"zerocell_discard_rate_{pname}_lam{lam:g}", touched / drawn,
                                  cfg.max_discard_rate))
            m1[lam] = _mean_se(lam * kept)
            m2[lam] = _mean_se((lam * kept) ** 2)
        for k, mom in ((1, m1), (2, m2)):
            lams = list(cfg.lambdas)
            for i in range(len(lams)):
                for j in range(i + 1, len(lams)):
                    (a, sa), (b, sb) = mom[lams[i]], mom[lams[j]]
                    checks.append(within(
                        f"zerocell_scaling_k{k}_{pname}_lam{lams[i]:g}_vs_{lams[j]:g}",
                        a, b, 4 * math.sqrt(sa * sa + sb * sb)))
    for pi, (pname, pspec) in enumerate(PHI_CASES):
        res = _zero_cells(rng, (1, pi), "stit", pspec, cfg.centroid_lambda, cfg.centroid_half_width,
                          cfg.centroid_samples, cfg.mc_points, dkey, threads)
        C = np.array([r["centroid"] for r in res])
        for c in range(2):
            m, se = _mean_se(C[:, c])
            checks.append(within(f"zerocell_centroid_{pname}_x{c + 1}", m, 0.0, 4 * se))
    return checks


# ----------------------------------------------------------------- equality


def suite_equality(cfg: EqualityConfig, rng: RngStream, threads: int = 1) -> list:
    checks = []
    dkey = (cfg.n_directions, cfg.direction_seed)
    for pi, (pname, pspec) in enumerate(PHI_CASES):
        out = {}
        for ki, kind in enumerate(("stit", "pht")):
            out[kind] = _zero_cells(rng, (pi, ki), kind, pspec, cfg.lam, cfg.half_width,
                                    cfg.samples, cfg.mc_points, dkey, threads)
        for stat in ("volume", "surrogate"):
            a = [r[stat] for r in out["stit"]]
            b = [r[stat] for r in out["pht"]]
            D, p = ks_two_sample(a, b)
            checks.append(at_least(f"stit_pht_{stat}_ks_p_{pname}", p, cfg.alpha, statistic=D,
                                   mean_stit=float(np.mean(a)), mean_pht=float(np.mean(b))))
    return checks


# ------------------------------------------------------------------- markov


def _markov_job(args):
    seed, path, phi_spec, lam1, lam2 = args
    s = RngStream(seed, path)
    phi = DirectionalDistribution.from_dict(phi_spec, 2)
    W = Box.cube(2)
    direct = sample_stit(W, phi, lam1 + lam2, s.child(0)).cell_count()
    nested = iterate(sample_stit(W, phi, lam1, s.child(1)), lam2, s.child(2)).cell_count()
    return direct, nested


def suite_markov(cfg: MarkovConfig, rng: RngStream, threads: int = 1) -> list:
    checks = []
    for pi, (pname, pspec) in enumerate(PHI_CASES):
        jobs = [(rng.seed, rng.path + (pi, i), pspec, cfg.lam1, cfg.lam2) for i in range(cfg.reps)]
        res = np.array(parallel_map(_markov_job, jobs, threads), dtype=np.float64)
        D, p = ks_two_sample(res[:, 0], res[:, 1])
        checks.append(at_least(f"markov_count_ks_p_{pname}", p, cfg.alpha, statistic=D,
                               mean_direct=float(res[:, 0].mean()), mean_iterated=float(res[:, 1].mean())))
    return checks


# -------------------------------------------------------------------- rates


def rate_experiments(cfg: RatesConfig) -> dict:
    common = dict(d=cfg.d, beta=cfg.beta, L=cfg.L, n_grid=cfg.n_grid, reps=cfg.reps, n_test=cfg.n_test)
    return {
        "c0_stit": RateExperiment(smoothness="C0", tuning="C0", sigma=cfg.sigma, **common),
        "c0_pht": RateExperiment(smoothness="C0", tuning="C0", sigma=cfg.sigma, sampler="pht", **common),
        "c1_forest": RateExperiment(smoothness="C1", tuning="C1", forest_size="C1", sigma=cfg.sigma_c1,
                                    **common),
        "c1_tree_baseline": RateExperiment(smoothness="C1", tuning="C0", sigma=cfg.sigma_c1, **common),
    }


def _rate_checks(name, fit, pooled, target, tol) -> list:
    details = {"n_grid": fit.n_grid, "mean_risks": fit.mean_risks, "std_errors": fit.std_errors,
               "lambdas": fit.lambdas, "forest_sizes": fit.forest_sizes, "intercept": fit.intercept}
    m = np.array(pooled.mean_risks)
    se = np.array(pooled.std_errors)
    z = -np.diff(m) / np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
    return [
        within(f"rate_slope_{name}", fit.slope, target, tol, **details),
        # every step down must clear 4 combined standard errors
        at_least(f"rate_monotone_{name}", float(np.min(z)), 4.0, step_z=z.tolist(),
                 reps=len(pooled.rows) // len(pooled.n_grid), mean_risks=pooled.mean_risks),
    ]


def _pooled(e, fit, total_reps, rng, threads):
    extra = total_reps - e.reps
    if extra <= 0:
        return fit
    more = run_rate_experiment(replace(e, reps=extra), rng, threads, first_rep=e.reps)
    return fit_rows(e, fit.rows + more.rows)


def suite_rates(cfg: RatesConfig, rng: RngStream, threads: int = 1, fits: dict | None = None) -> list:
    """Slopes of log risk on log n.  ``fits`` (if given) receives the RateFit
    objects keyed by experiment name."""
    exps = rate_experiments(cfg)
    d, b = cfg.d, cfg.beta
    c0_rate = -2 * b / (d + 2 * b)
    c1_rate = -(2 * b + 2) / (d + 2 * b + 2)
    checks = []
    results = {}
    for i, name in enumerate(("c0_stit", "c1_forest", "c0_pht")):
        if name not in cfg.experiments:
            continue
        results[name] = run_rate_experiment(exps[name], rng.child(i), threads)
        pooled = _pooled(exps[name], results[name], cfg.monotone_reps.get(name, 0), rng.child(i), threads)
        target = c1_rate if name == "c1_forest" else c0_rate
        checks += _rate_checks(name, results[name], pooled, target, cfg.tolerance)
        if name == "c1_forest":
            results["c1_tree_baseline"] = base = run_rate_experiment(exps["c1_tree_baseline"],
                                                                     rng.child(3), threads)
            gap = base.slope - results[name].slope
            checks.append(at_least("rate_c1_forest_steeper_than_tree", gap, cfg.min_gap,
                                   forest_slope=results[name].slope, tree_slope=base.slope,
                                   tree_mean_risks=base.mean_risks))
    if fits is not None:
        fits.update(results)
    return checks


# ------------------------------------------------------------------ biasvar


def suite_biasvar(cfg: BiasVarConfig, rng: RngStream, threads: int = 1) -> list:
    checks = []
    f = catalog_function("C0", 1, 1.0, 1.0)
    mu = UniformBox(Box.cube(1))
    r = bias_variance_study(cfg.lam, cfg.n, 1, f, mu, cfg.reps, rng.child(0), sigma=cfg.sigma,
                            n_test=cfg.n_test, n_oracle=cfg.n_oracle)
    se = math.sqrt(r["total_se"] ** 2 + r["bias_se"] ** 2 + r["variance_se"] ** 2)
    checks.append(within("risk_decomposition", r["total"], r["bias"] + r["variance"], 4 * se,
                         bias=r["bias"], variance=r["variance"], reps=cfg.reps))
    bound = (5 * f.sup_norm**2 + 2 * cfg.sigma**2) * r["cells"] / cfg.n
    checks.append(at_most("variance_cell_count_bound", r["variance"], bound, mean_cells=r["cells"]))

    # Jensen: forest vs its own trees on fixed data
    f2 = catalog_function("C0", 2, 1.0, 1.0)
    W = Box.cube(2)
    mu2 = UniformBox(W)
    data = make_dataset(f2, mu2, cfg.forest_n, cfg.sigma, rng.child(1))
    phi = DirectionalDistribution.axis(2)
    diffs, forest_r, tree_r = [], [], []
    for i in range(cfg.forest_reps):
        s = rng.child(2, i)
        parts = [sample_partition("stit", W, phi, cfg.forest_lam, s.child(m)) for m in range(cfg.forest_M)]
        X = mu2.sample(cfg.n_test, s.child(cfg.forest_M).gen)
        fx = f2(X)
        preds = np.array([fit_tree(p, data).predict(X) for p in parts])
        rf = float(np.mean((preds.mean(axis=0) - fx) ** 2))
        rt = float(np.mean((preds - fx) ** 2))
        forest_r.append(rf)
        tree_r.append(rt)
        diffs.append(rf - rt)
    mf, _ = _mean_se(forest_r)
    mt, _ = _mean_se(tree_r)
    _, sd = _mean_se(diffs)
    checks.append(at_most("forest_jensen_dominance", mf, mt + 4 * sd, mean_tree_risk=mt,
                          M=cfg.forest_M, reps=cfg.forest_reps))
    return checks


# --------------------------------------------------------------------- entry


def run_suite(suite: str, config: dict | None = None, seed: int = 0, threads: int = 1) -> SuiteReport:
    cfg = make_config(suite, config)
    rng = as_stream(seed).child(SUITES.index(suite))
    t0 = time.perf_counter()
    if suite == "geometry":
        checks = suite_geometry(cfg, rng)
    else:
        checks = globals()[f"suite_{suite}"](cfg, rng, threads)
    return SuiteReport(suite, _jsonable(asdict(cfg)), int(seed), checks, time.perf_counter() - t0)
