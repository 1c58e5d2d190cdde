"""STIT and Poisson hyperplane partitions, purely random forests on them, and
Monte Carlo checks of their geometry and convergence rates."""
from __future__ import annotations

from .directions import DirectionalDistribution, lambda_of, sample_hit, zonoid_support, zonoid_volume
from .forest import (
    Dataset,
    ForestModel,
    TreeModel,
    UniformBox,
    estimate_risk,
    fit_forest,
    fit_tree,
    predict_forest,
    predict_tree,
)
from .geometry import Ball, Box, HPolytope, Hyperplane
from .linalg_lp import LpProblem, LpResult, feasible_point, solve_lp
from .rng import RngStream
from .stats import (
    RateExperiment,
    RateFit,
    bias_variance_study,
    expected_cell_count,
    ks_two_sample,
    run_rate_experiment,
    tune_forest_size,
    tune_lambda,
)
from .tessellation import (
    PhtPartition,
    StitPartition,
    cell_count,
    cell_of,
    enumerate_cells,
    iterate,
    sample_pht,
    sample_stit,
    zero_cell,
)

__version__ = "0.1.0"
