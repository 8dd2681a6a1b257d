"""Sparse structured approximation of multi-channel signals.

Multi-SSSA solves the multi-channel fused LASSO

    min_X ||Y - Phi X||_F^2 + lam1 ||X||_1 + lam2 sum_t ||X[:, t] - X[:, t-1]||_1

by split Bregman iterations. The package also ships the comparison solvers
(OMP, SOMP, LASSO, group LASSO), a generator for piecewise-constant test
signals and the competence-map benchmark.
"""
from .baselines import (
    GreedyConfig,
    ProxConfig,
    fista_group_lasso,
    fista_lasso,
    omp,
    omp_columns,
    somp,
)
from .bench import GridSpec, competence_map, dist, emit_report, hyper_search, run_cell, run_grid
from .model import (
    Dictionary,
    DifferenceOperator,
    ProblemInstance,
    SignalSet,
    build_difference_operator,
    normalize_dictionary,
    objective_value,
    read_matrix,
    relative_change,
    write_matrix,
)
from .solver import Solution, SolverConfig, multi_sssa_solve, soft_threshold
from .stats import paired_t_test
from .sylvester import precompute_factors, solve_sylvester, sym_eig
from .synthgen import GenConfig, generate_dataset, generate_dictionary

__version__ = "0.1.0"
