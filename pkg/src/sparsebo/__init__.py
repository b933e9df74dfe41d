"""Multi-objective Bayesian optimization over joint network/accelerator spaces
with sparse Gaussian-process surrogates."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .acquisition import AcquisitionSpec, expected_improvement, scalarize_and_select  # noqa: E402
from .gp_full import GPModel, fit_full, log_marginal_likelihood, predict_full  # noqa: E402
from .gp_sparse import SGPModel, InducingSet, fit_sparse, predict_sparse, select_inducing, woodbury_solve  # noqa: E402
from .kernels import KernelParams, cov_matrix, lengthscale_heuristic, matern32  # noqa: E402
from .pareto import (  # noqa: E402
    ParetoArchive,
    dominated_hypervolume,
    dominates,
    pareto_filter,
    pareto_optimal_region,
    top1_distance,
)
from .search_space import Candidate, DimensionSpec, SearchSpace, decompose, lhs_sample  # noqa: E402
from .config import OptimizerConfig, config_from_dict, parse_config  # noqa: E402
from .engine import RunAborted, RunResult, run  # noqa: E402

__all__ = [
    "BACKEND", "AcquisitionSpec", "expected_improvement", "scalarize_and_select",
    "GPModel", "fit_full", "log_marginal_likelihood", "predict_full",
    "SGPModel", "InducingSet", "fit_sparse", "predict_sparse", "select_inducing", "woodbury_solve",
    "KernelParams", "cov_matrix", "lengthscale_heuristic", "matern32",
    "ParetoArchive", "dominated_hypervolume", "dominates", "pareto_filter",
    "pareto_optimal_region", "top1_distance",
    "Candidate", "DimensionSpec", "SearchSpace", "decompose", "lhs_sample",
    "OptimizerConfig", "config_from_dict", "parse_config", "RunAborted", "RunResult", "run",
]
