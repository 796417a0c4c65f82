"""Shared-memory parallel coordinate descent for L1-regularized problems."""

from .coloring import FeatureColoring, color_features, coloring_stats
from .data import (
    Dataset,
    DesignMatrix,
    ParseError,
    column_dot_loss_grad,
    load_libsvm,
    normalize_columns,
    save_libsvm,
)
from .engine import (
    DivergenceError,
    ModelState,
    RunConfig,
    RunResult,
    TraceRecord,
    check_convergence,
    propose_phase,
    run,
    update_phase,
)
from .losses import LOGISTIC, SQUARED, Loss, Objective, loss_deriv, loss_value, objective_value
from .spectral import SpectralEstimate, p_star_bound, power_iteration
from .steps import (
    Proposal,
    bounded_step,
    clip,
    exact_step_squared,
    propose,
    proxy_value,
    refine,
    soft_threshold,
)
from .strategies import ProposalBatch, StrategyConfig, accept, select, select_batch

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DesignMatrix",
    "DivergenceError",
    "FeatureColoring",
    "LOGISTIC",
    "Loss",
    "ModelState",
    "Objective",
    "ParseError",
    "Proposal",
    "ProposalBatch",
    "RunConfig",
    "RunResult",
    "SpectralEstimate",
    "SQUARED",
    "StrategyConfig",
    "TraceRecord",
    "accept",
    "bounded_step",
    "check_convergence",
    "clip",
    "color_features",
    "coloring_stats",
    "column_dot_loss_grad",
    "exact_step_squared",
    "load_libsvm",
    "loss_deriv",
    "loss_value",
    "normalize_columns",
    "objective_value",
    "p_star_bound",
    "power_iteration",
    "propose",
    "propose_phase",
    "proxy_value",
    "refine",
    "run",
    "save_libsvm",
    "select",
    "select_batch",
    "soft_threshold",
    "update_phase",
]
