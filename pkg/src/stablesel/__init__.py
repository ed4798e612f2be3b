"""Stable feature selection under covariate shift via sample reweighting."""

from .core import Dataset, Rng, WeightVector, min_eigenvalue, solve_spd, weighted_cov, weighted_mean
from .dwr import DwrConfig, DwrResult, dwr_fit, dwr_fit_grid, dwr_loss, max_abs_weighted_cov
from .errors import (
    ConfigError,
    ContractError,
    DimensionError,
    DivergenceError,
    GenerationError,
    SingularMatrixError,
    StableselError,
    TheoryViolationError,
)
from .evaluate import (
    METHODS,
    EvalReport,
    FeatureRanking,
    HyperGrids,
    SelectedFit,
    downstream_rmse,
    evaluate_method,
    fit_with_selection,
    rank_average,
    score_features,
    selection_f1,
    sweep_selection_sizes,
)
from .nnet import AdamState, Mlp, forward, forward_batch, grad_check, loss_and_gradients, train
from .regress import Coefficients, lasso, ols, wls
from .srdo import SrdoConfig, SrdoResult, classifier_bce, srdo_fit
from .synthgen import (
    EnvironmentSpec,
    GeneratorSpec,
    sample_environment,
    sample_unbiased,
    stable_indices,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Rng",
    "WeightVector",
    "weighted_mean",
    "weighted_cov",
    "solve_spd",
    "min_eigenvalue",
    "StableselError",
    "ContractError",
    "DimensionError",
    "SingularMatrixError",
    "GenerationError",
    "DivergenceError",
    "TheoryViolationError",
    "ConfigError",
    "Coefficients",
    "ols",
    "wls",
    "lasso",
    "Mlp",
    "AdamState",
    "forward",
    "forward_batch",
    "train",
    "grad_check",
    "loss_and_gradients",
    "GeneratorSpec",
    "EnvironmentSpec",
    "stable_indices",
    "sample_environment",
    "sample_unbiased",
    "DwrConfig",
    "DwrResult",
    "dwr_loss",
    "dwr_fit",
    "dwr_fit_grid",
    "max_abs_weighted_cov",
    "SrdoConfig",
    "SrdoResult",
    "srdo_fit",
    "classifier_bce",
    "METHODS",
    "FeatureRanking",
    "EvalReport",
    "HyperGrids",
    "SelectedFit",
    "score_features",
    "fit_with_selection",
    "rank_average",
    "selection_f1",
    "downstream_rmse",
    "evaluate_method",
    "sweep_selection_sizes",
    "__version__",
]
