"""
Metrics, baselines and the experiment protocol.
"""

from .baselines import BaselinePredictor, baseline_fit_predict
from .experiment import (
    GRID_PRESETS,
    PUBLISHED_RESPONSE_TIME_TARGETS,
    SWEEP_COLUMNS,
    ExperimentOutcome,
    cell_seed,
    execute_experiment,
    expand_grid,
    npe_label,
    published_targets,
    prepare_split,
    run_experiment,
    score_model,
    sweep,
    sweep_frame,
    trend_checks,
)
from .metrics import mae_rmse, residual_metrics

__all__ = [
    "mae_rmse",
    "residual_metrics",
    "BaselinePredictor",
    "baseline_fit_predict",
    "npe_label",
    "published_targets",
    "cell_seed",
    "prepare_split",
    "score_model",
    "execute_experiment",
    "run_experiment",
    "expand_grid",
    "sweep",
    "sweep_frame",
    "trend_checks",
    "ExperimentOutcome",
    "GRID_PRESETS",
    "PUBLISHED_RESPONSE_TIME_TARGETS",
    "SWEEP_COLUMNS",
]
