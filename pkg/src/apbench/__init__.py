"""Anomaly prediction benchmark toolkit.

Synthetic datasets with hidden precursors, a cumulative-sum Wasserstein
loss, a numpy FCN forecaster and window-level temporal metrics.
"""

from .estimators import ConstantForecaster, FCNForecaster, PerfectForecaster
from .harness import TrainConfig, evaluate, prepare_splits, run_protocol, train
from .loss import transport_oracle, wasserstein_grad, wasserstein_loss
from .metrics import MetricsReport, aggregate_report, classify_window, dice_score, density_score
from .metrics import existence_score, lead_time_score
from .series import SeriesInstance, WindowSample, make_windows, split_windows
from .synth import GenConfig, dataset_config, generate_dataset

__version__ = "0.1.0"

__all__ = [
    "ConstantForecaster",
    "FCNForecaster",
    "GenConfig",
    "MetricsReport",
    "PerfectForecaster",
    "SeriesInstance",
    "TrainConfig",
    "WindowSample",
    "aggregate_report",
    "classify_window",
    "dataset_config",
    "density_score",
    "dice_score",
    "evaluate",
    "existence_score",
    "generate_dataset",
    "lead_time_score",
    "make_windows",
    "prepare_splits",
    "run_protocol",
    "split_windows",
    "train",
    "transport_oracle",
    "wasserstein_grad",
    "wasserstein_loss",
]
