"""Small dense/LSTM networks, Hyperband tuning, transfer learning and temporal disaggregation for macro series."""

from .dataset import (
    LabelStats,
    ScalerParams,
    SeriesFrame,
    SplitBundle,
    label_stats,
    load_csv,
    log_first_difference,
    make_windows,
    split,
    standardize_apply,
    standardize_fit,
    trim_missing,
    write_csv,
    yoy_change,
)
from .disagg import (
    ChowLinResult,
    DisaggregationProblem,
    RideConfig,
    RideModel,
    aggregate,
    ar1_covariance,
    build_aggregation,
    chow_lin,
    ride_extrapolate,
    ride_train,
)
from .errors import ConfigError, DataError, RankDeficiencyError, TrainingError
from .metrics import ConfusionMatrix, MetricReport, auc, classification_report, confusion, mae, pearson, roc_curve
from .nn import (
    DenseLayer,
    LstmLayer,
    LstmState,
    Network,
    NetworkSpec,
    backward,
    forward,
    init_network,
    load_network,
    lstm_forward,
    lstm_step,
    network_loss,
    predict,
    save_network,
)
from .optim import TrainConfig, TrainHistory, Trainer, adagrad_step, adam_step, evaluate, init_optimizer, train
from .synthetic import RegimeParams, generate_disaggregation_data, generate_gap_series, generate_regime_series
from .transfer import (
    TransferPlan,
    TransferReport,
    apply_locked,
    copy_network,
    detect_negative_transfer,
    fine_tune_unlocked,
)
from .tuner import HyperSpace, TunerConfig, hyperband_schedule, schedule_total_epochs, tune

__version__ = "0.1.0"

__all__ = [
    "ChowLinResult",
    "ConfigError",
    "ConfusionMatrix",
    "DataError",
    "DenseLayer",
    "DisaggregationProblem",
    "HyperSpace",
    "LabelStats",
    "LstmLayer",
    "LstmState",
    "MetricReport",
    "Network",
    "NetworkSpec",
    "RankDeficiencyError",
    "RegimeParams",
    "RideConfig",
    "RideModel",
    "ScalerParams",
    "SeriesFrame",
    "SplitBundle",
    "TrainConfig",
    "TrainHistory",
    "Trainer",
    "TrainingError",
    "TransferPlan",
    "TransferReport",
    "TunerConfig",
    "adagrad_step",
    "adam_step",
    "aggregate",
    "apply_locked",
    "ar1_covariance",
    "auc",
    "backward",
    "build_aggregation",
    "chow_lin",
    "classification_report",
    "confusion",
    "copy_network",
    "detect_negative_transfer",
    "evaluate",
    "fine_tune_unlocked",
    "forward",
    "generate_disaggregation_data",
    "generate_gap_series",
    "generate_regime_series",
    "hyperband_schedule",
    "init_network",
    "init_optimizer",
    "label_stats",
    "load_csv",
    "load_network",
    "log_first_difference",
    "lstm_forward",
    "lstm_step",
    "mae",
    "make_windows",
    "network_loss",
    "pearson",
    "predict",
    "ride_extrapolate",
    "ride_train",
    "roc_curve",
    "save_network",
    "schedule_total_epochs",
    "split",
    "standardize_apply",
    "standardize_fit",
    "train",
    "trim_missing",
    "tune",
    "write_csv",
    "yoy_change",
]
