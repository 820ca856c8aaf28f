"""Config-driven experiment pipeline: transform, split, tune, train, transfer, evaluate.

One JSON config describes one experiment. Every artifact is written with
fixed 6-decimal floats so that a rerun with the same seed reproduces the
output files byte for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import metrics
from .dataset import (
    ScalerParams,
    SeriesFrame,
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
from .disagg import DisaggregationProblem, RideConfig, chow_lin, ride_extrapolate, ride_inputs, ride_train
from .errors import ConfigError, DataError
from .nn import NetworkSpec, init_network, predict, save_network
from .optim import TrainConfig, TrainHistory, train
from .synthetic import generate_disaggregation_data, generate_gap_series, generate_regime_series, growth_to_levels
from .transfer import apply_locked, detect_negative_transfer, fine_tune_unlocked, plan_from_dict
from .tuner import HyperSpace, TunerConfig, best_trial, tune, write_trials_csv

TASKS = ("cycle_classification", "output_gap_regression", "disaggregation", "synth")
TRANSFORMS = ("level", "first_log_diff", "yoy")
MODELS = ("logit_baseline", "linear_baseline", "fnn", "lstm")

# which models each task accepts; None means "no model"
TASK_MODELS = {
    "cycle_classification": ("logit_baseline", "fnn", "lstm"),
    "output_gap_regression": ("linear_baseline", "fnn", "lstm"),
    "disaggregation": ("linear_baseline", "fnn"),
    "synth": (None,),
}
SYNTH_KINDS = ("regime", "gap", "disagg")


@dataclass
class ExperimentConfig:
    """Validated experiment description; see ``from_dict`` for the JSON layout."""

    task: str
    model: str | None = None
    transform: str = "first_log_diff"
    data: dict = field(default_factory=dict)
    network: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    tuner: dict | None = None
    split: dict = field(default_factory=dict)
    sequence_length: int = 4
    transfer: dict | None = None
    disagg: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "out"
    base_dir: str = "."

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
        if "task" not in d:
            raise ConfigError("config needs a 'task'")
        return cls(**d, base_dir=str(base_dir))

    @property
    def is_classification(self) -> bool:
        return self.task == "cycle_classification"

    def validate(self) -> None:
        """Reject bad enum values and task/model/transform mismatches (no data is read)."""
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {TASKS}")
        if self.model is not None and self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.model not in TASK_MODELS[self.task]:
            raise ConfigError(f"task {self.task!r} does not accept model {self.model!r}")
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"unknown transform {self.transform!r}; choose from {TRANSFORMS}")
        if self.task == "disaggregation":
            if self.transform == "first_log_diff":
                raise ConfigError("disaggregation supports the level and yoy transforms")
            if self.model == "linear_baseline" and self.transform != "level":
                raise ConfigError("Chow-Lin (linear_baseline) disaggregation works on levels")
        if self.task == "synth":
            if self.synth.get("kind", "regime") not in SYNTH_KINDS:
                raise ConfigError(f"unknown synth kind {self.synth.get('kind')!r}")
        if self.transfer is not None:
            if self.task not in ("cycle_classification", "output_gap_regression"):
                raise ConfigError("transfer applies to the classification and regression tasks")
            if self.model in ("logit_baseline", "linear_baseline"):
                raise ConfigError("transfer needs an fnn or lstm target model")
            if "source_model" not in self.transfer:
                raise ConfigError("transfer block needs 'source_model'")
            if self.transfer.get("mode", "locked") not in ("locked", "unlocked"):
                raise ConfigError(f"unknown transfer mode {self.transfer.get('mode')!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not isinstance(self.sequence_length, int) or self.sequence_length < 1:
            raise ConfigError("sequence_length must be a positive integer")
        # building these objects checks their own fields
        self.train_config()
        self.network_defaults()
        if self.tuner is not None:
            self.tuner_config()
            self.hyper_space()
        unknown = set(self.split) - {"test_fraction", "val_fraction"}
        if unknown:
            raise ConfigError(f"unknown split key(s) {sorted(unknown)}")

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def out(self, name: str) -> Path:
        return self.path(self.output_dir) / name

    def train_config(self) -> TrainConfig:
        task_defaults = (
            {"loss": "bce", "objective": "max_val_auc"}
            if self.is_classification
            else {"loss": "mse", "objective": "min_val_mae" if self.task != "disaggregation" else "min_val_loss"}
        )
        allowed = {"epochs", "learning_rate", "batch_size", "optimizer", "loss", "objective"}
        unknown = set(self.train) - allowed
        if unknown:
            raise ConfigError(f"unknown train key(s) {sorted(unknown)}")
        merged = {**task_defaults, **self.train}
        if self.is_classification and merged["loss"] == "mse":
            raise ConfigError("classification trains with bce or squared_hinge")
        if not self.is_classification and merged["loss"] != "mse":
            raise ConfigError("regression and disaggregation train with mse")
        return TrainConfig(seed=self.seed, shuffle=self.model != "lstm", **merged)

    def network_defaults(self) -> dict:
        allowed = {
            "depth", "units", "lstm_units", "activation", "dropout", "lstm_dropout",
            "regularization", "lam", "lstm_candidate",
        }  # fmt: skip
        unknown = set(self.network) - allowed
        if unknown:
            raise ConfigError(f"unknown network key(s) {sorted(unknown)}")
        baseline = self.model in ("logit_baseline", "linear_baseline")
        base = {
            "depth": 3,
            "units": 64,
            "lstm_units": 64 if self.model == "lstm" else 0,
            "activation": "relu",
            "dropout": 0.5 if self.is_classification else 0.0,
            "lstm_dropout": 0.3,
            "regularization": "none" if self.is_classification or baseline else "l1",
            "lam": 0.0 if self.is_classification or baseline else 1e-3,
            "lstm_candidate": "sigmoid_as_printed",
        }
        base.update(self.network)
        if baseline:
            base.update(depth=0, lstm_units=0, dropout=0.0)
        if self.model == "fnn":
            base["lstm_units"] = 0
        if self.model == "lstm" and base["lstm_units"] < 1:
            raise ConfigError("lstm model needs lstm_units >= 1")
        NetworkSpec(input_width=1, output_activation="identity", **base)
        return base

    def tuner_config(self) -> TunerConfig:
        t = self.tuner or {}
        unknown = set(t) - {"max_epochs", "factor", "space"}
        if unknown:
            raise ConfigError(f"unknown tuner key(s) {sorted(unknown)}")
        return TunerConfig(
            max_epochs=int(t.get("max_epochs", 10)),
            factor=int(t.get("factor", 3)),
            objective=self.train_config().objective,
            seed=self.seed,
        )

    def hyper_space(self) -> HyperSpace:
        space = HyperSpace.from_dict((self.tuner or {}).get("space", {}))
        if self.model != "lstm":
            space = replace(space, lstm_units=(0,))
        if self.model in ("logit_baseline", "linear_baseline"):
            space = replace(space, dense_depth=(0,), dense_units=(0,), activation=("relu",))
        reg = self.network_defaults()["regularization"]
        if reg == "none":
            space = replace(space, lam=(0.0,))
        return space


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config; relative paths resolve against its folder."""
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(d, path.parent)


# ------------------------------------------------------------------ data


@dataclass
class Design:
    """Model-ready arrays: features (rows or windows), targets and row dates."""

    x: np.ndarray
    y: np.ndarray
    dates: list
    feature_names: list


def apply_transform(frame: SeriesFrame, transform: str) -> SeriesFrame:
    if transform == "first_log_diff":
        return log_first_difference(frame)
    if transform == "yoy":
        return yoy_change(frame)
    return frame


def build_design(
    frame: SeriesFrame,
    label: str,
    features: list | None,
    transform: str,
    sequence_length: int | None = None,
) -> Design:
    """Transform the feature columns, align labels by date and optionally window.

    The label column is never transformed. Windows end at the labeled row.
    """
    if label not in frame.column_names:
        raise DataError(f"label column {label!r} not found; have {frame.column_names}")
    names = features or [c for c in frame.column_names if c != label]
    if label in names:
        raise DataError(f"label column {label!r} is also listed as a feature")
    frame = trim_missing(frame.select([*names, label]))
    x_frame = apply_transform(frame.select(names), transform)
    offset = frame.n_rows - x_frame.n_rows
    y = frame.column(label)[offset:]
    if not np.isfinite(x_frame.values).all():
        raise DataError("features contain missing values after trimming")
    x, dates = x_frame.values, list(x_frame.time_index)
    if sequence_length is not None:
        x = make_windows(x, sequence_length)
        y = y[sequence_length - 1 :]
        dates = dates[sequence_length - 1 :]
    return Design(x, y, dates, names)


def load_design(cfg: ExperimentConfig, data: dict | None = None) -> Design:
    data = cfg.data if data is None else data
    if "path" not in data:
        raise ConfigError("data block needs a 'path'")
    frame = load_csv(cfg.path(data["path"]), data.get("date_column", "date"), data.get("frequency", "quarterly"))
    default_label = "recession" if cfg.is_classification else "gap"
    seq = cfg.sequence_length if cfg.model == "lstm" else None
    return build_design(frame, data.get("label", default_label), data.get("features"), cfg.transform, seq)


def _scale_rows(x):
    return x[:, -1, :] if x.ndim == 3 else x


def prepare_bundle(cfg: ExperimentConfig, design: Design):
    """Split (shuffled unless LSTM) and standardize on training rows; returns (bundle, scaler)."""
    s = cfg.split
    bundle = split(
        design.x,
        design.y,
        s.get("test_fraction", 0.4),
        s.get("val_fraction", 0.3),
        shuffle=cfg.model != "lstm",
        seed=cfg.seed,
    )
    scaler = standardize_fit(_scale_rows(bundle.train_x))
    bundle = replace(
        bundle,
        train_x=standardize_apply(bundle.train_x, scaler),
        val_x=standardize_apply(bundle.val_x, scaler),
        test_x=standardize_apply(bundle.test_x, scaler),
    )
    if cfg.is_classification:
        for part in (bundle.train_y, bundle.val_y, bundle.test_y):
            if not np.isin(part, (0, 1)).all():
                raise DataError("classification labels must be 0 or 1")
    return bundle, scaler


# ------------------------------------------------------------------ models


def network_spec(cfg: ExperimentConfig, width: int, train_y, overrides: dict | None = None) -> NetworkSpec:
    """NetworkSpec for the configured model; ``overrides`` are tuner choices."""
    base = cfg.network_defaults()
    if overrides:
        if cfg.model not in ("logit_baseline", "linear_baseline"):
            base.update(depth=overrides["dense_depth"], units=overrides["dense_units"], activation=overrides["activation"])
            if cfg.model == "lstm":
                base["lstm_units"] = overrides["lstm_units"]
        if base["regularization"] != "none":
            base["lam"] = overrides["lam"]
    if cfg.is_classification:
        return NetworkSpec(
            input_width=width, output_activation="sigmoid", output_bias=label_stats(train_y).initial_bias, **base
        )
    return NetworkSpec(input_width=width, output_activation="identity", **base)


@dataclass
class FitResult:
    network: object
    history: TrainHistory
    best_config: dict | None
    trials: list


def fit_model(cfg: ExperimentConfig, bundle) -> FitResult:
    """Optional Hyperband search, then a fresh retrain for ``train.epochs`` epochs."""
    width = bundle.train_x.shape[-1]
    tcfg = cfg.train_config()
    best, trials = None, []
    if cfg.tuner is not None:

        def build(hp, rng):
            return init_network(network_spec(cfg, width, bundle.train_y, hp), rng)

        best, trials = tune(cfg.hyper_space(), cfg.tuner_config(), bundle, build, tcfg)
        tcfg = replace(tcfg, learning_rate=best["learning_rate"])
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    net = init_network(network_spec(cfg, width, bundle.train_y, best), rng)
    net, history = train(net, bundle, tcfg)
    return FitResult(net, history, best, trials)


def run_baseline_logit(cfg: ExperimentConfig, bundle) -> metrics.MetricReport:
    """Logistic regression as a depth-0 sigmoid network trained by the shared loop."""
    if not cfg.is_classification:
        raise ConfigError("the logit baseline needs the cycle_classification task")
    cfg = replace(cfg, model="logit_baseline", tuner=None, transfer=None)
    fit = fit_model(cfg, bundle)
    return metrics.classification_report(predict(fit.network, bundle.test_x), bundle.test_y)


def run_baseline_linear(cfg: ExperimentConfig, bundle) -> metrics.MetricReport:
    """Linear regression as a depth-0 identity network trained with MSE."""
    if cfg.task != "output_gap_regression":
        raise ConfigError("the linear baseline needs the output_gap_regression task")
    cfg = replace(cfg, model="linear_baseline", tuner=None, transfer=None)
    fit = fit_model(cfg, bundle)
    return metrics.regression_report(predict(fit.network, bundle.test_x), bundle.test_y)


def report(cfg: ExperimentConfig, scores, labels) -> metrics.MetricReport:
    if cfg.is_classification:
        return metrics.classification_report(scores, labels)
    return metrics.regression_report(scores, labels)


# ------------------------------------------------------------------ outputs


def _fmt(v) -> str:
    return f"{float(v):.6f}"


def write_predictions(path, dates, scores, labels, classification: bool) -> None:
    """date, score|estimate, label rows in time order."""
    order = np.argsort(np.asarray(dates, dtype=object).astype(str), kind="stable")
    name = "score" if classification else "estimate"
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", name, "label"])
        for i in order:
            lab = str(int(labels[i])) if classification else _fmt(labels[i])
            w.writerow([dates[i], _fmt(scores[i]), lab])


def write_series(path, design: Design, bundle, scores, classification: bool) -> None:
    """Plot-ready whole-sample series with the split membership of each row."""
    part = np.empty(len(design.dates), dtype=object)
    part[bundle.train_index], part[bundle.val_index], part[bundle.test_index] = "train", "val", "test"
    name = "score" if classification else "estimate"
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", name, "label", "part"])
        for i, d in enumerate(design.dates):
            lab = str(int(design.y[i])) if classification else _fmt(design.y[i])
            w.writerow([d, _fmt(scores[i]), lab, part[i]])


def write_json(path, obj) -> None:
    Path(path).write_text(metrics.format_json(obj) + "\n", encoding="utf-8")


def _preprocess_record(cfg: ExperimentConfig, design: Design, scaler: ScalerParams) -> dict:
    return {
        "task": cfg.task,
        "model": cfg.model,
        "transform": cfg.transform,
        "features": design.feature_names,
        "label": cfg.data.get("label", "recession" if cfg.is_classification else "gap"),
        "sequence_length": cfg.sequence_length if cfg.model == "lstm" else None,
        "frequency": cfg.data.get("frequency", "quarterly"),
        "scaler": scaler.to_dict(),
    }


def _all_rows(design: Design, scaler: ScalerParams):
    return standardize_apply(design.x, scaler)


# ------------------------------------------------------------------ runners


def run_tune(cfg: ExperimentConfig) -> dict:
    """Hyperband search only: writes trials.csv and best_config.json."""
    if cfg.task in ("synth", "disaggregation"):
        raise ConfigError(f"task {cfg.task!r} has no standalone tuning step")
    if cfg.tuner is None:
        cfg = replace(cfg, tuner={})
    design = load_design(cfg)
    bundle, _ = prepare_bundle(cfg, design)
    width = bundle.train_x.shape[-1]
    tcfg = cfg.train_config()

    def build(hp, rng):
        return init_network(network_spec(cfg, width, bundle.train_y, hp), rng)

    best, trials = tune(cfg.hyper_space(), cfg.tuner_config(), bundle, build, tcfg)
    out = cfg.path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trials_csv(trials, out / "trials.csv")
    top = best_trial(trials, tcfg.objective)
    summary = {"best_config": best, "best_trial": top.trial_id, "objective": top.objective, "trials": len(trials)}
    write_json(out / "best_config.json", summary)
    return summary


def _transfer(cfg: ExperimentConfig, bundle, design: Design, baseline_scores):
    """Locked or unlocked transfer on the target test rows, plus the negative-transfer check."""
    t = cfg.transfer
    plan = plan_from_dict(
        {
            "source_model": t["source_model"],
            "mode": t.get("mode", "locked"),
            "lock_mask": t.get("lock_mask"),
            "feature_map": t.get("feature_map"),
        },
        cfg.base_dir,
    )
    if plan.source.spec.has_lstm != (bundle.test_x.ndim == 3):
        raise ConfigError("source network and target model disagree on LSTM input")
    history = None
    if plan.mode == "locked":
        scores = apply_locked(plan, bundle.test_x)
        net = plan.source
    else:
        tcfg = replace(cfg.train_config(), epochs=int(t.get("epochs", cfg.train_config().epochs)))
        net, history = fine_tune_unlocked(plan, bundle, tcfg)
        scores = predict(net, plan.map_features(bundle.test_x))
    tr = report(cfg, scores, bundle.test_y)
    base = report(cfg, baseline_scores, bundle.test_y)
    objective = "auc" if cfg.is_classification else "mae"
    if cfg.is_classification and (tr.auc is None or base.auc is None):
        raise DataError("target test rows hold a single class; AUC comparison undefined")
    return detect_negative_transfer(tr, base, objective), scores, net, history, plan


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute the configured task and write every artifact to ``output_dir``.

    Returns the metrics dictionary that was written to metrics.json.
    """
    if cfg.task == "synth":
        return run_synth(cfg)
    if cfg.task == "disaggregation":
        return run_disaggregation(cfg)
    design = load_design(cfg)
    bundle, scaler = prepare_bundle(cfg, design)
    fit = fit_model(cfg, bundle)
    out = cfg.path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    test_scores = predict(fit.network, bundle.test_x)
    result = {"task": cfg.task, "model": cfg.model, "transform": cfg.transform, "seed": cfg.seed}
    history = fit.history
    final_scores, final_net = test_scores, fit.network
    if cfg.transfer is not None:
        tr, scores, net, hist, plan = _transfer(cfg, bundle, design, test_scores)
        result.update(tr.target_metrics.to_dict())
        result["transfer_mode"] = plan.mode
        result["negative_transfer"] = tr.negative_transfer
        result["baseline"] = tr.baseline_metrics.to_dict()
        final_scores, final_net = scores, net
        if hist is not None:
            history = hist
        series_scores = predict(net, plan.map_features(_all_rows(design, scaler)))
    else:
        result.update(report(cfg, test_scores, bundle.test_y).to_dict())
        series_scores = predict(fit.network, _all_rows(design, scaler))
    result["sizes"] = {"train": len(bundle.train_index), "val": len(bundle.val_index), "test": len(bundle.test_index)}
    if fit.best_config is not None:
        result["best_config"] = fit.best_config

    write_json(out / "metrics.json", result)
    history.to_csv(out / "history.csv")
    test_dates = [design.dates[i] for i in bundle.test_index]
    write_predictions(out / "predictions.csv", test_dates, final_scores, bundle.test_y, cfg.is_classification)
    write_series(out / "series.csv", design, bundle, series_scores, cfg.is_classification)
    if fit.trials:
        write_trials_csv(fit.trials, out / "trials.csv")
    save_network(final_net, out / "model.json")
    write_json(out / "preprocess.json", _preprocess_record(cfg, design, scaler))
    return result


def run_transfer(cfg: ExperimentConfig) -> dict:
    if cfg.transfer is None:
        raise ConfigError("the transfer command needs a 'transfer' block in the config")
    return run_experiment(cfg)


def run_disaggregation(cfg: ExperimentConfig) -> dict:
    """Chow-Lin (model linear_baseline) or RIDE (model fnn) monthly estimates."""
    d = cfg.data
    for key in ("target", "indicators"):
        if key not in d:
            raise ConfigError(f"disaggregation data block needs {key!r}")
    target = load_csv(cfg.path(d["target"]), d.get("date_column", "date"), "quarterly")
    indicators = load_csv(cfg.path(d["indicators"]), d.get("date_column", "date"), "monthly")
    method = "chowlin" if cfg.model == "linear_baseline" else "ride"
    opts = cfg.disagg
    dates, estimate, info = disaggregate(
        target,
        indicators,
        method,
        mode=opts.get("mode", "flow"),
        rho=opts.get("rho", "estimate"),
        add_constant=bool(opts.get("add_constant", False)),
        transform=cfg.transform,
        seed=cfg.seed,
        epochs=int(cfg.train.get("epochs", 50)),
        target_column=d.get("target_column"),
    )
    out = cfg.path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_disagg_csv(out / "monthly.csv", dates, estimate, method)
    write_json(out / "metrics.json", info)
    return info


def _align_quarters(target: SeriesFrame, indicators: SeriesFrame):
    """Index of the first target quarter covered by the monthly indicators, and its count."""
    from .dataset import parse_period

    m0 = parse_period(indicators.time_index[0], "monthly")
    if m0 % 3 != 0:
        raise DataError(f"monthly indicators must start in the first month of a quarter, got {indicators.time_index[0]}")
    q0 = m0 // 3
    t0 = parse_period(target.time_index[0], "quarterly")
    if t0 != q0:
        raise DataError(
            f"target starts at {target.time_index[0]} but indicators start at {indicators.time_index[0]}"
        )
    return target.n_rows


def disaggregate(
    target: SeriesFrame,
    indicators: SeriesFrame,
    method: str,
    mode: str = "flow",
    rho="estimate",
    add_constant: bool = False,
    transform: str = "level",
    seed: int = 0,
    epochs: int = 50,
    target_column: str | None = None,
):
    """Monthly estimates over every indicator row; returns (dates, estimate, info dict).

    Indicator rows past the last complete target quarter are extrapolated.
    """
    if method not in ("chowlin", "ride"):
        raise ConfigError(f"unknown disaggregation method {method!r}")
    col = target_column or target.column_names[0]
    y_q = target.column(col)
    indicators = trim_missing(indicators)
    n = _align_quarters(target, indicators)
    if not np.isfinite(y_q).all():
        raise DataError("target contains missing values")
    if indicators.n_rows < 3 * n:
        raise DataError(f"{indicators.n_rows} monthly rows cannot cover {n} quarters")
    if method == "chowlin":
        if transform != "level":
            raise ConfigError("Chow-Lin works on levels")
        res = chow_lin(DisaggregationProblem(y_q, indicators.values, mode=mode, rho=rho, add_constant=add_constant))
        info = {
            "method": method,
            "mode": mode,
            "rho": res.rho_used,
            "loglik": res.loglik,
            "beta": [float(b) for b in res.beta],
            "quarters": n,
            "months": indicators.n_rows,
        }
        return list(indicators.time_index), res.y_m, info
    how = {"flow": "sum", "average": "mean"}.get(mode)
    if how is None:
        raise ConfigError("RIDE supports the flow (sum) and average (mean) aggregation modes")
    rcfg = RideConfig(
        transform=transform,
        aggregation=how,
        train=TrainConfig(epochs=epochs, learning_rate=1e-3, loss="mse", objective="min_val_loss", seed=seed),
    )
    model, _ = ride_train(rcfg, indicators.values, y_q)
    X = ride_inputs(indicators.values, transform)
    estimate = ride_extrapolate(model, X)
    dates = list(indicators.time_index)[indicators.n_rows - X.shape[0] :]
    info = {
        "method": method,
        "mode": mode,
        "transform": transform,
        "quarters": n,
        "months": len(dates),
        "final_train_loss": model.history.train_loss[-1],
        "final_val_loss": model.history.val_loss[-1],
    }
    return dates, estimate, info


def write_disagg_csv(path, dates, estimate, method: str) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "estimate", "method"])
        for d, v in zip(dates, estimate):
            w.writerow([d, _fmt(v), method])


# ------------------------------------------------------------------ synthetic data


def write_synthetic(kind: str, seed: int, n: int, out, extra: int = 0) -> list[Path]:
    """Write a synthetic dataset as CSV; returns the written paths.

    ``regime``: five index levels plus a ``recession`` column (use the
    first_log_diff transform). ``gap``: unemployment, capacity,
    recession and the ``gap`` target. ``disagg``: monthly indicators at
    ``out`` plus ``<stem>_quarterly.csv`` and ``<stem>_truth.csv``.
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if kind == "regime":
        growth, labels = generate_regime_series(seed, n)
        levels = growth_to_levels(growth)
        lab = np.concatenate([labels[:1], labels])
        frame = SeriesFrame(
            [*levels.column_names, "recession"], levels.time_index, "quarterly", np.column_stack([levels.values, lab])
        )
        write_csv(frame, out)
        return [out]
    if kind == "gap":
        feats, gap = generate_gap_series(seed, n)
        frame = SeriesFrame(
            [*feats.column_names, "gap"], feats.time_index, "quarterly", np.column_stack([feats.values, gap])
        )
        write_csv(frame, out)
        return [out]
    if kind == "disagg":
        data = generate_disaggregation_data(seed, n, extra=extra)
        q_path = out.with_name(out.stem + "_quarterly.csv")
        t_path = out.with_name(out.stem + "_truth.csv")
        write_csv(data.indicators, out)
        write_csv(data.quarterly, q_path)
        truth = SeriesFrame(["truth"], data.indicators.time_index, "monthly", data.truth[:, None])
        write_csv(truth, t_path)
        return [out, q_path, t_path]
    raise ConfigError(f"unknown synth kind {kind!r}")


def run_synth(cfg: ExperimentConfig) -> dict:
    s = cfg.synth
    kind = s.get("kind", "regime")
    n = int(s.get("n", 400))
    out = cfg.path(s.get("out", Path(cfg.output_dir) / f"synth_{kind}.csv"))
    paths = write_synthetic(kind, cfg.seed, n, out, int(s.get("extra", 0)))
    return {"kind": kind, "seed": cfg.seed, "n": n, "files": [str(p) for p in paths]}


# ------------------------------------------------------------------ eval


def evaluate_saved(run_dir, data_path, out_dir=None, refit_scaler: bool = False, date_column: str = "date") -> dict:
    """Score a saved run (model.json + preprocess.json) on a CSV with the same columns.

    By default the stored training scaler is reused; ``refit_scaler``
    standardizes the new data with its own statistics instead.
    """
    from .nn import load_network

    run_dir = Path(run_dir)
    try:
        pre = json.loads((run_dir / "preprocess.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {run_dir / 'preprocess.json'}: {exc}") from exc
    net = load_network(run_dir / "model.json")
    frame = load_csv(data_path, date_column, pre.get("frequency", "quarterly"))
    design = build_design(frame, pre["label"], pre["features"], pre["transform"], pre.get("sequence_length"))
    scaler = standardize_fit(_scale_rows(design.x)) if refit_scaler else ScalerParams.from_dict(pre["scaler"])
    scores = predict(net, standardize_apply(design.x, scaler))
    classification = pre["task"] == "cycle_classification"
    rep = metrics.classification_report(scores, design.y) if classification else metrics.regression_report(scores, design.y)
    result = {"task": pre["task"], "model": pre["model"], **rep.to_dict()}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "metrics.json", result)
        write_predictions(out / "predictions.csv", design.dates, scores, design.y, classification)
    return result
