"""Locked / unlocked transfer of a trained source network to a target domain."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import ScalerParams, SplitBundle, standardize_apply
from .errors import ConfigError, DataError
from .metrics import MetricReport
from .nn import DenseLayer, Network, load_network, predict
from .optim import TrainConfig, train

MODES = ("locked", "unlocked")


def copy_network(source: Network) -> Network:
    """Independent, parameter-identical copy."""
    return source.copy()


def default_lock_mask(network: Network) -> list[bool]:
    """Freeze everything except the last hidden dense layer and the output layer."""
    mask = [True] * len(network.layers)
    mask[-1] = False
    if network.spec.depth > 0 and isinstance(network.layers[-2], DenseLayer):
        mask[-2] = False
    return mask


@dataclass
class TransferPlan:
    """A source network plus how it is applied to the target.

    ``feature_map[i]`` is the target column feeding source input slot ``i``.
    ``lock_mask[k]`` is True when layer ``k`` is frozen.
    """

    source: Network
    mode: str = "locked"
    lock_mask: list | None = None
    feature_map: list | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown transfer mode {self.mode!r}")
        n_layers = len(self.source.layers)
        if self.lock_mask is None:
            self.lock_mask = [True] * n_layers if self.mode == "locked" else default_lock_mask(self.source)
        self.lock_mask = [bool(b) for b in self.lock_mask]
        if len(self.lock_mask) != n_layers:
            raise ConfigError(f"lock_mask has {len(self.lock_mask)} entries for {n_layers} layers")
        if self.mode == "locked" and not all(self.lock_mask):
            raise ConfigError("locked mode requires every layer frozen")
        if self.mode == "unlocked" and all(self.lock_mask):
            raise ConfigError("unlocked mode needs at least one unfrozen layer")
        width = self.source.spec.input_width
        if self.feature_map is None:
            self.feature_map = list(range(width))
        self.feature_map = [int(i) for i in self.feature_map]
        if len(self.feature_map) != width or len(set(self.feature_map)) != width or min(self.feature_map) < 0:
            raise ConfigError(f"feature_map must assign {width} distinct target columns to the source inputs")

    def map_features(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.shape[-1] <= max(self.feature_map):
            raise DataError(f"target data has {x.shape[-1]} columns; feature_map needs column {max(self.feature_map)}")
        return x[..., self.feature_map]


def apply_locked(plan: TransferPlan, target_features, scaler: ScalerParams | None = None) -> np.ndarray:
    """Inference on target data: optional target-side standardization, column mapping, forward pass."""
    if plan.mode != "locked":
        raise ConfigError("apply_locked needs a locked plan")
    x = np.asarray(target_features, dtype=float)
    if scaler is not None:
        x = standardize_apply(x, scaler)
    return predict(plan.source, plan.map_features(x))


def _mapped_bundle(plan: TransferPlan, bundle: SplitBundle) -> SplitBundle:
    return replace(
        bundle,
        train_x=plan.map_features(bundle.train_x),
        val_x=plan.map_features(bundle.val_x),
        test_x=plan.map_features(bundle.test_x),
    )


def fine_tune_unlocked(plan: TransferPlan, target_bundle: SplitBundle, config: TrainConfig):
    """Retrain the unfrozen layers of a copy of the source on target data only.

    ``target_bundle`` holds target-standardized features in target column
    order. Returns (network, history); the source network is untouched.
    """
    if plan.mode != "unlocked":
        raise ConfigError("fine_tune_unlocked needs an unlocked plan")
    return train(copy_network(plan.source), _mapped_bundle(plan, target_bundle), config, frozen=plan.lock_mask)


@dataclass
class TransferReport:
    target_metrics: MetricReport
    baseline_metrics: MetricReport
    objective: str
    negative_transfer: bool

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "negative_transfer": self.negative_transfer,
            "transfer": self.target_metrics.to_dict(),
            "baseline": self.baseline_metrics.to_dict(),
        }


def _objective(report: MetricReport, objective: str) -> float:
    value = getattr(report, objective)
    if value is None:
        raise DataError(f"metric report has no {objective}")
    return float(value)


def detect_negative_transfer(transfer: MetricReport, baseline: MetricReport, objective: str = "auc") -> TransferReport:
    """Flag transfer whose objective is strictly worse than the target-only baseline.

    Higher is better for ``auc``; lower is better for ``mae``.
    """
    if objective not in ("auc", "mae"):
        raise ConfigError(f"unknown objective {objective!r}")
    if transfer.n != baseline.n:
        raise DataError(f"metrics computed on different test sets ({transfer.n} vs {baseline.n} rows)")
    t, b = _objective(transfer, objective), _objective(baseline, objective)
    worse = t < b if objective == "auc" else t > b
    return TransferReport(transfer, baseline, objective, bool(worse))


def plan_to_dict(plan: TransferPlan, source_path) -> dict:
    return {
        "source_model": str(source_path),
        "mode": plan.mode,
        "lock_mask": list(plan.lock_mask),
        "feature_map": list(plan.feature_map),
    }


def save_plan(plan: TransferPlan, source_path, path) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan, source_path), indent=2) + "\n", encoding="utf-8")


def plan_from_dict(d: dict, base_dir=".") -> TransferPlan:
    src = Path(d["source_model"])
    if not src.is_absolute():
        src = Path(base_dir) / src
    return TransferPlan(load_network(src), d.get("mode", "locked"), d.get("lock_mask"), d.get("feature_map"))


def load_plan(path) -> TransferPlan:
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read transfer plan {path}: {exc}") from exc
    return plan_from_dict(d, path.parent)
