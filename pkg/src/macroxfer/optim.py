"""Adam / AdaGrad updates, the minibatch training loop and evaluation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .dataset import SplitBundle
from .errors import ConfigError, DataError, TrainingError
from .nn import LOSSES, Network, backward, forward, loss, predict, regularization_penalty

OBJECTIVES = ("max_val_auc", "min_val_mse", "min_val_loss", "min_val_mae")


@dataclass
class OptimizerState:
    kind: str
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    G: list = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer(kind: str, params) -> OptimizerState:
    if kind == "adam":
        return OptimizerState("adam", m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])
    if kind == "adagrad":
        return OptimizerState("adagrad", G=[np.zeros_like(p) for p in params])
    raise ConfigError(f"unknown optimizer {kind!r}")


def _check_shapes(params, grads, slots):
    if len(params) != len(grads) or len(params) != len(slots):
        raise DataError("parameter/gradient/state counts differ")
    for p, g, s in zip(params, grads, slots):
        if p.shape != g.shape or p.shape != s.shape:
            raise DataError(f"shape mismatch {p.shape} / {g.shape} / {s.shape}")


def adam_step(state: OptimizerState, params, grads, lr: float):
    """In-place Adam update with bias-corrected moments; returns ``params``."""
    if state.kind != "adam":
        raise ConfigError("adam_step needs an adam state")
    _check_shapes(params, grads, state.m)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1**state.t
    c2 = 1 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def adagrad_step(state: OptimizerState, params, grads, lr: float):
    """In-place AdaGrad update G += g^2, p -= lr g / (sqrt(G) + eps); returns ``params``."""
    if state.kind != "adagrad":
        raise ConfigError("adagrad_step needs an adagrad state")
    _check_shapes(params, grads, state.G)
    state.t += 1
    for p, g, G in zip(params, grads, state.G):
        G += g * g
        p -= lr * g / (np.sqrt(G) + state.eps)
    return params


@dataclass
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 0
    loss: str = "bce"
    objective: str = "max_val_auc"
    optimizer: str = "adam"
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}")
        if self.optimizer not in ("adam", "adagrad"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")


def objective_is_max(objective: str) -> bool:
    return objective.startswith("max")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_objective: list = field(default_factory=list)

    def __len__(self):
        return len(self.train_loss)

    def extend(self, other: "TrainHistory") -> None:
        self.train_loss += other.train_loss
        self.val_loss += other.val_loss
        self.val_objective += other.val_objective

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss", "val_objective"])
            for i, row in enumerate(zip(self.train_loss, self.val_loss, self.val_objective), start=1):
                w.writerow([i, *(f"{v:.6f}" for v in row)])


def dataset_loss(network: Network, x, y, loss_kind: str) -> float:
    """Inference-mode mean loss plus the network's regularization penalty."""
    out, trace = forward(network, x)
    data = loss(loss_kind, np.atleast_1d(out), np.asarray(y, dtype=float), score=trace.pre[-1][:, 0])
    spec = network.spec
    return float(np.mean(data)) + regularization_penalty(spec.regularization, spec.lam, network)


def objective_value(network: Network, x, y, config: TrainConfig) -> float:
    """Validation objective; nan when it is undefined (e.g. AUC on one class)."""
    if config.objective == "max_val_auc":
        try:
            return metrics.auc(predict(network, x), y)
        except DataError:
            return float("nan")
    if config.objective == "min_val_mae":
        return metrics.mae(predict(network, x), y)
    if config.objective == "min_val_mse":
        return float(np.mean((predict(network, x) - np.asarray(y, dtype=float)) ** 2))
    return dataset_loss(network, x, y, config.loss)


class Trainer:
    """Resumable training state: a network, its optimizer state and an rng.

    The tuner keeps one Trainer per trial so that survivors continue from
    where they stopped instead of restarting.
    """

    def __init__(self, network: Network, config: TrainConfig, frozen=None):
        self.network = network.copy()
        self.config = config
        n_layers = len(self.network.layers)
        self.frozen = [False] * n_layers if frozen is None else [bool(f) for f in frozen]
        if len(self.frozen) != n_layers:
            raise ConfigError(f"lock mask has {len(self.frozen)} entries, network has {n_layers} layers")
        self.trainable = [k for k, (i, _, _) in enumerate(self.network.parameters()) if not self.frozen[i]]
        self.state = init_optimizer(config.optimizer, self._params())
        self.rng = np.random.default_rng(config.seed)
        self.epochs_done = 0
        self.history = TrainHistory()

    def _params(self):
        allp = self.network.parameters()
        return [allp[k][2] for k in self.trainable]

    def run(self, bundle: SplitBundle, epochs: int) -> TrainHistory:
        cfg = self.config
        x, y = bundle.train_x, np.asarray(bundle.train_y, dtype=float)
        if len(x) == 0 or len(bundle.val_x) == 0:
            raise DataError("training needs nonempty train and validation parts")
        if not self.trainable:
            raise ConfigError("every layer is frozen; nothing to train")
        step = adam_step if cfg.optimizer == "adam" else adagrad_step
        hist = TrainHistory()
        n = len(x)
        for _ in range(epochs):
            epoch = self.epochs_done + 1
            order = self.rng.permutation(n) if cfg.shuffle else np.arange(n)
            for b, start in enumerate(range(0, n, cfg.batch_size)):
                idx = order[start : start + cfg.batch_size]
                try:
                    _, trace = forward(self.network, x[idx], train=True, rng=self.rng)
                except TrainingError as exc:
                    raise TrainingError(f"epoch {epoch}, batch {b}: {exc}") from None
                grads = backward(self.network, trace, cfg.loss, y[idx])
                g = [grads[k] for k in self.trainable]
                if not all(np.isfinite(gi).all() for gi in g):
                    raise TrainingError(f"epoch {epoch}, batch {b}: non-finite gradient")
                step(self.state, self._params(), g, cfg.learning_rate)
            self.epochs_done = epoch
            try:
                tl = dataset_loss(self.network, x, y, cfg.loss)
                vl = dataset_loss(self.network, bundle.val_x, bundle.val_y, cfg.loss)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}: {exc}") from None
            if not (np.isfinite(tl) and np.isfinite(vl)):
                raise TrainingError(f"epoch {epoch}: non-finite loss")
            hist.train_loss.append(tl)
            hist.val_loss.append(vl)
            hist.val_objective.append(objective_value(self.network, bundle.val_x, bundle.val_y, cfg))
        self.history.extend(hist)
        return hist


def train(network: Network, bundle: SplitBundle, config: TrainConfig, frozen=None):
    """Minibatch training of a copy of ``network``; returns (trained copy, history).

    ``frozen`` is an optional per-layer mask; frozen layers keep their
    parameters bit-identical. With ``config.shuffle`` the row order is
    re-permuted every epoch, otherwise batches follow time order.
    """
    trainer = Trainer(network, config, frozen)
    if config.epochs:
        trainer.run(bundle, config.epochs)
    return trainer.network, trainer.history


def evaluate(network: Network, features, labels, task: str = "classification", threshold: float = 0.5):
    """Inference-mode predictions scored with the metrics module."""
    scores = predict(network, features)
    if task == "classification":
        return metrics.classification_report(scores, labels, threshold)
    if task == "regression":
        return metrics.regression_report(scores, labels)
    raise ConfigError(f"unknown task {task!r}")
