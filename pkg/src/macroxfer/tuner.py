"""Hyperband search (successive halving over brackets) on a discrete grid.

Resource is counted in training epochs. Survivors of a rung resume training
from their current state, so a configuration promoted to a rung with budget
``e`` has consumed exactly ``e`` epochs in total.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .dataset import SplitBundle
from .errors import ConfigError, DataError, TrainingError
from .nn import Network
from .optim import TrainConfig, Trainer, objective_is_max


@dataclass
class HyperSpace:
    dense_depth: tuple = (1, 2, 3, 4)
    dense_units: tuple = tuple(range(16, 257, 16))
    lstm_units: tuple = tuple(range(16, 257, 16))
    lam: tuple = (1e-4, 1e-3, 1e-2)
    learning_rate: tuple = (1e-4, 1e-3, 1e-2)
    activation: tuple = ("relu", "tanh", "sigmoid")

    def names(self) -> list[str]:
        return ["dense_depth", "dense_units", "lstm_units", "lam", "learning_rate", "activation"]

    def size(self) -> int:
        return math.prod(len(getattr(self, n)) for n in self.names())

    @classmethod
    def from_dict(cls, d: dict) -> "HyperSpace":
        unknown = set(d) - set(cls().names())
        if unknown:
            raise ConfigError(f"unknown hyperparameter(s) {sorted(unknown)}")
        return cls(**{k: tuple(v) for k, v in d.items()})


def sample_config(space: HyperSpace, rng) -> dict:
    """Uniform draw from the grid (each axis independently uniform)."""
    out = {}
    for name in space.names():
        values = getattr(space, name)
        if not values:
            raise ConfigError(f"empty grid for {name}")
        v = values[int(rng.integers(len(values)))]
        out[name] = v.item() if isinstance(v, np.generic) else v
    return out


@dataclass
class TunerConfig:
    max_epochs: int = 10
    factor: int = 3
    objective: str = "max_val_auc"
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigError("max_epochs (R) must be >= 1")
        if self.factor < 2:
            raise ConfigError("factor (eta) must be >= 2")


@dataclass(frozen=True)
class Rung:
    n_configs: int
    resource: float
    epochs: int


@dataclass(frozen=True)
class Bracket:
    s: int
    n: int
    r: float
    rungs: tuple

    def total_epochs(self) -> int:
        total, prev = 0, 0
        for rung in self.rungs:
            total += rung.n_configs * (rung.epochs - prev)
            prev = rung.epochs
        return total


def _ilog(R: int, eta: int) -> int:
    s = 0
    while eta ** (s + 1) <= R:
        s += 1
    return s


def hyperband_schedule(R: int, eta: int) -> list[Bracket]:
    """Brackets s = s_max..0 with n = ceil((s_max+1) eta^s / (s+1)) and r = R eta^-s.

    Rung i keeps floor(n_{i-1} / eta) configurations and trains them to
    round(r eta^i) cumulative epochs (at least 1).
    """
    if R < 1 or eta < 2:
        raise ConfigError("need R >= 1 and eta >= 2")
    s_max = _ilog(R, eta)
    brackets = []
    for s in range(s_max, -1, -1):
        n = -(-((s_max + 1) * eta**s) // (s + 1))
        r = R / eta**s
        rungs = []
        count = n
        for i in range(s + 1):
            if count < 1:
                break
            resource = r * eta**i
            rungs.append(Rung(count, resource, max(1, int(math.floor(resource + 0.5)))))
            count //= eta
        brackets.append(Bracket(s, n, r, tuple(rungs)))
    return brackets


def schedule_total_epochs(schedule: list[Bracket]) -> int:
    return sum(b.total_epochs() for b in schedule)


@dataclass
class Trial:
    trial_id: int
    bracket: int
    rung: int
    config_index: int
    config: dict
    epochs: int
    epochs_trained: int
    objective: float
    failed: bool = False
    message: str = ""


def _rank_key(trial: Trial, maximize: bool):
    ok = np.isfinite(trial.objective)
    value = trial.objective if ok else 0.0
    return (0 if ok else 1, -value if maximize else value, trial.trial_id)


def _threads(cfg: TunerConfig) -> int:
    if cfg.threads is not None:
        return max(1, cfg.threads)
    try:
        return max(1, int(os.environ.get("MACROXFER_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class _Slot:
    index: int
    config: dict
    trainer: Trainer | None
    failed: bool = False
    message: str = ""


def tune(
    space: HyperSpace,
    tuner_config: TunerConfig,
    bundle: SplitBundle,
    build_network: Callable[[dict, np.random.Generator], Network],
    train_config: TrainConfig,
):
    """Run Hyperband; returns (best configuration, list of every Trial).

    ``build_network(config, rng)`` creates a fresh network for a sampled
    configuration; the configuration's learning rate overrides
    ``train_config.learning_rate``. Only the validation split is used.
    """
    if len(bundle.train_x) == 0 or len(bundle.val_x) == 0:
        raise DataError("tuning needs nonempty train and validation parts")
    if tuner_config.objective == "max_val_auc" and np.unique(bundle.val_y).size < 2:
        raise DataError("validation rows hold a single class, so the AUC objective is undefined")
    maximize = objective_is_max(tuner_config.objective)
    schedule = hyperband_schedule(tuner_config.max_epochs, tuner_config.factor)
    sampler = np.random.default_rng(tuner_config.seed)
    trials: list[Trial] = []
    workers = _threads(tuner_config)

    def advance(slot: _Slot, target: int):
        if slot.failed:
            return 0
        todo = target - slot.trainer.epochs_done
        try:
            slot.trainer.run(bundle, todo)
        except TrainingError as exc:
            slot.failed, slot.message = True, str(exc)
        return todo

    for bracket in schedule:
        slots = []
        for j in range(bracket.n):
            config = sample_config(space, sampler)
            seeds = np.random.SeedSequence([tuner_config.seed, bracket.s, j]).generate_state(2)
            cfg = replace(
                train_config,
                learning_rate=config["learning_rate"],
                objective=tuner_config.objective,
                seed=int(seeds[1]),
            )
            try:
                net = build_network(config, np.random.default_rng(int(seeds[0])))
                slots.append(_Slot(j, config, Trainer(net, cfg)))
            except (ConfigError, DataError) as exc:
                slots.append(_Slot(j, config, None, failed=True, message=str(exc)))

        active = slots
        for ri, rung in enumerate(bracket.rungs):
            active = active[: rung.n_configs]
            if workers > 1 and len(active) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    spent = list(pool.map(lambda sl: advance(sl, rung.epochs), active))
            else:
                spent = [advance(sl, rung.epochs) for sl in active]
            rung_trials = []
            for slot, used in zip(active, spent):
                if slot.failed:
                    obj = float("nan")
                else:
                    obj = float(slot.trainer.history.val_objective[-1])
                t = Trial(
                    trial_id=len(trials),
                    bracket=bracket.s,
                    rung=ri,
                    config_index=slot.index,
                    config=dict(slot.config),
                    epochs=rung.epochs,
                    epochs_trained=used,
                    objective=obj,
                    failed=slot.failed,
                    message=slot.message,
                )
                trials.append(t)
                rung_trials.append((t, slot))
            rung_trials.sort(key=lambda ts: _rank_key(ts[0], maximize))
            active = [sl for _, sl in rung_trials]

    finite = [t for t in trials if np.isfinite(t.objective)]
    if not finite:
        detail = "; ".join(f"#{t.trial_id}: {t.message or 'undefined objective'}" for t in trials[:10])
        raise TrainingError(f"all {len(trials)} trials failed ({detail})")
    return dict(best_trial(trials, tuner_config.objective).config), trials


def best_trial(trials: list[Trial], objective: str) -> Trial:
    """Best finite objective over all trials; ties go to the lower trial id."""
    maximize = objective_is_max(objective)
    finite = [t for t in trials if np.isfinite(t.objective)]
    if not finite:
        raise TrainingError("no trial has a finite objective")
    return min(finite, key=lambda t: (-t.objective if maximize else t.objective, t.trial_id))


def write_trials_csv(trials: list[Trial], path) -> None:
    names = HyperSpace().names()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "bracket", "rung", *names, "epochs", "objective", "failed"])
        for t in trials:
            cfg = [t.config.get(n, "") for n in names]
            cfg = [f"{v:g}" if isinstance(v, float) else v for v in cfg]
            obj = f"{t.objective:.6f}" if np.isfinite(t.objective) else ""
            w.writerow([t.trial_id, t.bracket, t.rung, *cfg, t.epochs, obj, int(t.failed)])
