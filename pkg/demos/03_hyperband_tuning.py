"""
Hyperband over a discrete grid
==============================

Prints the bracket schedule for a few budgets, then tunes a dense network
and lists the best trials.
"""

import numpy as np

from macroxfer.dataset import split
from macroxfer.nn import NetworkSpec, init_network
from macroxfer.optim import TrainConfig
from macroxfer.tuner import HyperSpace, TunerConfig, best_trial, hyperband_schedule, schedule_total_epochs, tune

# Each bracket starts n configurations at a small budget and keeps the best
# 1/eta of them at every rung.
for R in (9, 27):
    schedule = hyperband_schedule(R, 3)
    print(f"R={R}, eta=3: {schedule_total_epochs(schedule)} epochs in total")
    for b in schedule:
        rungs = ", ".join(f"{r.n_configs} x {r.epochs}ep" for r in b.rungs)
        print(f"  bracket s={b.s}: {rungs}")

rng = np.random.default_rng(3)
x = rng.normal(size=(300, 4))
y = (np.tanh(x[:, 0] * x[:, 1]) + 0.3 * rng.normal(size=300) > 0).astype(float)
bundle = split(x, y, shuffle=True, seed=0)

space = HyperSpace(dense_depth=(1, 2), dense_units=(8, 32), lstm_units=(0,), activation=("relu", "tanh"))


def build(config, generator):
    spec = NetworkSpec(
        input_width=4,
        depth=config["dense_depth"],
        units=config["dense_units"],
        activation=config["activation"],
        regularization="l2",
        lam=config["lam"],
    )
    return init_network(spec, generator)


best, trials = tune(space, TunerConfig(max_epochs=27, factor=3, seed=0), bundle, build, TrainConfig())
print(f"\n{len(trials)} trial records, {sum(t.epochs_trained for t in trials)} epochs trained")
top = sorted((t for t in trials if np.isfinite(t.objective)), key=lambda t: -t.objective)[:5]
for t in top:
    print(f"  val AUC {t.objective:.3f} after {t.epochs:2d} epochs: {t.config}")
print("best:", best, "(trial", best_trial(trials, "max_val_auc").trial_id, ")")
