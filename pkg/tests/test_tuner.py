import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macroxfer.dataset import split
from macroxfer.errors import ConfigError, DataError, TrainingError
from macroxfer.nn import NetworkSpec, init_network
from macroxfer.optim import TrainConfig
from macroxfer.tuner import (
    HyperSpace,
    Trial,
    TunerConfig,
    best_trial,
    hyperband_schedule,
    sample_config,
    schedule_total_epochs,
    tune,
    write_trials_csv,
)
from oracles import hyperband_budget

SMALL = HyperSpace(
    dense_depth=(1, 2),
    dense_units=(4, 8),
    lstm_units=(0,),
    lam=(0.0,),
    learning_rate=(1e-3, 1e-2),
    activation=("relu", "tanh"),
)


def toy_bundle(seed=0, n=90):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 2))
    y = (x[:, 0] - x[:, 1] + 0.5 * rng.normal(size=n) > 0).astype(float)
    return split(x, y, shuffle=True, seed=seed)


def factory(config, rng):
    spec = NetworkSpec(
        input_width=2,
        depth=config["dense_depth"],
        units=config["dense_units"],
        activation=config["activation"],
        dropout=0.0,
    )
    return init_network(spec, rng)


# ---------------------------------------------------------------- grid


def test_default_grid():
    s = HyperSpace()
    assert s.dense_units == tuple(range(16, 257, 16))
    assert s.lam == (1e-4, 1e-3, 1e-2) and s.learning_rate == (1e-4, 1e-3, 1e-2)
    assert s.size() == 4 * 16 * 16 * 3 * 3 * 3


def test_samples_lie_on_grid():
    space = HyperSpace()
    rng = np.random.default_rng(0)
    seen = {n: set() for n in space.names()}
    for _ in range(10_000):
        c = sample_config(space, rng)
        for n in space.names():
            assert c[n] in getattr(space, n)
            seen[n].add(c[n])
    assert all(v % 16 == 0 for v in seen["dense_units"])
    # uniform draws of 10,000 visit every grid value
    assert all(seen[n] == set(getattr(space, n)) for n in space.names())


def test_sampling_deterministic():
    a = [sample_config(HyperSpace(), np.random.default_rng(7)) for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_space_from_dict():
    s = HyperSpace.from_dict({"dense_depth": [2], "activation": ["tanh"]})
    assert s.dense_depth == (2,) and s.activation == ("tanh",)
    with pytest.raises(ConfigError):
        HyperSpace.from_dict({"dropout": [0.1]})


# ---------------------------------------------------------------- schedule


def test_schedule_r9():
    b = hyperband_schedule(9, 3)
    assert [x.s for x in b] == [2, 1, 0]
    assert [(r.n_configs, r.epochs) for r in b[0].rungs] == [(9, 1), (3, 3), (1, 9)]
    assert [(r.n_configs, r.epochs) for r in b[1].rungs] == [(5, 3), (1, 9)]
    assert [(r.n_configs, r.epochs) for r in b[2].rungs] == [(3, 9)]
    assert [x.total_epochs() for x in b] == [21, 21, 27]
    assert schedule_total_epochs(b) == 69


def test_schedule_degenerate():
    b = hyperband_schedule(1, 3)
    assert len(b) == 1 and b[0].n == 1 and b[0].r == 1
    assert schedule_total_epochs(b) == 1


def test_schedule_defaults_r10():
    b = hyperband_schedule(10, 3)
    assert [x.total_epochs() for x in b] == [22, 22, 30]


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 200), st.integers(2, 5))
def test_schedule_matches_oracle_and_bound(R, eta):
    b = hyperband_schedule(R, eta)
    assert [x.total_epochs() for x in b] == hyperband_budget(R, eta)
    s_max = b[0].s
    for x in b:
        assert x.total_epochs() <= (s_max + 1) * R
        counts = [r.n_configs for r in x.rungs]
        assert all(c2 == c1 // eta for c1, c2 in zip(counts, counts[1:]))


def test_schedule_errors():
    with pytest.raises(ConfigError):
        hyperband_schedule(0, 3)
    with pytest.raises(ConfigError):
        TunerConfig(factor=1)


# ---------------------------------------------------------------- tune


def run_small(seed=0, R=9, space=SMALL, build=factory, bundle=None):
    cfg = TunerConfig(max_epochs=R, factor=3, objective="max_val_auc", seed=seed)
    return tune(space, cfg, bundle or toy_bundle(), build, TrainConfig(batch_size=16))


def test_epochs_consumed_equal_schedule():
    best, trials = run_small()
    assert sum(t.epochs_trained for t in trials) == 69
    assert len(trials) == sum(r.n_configs for b in hyperband_schedule(9, 3) for r in b.rungs)


def test_argbest_contract():
    best, trials = run_small()
    top = max(t.objective for t in trials)
    winner = best_trial(trials, "max_val_auc")
    assert winner.objective == top and best == winner.config
    ties = [t for t in trials if t.objective == top]
    assert winner.trial_id == min(t.trial_id for t in ties)


def test_minimization_objective():
    cfg = TunerConfig(max_epochs=3, objective="min_val_loss", seed=1)
    best, trials = tune(SMALL, cfg, toy_bundle(), factory, TrainConfig())
    assert best_trial(trials, "min_val_loss").objective == min(t.objective for t in trials)


def test_survivors_are_the_best_of_each_rung():
    _, trials = run_small()
    for s in (2, 1):
        rung0 = [t for t in trials if t.bracket == s and t.rung == 0]
        rung1 = [t for t in trials if t.bracket == s and t.rung == 1]
        ranked = sorted(rung0, key=lambda t: (-t.objective, t.trial_id))
        assert [t.config_index for t in rung1] == [t.config_index for t in ranked[: len(rung1)]]


def test_single_point_space():
    space = HyperSpace(dense_depth=(2,), dense_units=(8,), lstm_units=(0,), lam=(0.0,), learning_rate=(1e-2,), activation=("tanh",))
    best, _ = run_small(space=space, R=3)
    assert best == {"dense_depth": 2, "dense_units": 8, "lstm_units": 0, "lam": 0.0, "learning_rate": 1e-2, "activation": "tanh"}


def test_tune_deterministic():
    a = run_small(seed=4)[1]
    b = run_small(seed=4)[1]
    assert [(t.config, t.objective, t.epochs) for t in a] == [(t.config, t.objective, t.epochs) for t in b]


def test_threads_do_not_change_results(monkeypatch):
    base = run_small(seed=2, R=3)[1]
    monkeypatch.setenv("MACROXFER_THREADS", "3")
    threaded = run_small(seed=2, R=3)[1]
    assert [(t.config, t.objective) for t in base] == [(t.config, t.objective) for t in threaded]


def test_failed_trials_rank_last():
    def fragile(config, rng):
        if config["activation"] == "tanh":
            raise ConfigError("tanh not allowed here")
        return factory(config, rng)

    best, trials = run_small(build=fragile)
    failed = [t for t in trials if t.failed]
    assert failed and all(np.isnan(t.objective) for t in failed)
    assert best["activation"] == "relu"
    for s in (2, 1):
        rung1 = [t for t in trials if t.bracket == s and t.rung == 1]
        rung0 = [t for t in trials if t.bracket == s and t.rung == 0]
        healthy = sum(not t.failed for t in rung0)
        assert sum(t.failed for t in rung1) == max(0, len(rung1) - healthy)


def test_all_trials_fail():
    def broken(config, rng):
        raise ConfigError("no network")

    with pytest.raises(TrainingError, match="trials failed"):
        run_small(build=broken, R=3)


def test_tune_needs_validation_rows():
    b = toy_bundle()
    b.val_x = b.val_x[:0]
    with pytest.raises(DataError):
        run_small(bundle=b)


def test_single_class_validation_rejected():
    b = toy_bundle()
    b.val_y = np.zeros_like(b.val_y)
    with pytest.raises(DataError, match="single class"):
        run_small(bundle=b)


def test_trials_csv(tmp_path):
    trials = [
        Trial(0, 2, 0, 0, {"dense_depth": 1, "dense_units": 16, "lstm_units": 0, "lam": 1e-3, "learning_rate": 1e-2, "activation": "relu"}, 1, 1, 0.75),
        Trial(1, 2, 0, 1, {"dense_depth": 2, "dense_units": 32, "lstm_units": 0, "lam": 1e-3, "learning_rate": 1e-3, "activation": "tanh"}, 1, 1, float("nan"), True),
    ]
    write_trials_csv(trials, tmp_path / "t.csv")
    rows = list(csv.reader((tmp_path / "t.csv").open()))
    assert rows[0] == ["trial", "bracket", "rung", "dense_depth", "dense_units", "lstm_units", "lam", "learning_rate", "activation", "epochs", "objective", "failed"]
    assert rows[1] == ["0", "2", "0", "1", "16", "0", "0.001", "0.01", "relu", "1", "0.750000", "0"]
    assert rows[2][-2:] == ["", "1"]
