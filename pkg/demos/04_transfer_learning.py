"""
Transferring a recession model to another economy
==================================================

A network trained on one synthetic economy is applied to a second one,
first as is (locked) and then with its top layers retrained (unlocked).
Each variant is compared to a model trained only on the target data.
"""

from macroxfer.dataset import split, standardize_apply, standardize_fit
from macroxfer.metrics import classification_report
from macroxfer.nn import NetworkSpec, init_network, predict
from macroxfer.optim import TrainConfig, train
from macroxfer.synthetic import generate_regime_series
from macroxfer.transfer import TransferPlan, apply_locked, detect_negative_transfer, fine_tune_unlocked


def economy(seed, n):
    """Standardized split; the scaler sees only the training rows."""
    frame, labels = generate_regime_series(seed, n)
    raw = split(frame.values, labels, shuffle=True, seed=seed)
    scaler = standardize_fit(raw.train_x)
    # the same seed gives the same permutation, so the parts line up
    return split(standardize_apply(frame.values, scaler), labels, shuffle=True, seed=seed)


source = economy(1, 600)
target = economy(2, 120)
config = TrainConfig(epochs=60, learning_rate=1e-3)

spec = NetworkSpec(input_width=5, depth=2, units=32, activation="relu")
source_net, _ = train(init_network(spec, 0), source, config)
baseline_net, _ = train(init_network(spec, 0), target, config)
baseline = classification_report(predict(baseline_net, target.test_x), target.test_y)
print(f"target-only baseline AUC {baseline.auc:.3f} on {baseline.n} test quarters")

# Locked: every layer frozen; the target is standardized with its own statistics.
locked = apply_locked(TransferPlan(source_net), target.test_x)
report = detect_negative_transfer(classification_report(locked, target.test_y), baseline)
print(f"locked transfer AUC {report.target_metrics.auc:.3f}, negative transfer: {report.negative_transfer}")

# Unlocked: the default mask retrains the last hidden layer and the output layer.
plan = TransferPlan(source_net, mode="unlocked")
print("lock mask (True = frozen):", plan.lock_mask)
tuned, _ = fine_tune_unlocked(plan, target, config)
report = detect_negative_transfer(classification_report(predict(tuned, target.test_x), target.test_y), baseline)
print(f"unlocked transfer AUC {report.target_metrics.auc:.3f}, negative transfer: {report.negative_transfer}")
