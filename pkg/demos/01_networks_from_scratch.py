"""
Dense and LSTM networks from scratch
====================================

Builds a small dense network and an LSTM network, checks backpropagation
against central differences, and trains both optimizers on a toy problem.
"""

import numpy as np

from macroxfer.dataset import split
from macroxfer.nn import NetworkSpec, backward, forward, init_network, network_loss, predict
from macroxfer.optim import TrainConfig, evaluate, train

rng = np.random.default_rng(0)

# A dense network: two tanh hidden layers and a sigmoid output unit. The
# output bias starts at ln(pos/neg) so the untrained model predicts the base rate.
spec = NetworkSpec(input_width=3, depth=2, units=8, activation="tanh", output_bias=np.log(30 / 70))
net = init_network(spec, rng)
print("dense parameter shapes:", [(i, name, arr.shape) for i, name, arr in net.parameters()])

# Backpropagation versus central differences on one weight matrix.
x = rng.normal(size=(5, 3))
y = np.array([0, 1, 1, 0, 1.0])
_, trace = forward(net, x)
grads = backward(net, trace, "bce", y)
layer, name, weights = next(iter(net.parameters()))
h, numeric = 1e-6, np.zeros_like(weights)
for idx in np.ndindex(weights.shape):
    keep = weights[idx]
    weights[idx] = keep + h
    up = network_loss(net, x, y, "bce")
    weights[idx] = keep - h
    down = network_loss(net, x, y, "bce")
    weights[idx] = keep
    numeric[idx] = (up - down) / (2 * h)
print("max |analytic - numeric| on the first layer:", np.abs(grads[0] - numeric).max())

# The same check for an LSTM front end reading sequences of four steps.
lstm = init_network(NetworkSpec(input_width=3, depth=1, units=4, lstm_units=3), rng)
seq = rng.normal(size=(5, 4, 3))
_, trace = forward(lstm, seq)
print("LSTM gradient tensors:", len(backward(lstm, trace, "bce", y)))

# Adam and AdaGrad on a linearly separable toy set.
features = rng.normal(size=(400, 3))
labels = (features @ [1.0, -2.0, 0.5] > 0).astype(float)
bundle = split(features, labels, shuffle=True, seed=0)
for optimizer in ("adam", "adagrad"):
    model, history = train(net, bundle, TrainConfig(epochs=40, learning_rate=1e-2, optimizer=optimizer))
    report = evaluate(model, bundle.test_x, bundle.test_y)
    print(f"{optimizer:8s} final train loss {history.train_loss[-1]:.3f}  test AUC {report.auc:.3f}")

print("first five test probabilities:", np.round(predict(model, bundle.test_x[:5]), 3))
