"""Small dense and LSTM networks in numpy with hand-written back-propagation.

A network is an optional LSTM layer, 0-4 hidden dense layers, a dropout layer
and a single-unit output layer. All forward/backward functions are batched:
dense inputs are ``(batch, features)``, LSTM inputs ``(batch, steps, features)``.
"""

from __future__ import annotations

import copy as _copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DataError, TrainingError

ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")
LOSSES = ("bce", "mse", "squared_hinge")
REGULARIZATIONS = ("none", "l1", "l2")
LSTM_CANDIDATES = ("sigmoid_as_printed", "tanh_conventional")
BCE_EPS = 1e-7

# forget gate, external input gate, candidate, output gate
LSTM_BLOCKS = ("f", "g", "c", "o")


def activation_apply(kind: str, x):
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "sigmoid":
        return expit(x)
    if kind == "identity":
        return np.asarray(x, dtype=float) * 1.0
    raise ConfigError(f"unknown activation {kind!r}")


def activation_derivative(kind: str, a, z=None):
    """Derivative of the activation at pre-activation ``a`` (``z`` = cached output)."""
    if z is None:
        z = activation_apply(kind, a)
    if kind == "relu":
        return (np.asarray(a) > 0).astype(float)
    if kind == "tanh":
        return 1.0 - z * z
    if kind == "sigmoid":
        return z * (1.0 - z)
    if kind == "identity":
        return np.ones_like(np.asarray(a, dtype=float))
    raise ConfigError(f"unknown activation {kind!r}")


@dataclass
class NetworkSpec:
    input_width: int
    depth: int = 1
    units: int = 16
    lstm_units: int = 0
    activation: str = "relu"
    dropout: float = 0.5
    lstm_dropout: float = 0.3
    output_activation: str = "sigmoid"
    output_bias: float = 0.0
    regularization: str = "none"
    lam: float = 0.0
    lstm_candidate: str = "sigmoid_as_printed"

    def __post_init__(self):
        if self.input_width < 1:
            raise ConfigError("input_width must be >= 1")
        if not 0 <= self.depth <= 4:
            raise ConfigError(f"dense depth must be 0..4, got {self.depth}")
        if self.depth > 0 and self.units < 1:
            raise ConfigError("units must be >= 1")
        if self.lstm_units < 0:
            raise ConfigError("lstm_units must be >= 0")
        for name in ("activation", "output_activation"):
            if getattr(self, name) not in ACTIVATIONS:
                raise ConfigError(f"unknown {name} {getattr(self, name)!r}")
        for name in ("dropout", "lstm_dropout"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if self.regularization not in REGULARIZATIONS:
            raise ConfigError(f"unknown regularization {self.regularization!r}")
        if self.lam < 0:
            raise ConfigError("regularization lambda must be >= 0")
        if self.lstm_candidate not in LSTM_CANDIDATES:
            raise ConfigError(f"unknown lstm_candidate {self.lstm_candidate!r}")

    @property
    def has_lstm(self) -> bool:
        return self.lstm_units > 0

    @property
    def has_hidden(self) -> bool:
        return self.has_lstm or self.depth > 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(**d)


@dataclass
class DenseLayer:
    weights: np.ndarray  # (units_out, units_in)
    bias: np.ndarray  # (units_out,)
    activation: str

    param_names = ("weights", "bias")
    penalized = ("weights",)


@dataclass
class LstmLayer:
    """Gate parameters: ``b_k`` (H,), ``U_k`` (H, input), ``W_k`` (H, H) for k in f, g, c, o."""

    params: dict
    candidate: str = "sigmoid_as_printed"

    param_names = tuple(f"{p}_{k}" for k in LSTM_BLOCKS for p in ("b", "U", "W"))
    penalized = tuple(f"{p}_{k}" for k in LSTM_BLOCKS for p in ("U", "W"))

    def __getattr__(self, name):
        params = self.__dict__.get("params")
        if params is not None and name in params:
            return params[name]
        raise AttributeError(name)

    @property
    def hidden_size(self) -> int:
        return self.params["b_f"].shape[0]

    @property
    def input_size(self) -> int:
        return self.params["U_f"].shape[1]


@dataclass
class LstmState:
    s: np.ndarray
    h: np.ndarray


def _get(layer, name):
    return layer.params[name] if isinstance(layer, LstmLayer) else getattr(layer, name)


def _set(layer, name, value):
    if isinstance(layer, LstmLayer):
        layer.params[name] = value
    else:
        setattr(layer, name, value)


@dataclass
class Network:
    spec: NetworkSpec
    layers: list  # [LstmLayer?] + hidden DenseLayers + output DenseLayer

    @property
    def lstm(self) -> LstmLayer | None:
        return self.layers[0] if isinstance(self.layers[0], LstmLayer) else None

    @property
    def dense_layers(self) -> list[DenseLayer]:
        return [l for l in self.layers if isinstance(l, DenseLayer)]

    def parameters(self):
        """(layer index, name, array) triples in a fixed order."""
        return [(i, name, _get(layer, name)) for i, layer in enumerate(self.layers) for name in layer.param_names]

    def set_parameters(self, arrays) -> None:
        for (i, name, _), arr in zip(self.parameters(), arrays):
            _set(self.layers[i], name, arr)

    def copy(self) -> "Network":
        return _copy.deepcopy(self)


def _glorot(rng, fan_out, fan_in):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_network(spec: NetworkSpec, rng=None) -> Network:
    """Glorot-uniform weights, zero biases, output bias from the spec."""
    rng = np.random.default_rng(rng)
    layers = []
    width = spec.input_width
    if spec.has_lstm:
        H = spec.lstm_units
        params = {}
        for k in LSTM_BLOCKS:
            params[f"b_{k}"] = np.zeros(H)
            params[f"U_{k}"] = _glorot(rng, H, width)
            params[f"W_{k}"] = _glorot(rng, H, H)
        layers.append(LstmLayer(params, spec.lstm_candidate))
        width = H
    for _ in range(spec.depth):
        layers.append(DenseLayer(_glorot(rng, spec.units, width), np.zeros(spec.units), spec.activation))
        width = spec.units
    layers.append(DenseLayer(_glorot(rng, 1, width), np.full(1, float(spec.output_bias)), spec.output_activation))
    return Network(spec, layers)


# ---------------------------------------------------------------- LSTM cell


def _candidate_act(candidate: str):
    return "sigmoid" if candidate == "sigmoid_as_printed" else "tanh"


def _gate_pre(layer: LstmLayer, k: str, x, h):
    return layer.params[f"b_{k}"] + x @ layer.params[f"U_{k}"].T + h @ layer.params[f"W_{k}"].T


def _lstm_cell(layer: LstmLayer, x, s_prev, h_prev):
    f = expit(_gate_pre(layer, "f", x, h_prev))
    g = expit(_gate_pre(layer, "g", x, h_prev))
    c = activation_apply(_candidate_act(layer.candidate), _gate_pre(layer, "c", x, h_prev))
    q = expit(_gate_pre(layer, "o", x, h_prev))
    s = f * s_prev + g * c
    tanh_s = np.tanh(s)
    h = tanh_s * q
    return {"x": x, "s_prev": s_prev, "h_prev": h_prev, "f": f, "g": g, "c": c, "q": q, "s": s, "tanh_s": tanh_s, "h": h}


def lstm_step(layer: LstmLayer, x, prev: LstmState) -> LstmState:
    """One LSTM step: forget/input/output gates, candidate and state update.

    The candidate uses a sigmoid unless the layer is configured with
    ``tanh_conventional``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != layer.input_size:
        raise DataError(f"LSTM input width {x.shape[-1]} != {layer.input_size}")
    cache = _lstm_cell(layer, x, np.asarray(prev.s, dtype=float), np.asarray(prev.h, dtype=float))
    return LstmState(cache["s"], cache["h"])


@dataclass
class LstmTrace:
    steps: list
    input_mask: np.ndarray | None = None


def lstm_forward(layer: LstmLayer, sequence, initial: LstmState | None = None, input_mask=None):
    """Run the cell over ``sequence`` (steps, features) or (batch, steps, features).

    Returns the final hidden output and a trace of every step.
    """
    seq = np.asarray(sequence, dtype=float)
    single = seq.ndim == 2
    if single:
        seq = seq[None]
    if seq.ndim != 3 or seq.shape[1] == 0:
        raise DataError("lstm_forward needs a nonempty sequence")
    if seq.shape[2] != layer.input_size:
        raise DataError(f"LSTM input width {seq.shape[2]} != {layer.input_size}")
    B, H = seq.shape[0], layer.hidden_size
    if initial is None:
        s, h = np.zeros((B, H)), np.zeros((B, H))
    else:
        s = np.broadcast_to(np.asarray(initial.s, dtype=float), (B, H)).copy()
        h = np.broadcast_to(np.asarray(initial.h, dtype=float), (B, H)).copy()
    steps = []
    for t in range(seq.shape[1]):
        x = seq[:, t, :]
        if input_mask is not None:
            x = x * input_mask
        cache = _lstm_cell(layer, x, s, h)
        s, h = cache["s"], cache["h"]
        steps.append(cache)
    trace = LstmTrace(steps, input_mask)
    return (h[0] if single else h), trace


# ------------------------------------------------------------ full network


@dataclass
class ForwardTrace:
    inputs: np.ndarray
    lstm: LstmTrace | None = None
    dense_inputs: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)
    dropout_mask: np.ndarray | None = None
    output: np.ndarray | None = None


def _dropout_mask(rng, shape, rate):
    return (rng.random(shape) >= rate) / (1.0 - rate)


def _check_finite(arr, index):
    if not np.isfinite(arr).all():
        raise TrainingError(f"non-finite activation in layer {index}")


def forward(network: Network, inputs, train: bool = False, rng=None):
    """Network output for a batch (or a single example) and the trace backward needs.

    In train mode inverted dropout is applied to the LSTM inputs and to the
    representation entering the output layer; in inference mode both are
    the identity and ``rng`` is unused.
    """
    spec = network.spec
    x = np.asarray(inputs, dtype=float)
    single = x.ndim == (2 if spec.has_lstm else 1)
    if single:
        x = x[None]
    if x.ndim != (3 if spec.has_lstm else 2):
        raise DataError(f"input has {x.ndim} dims; expected {3 if spec.has_lstm else 2} for this network")
    if x.shape[-1] != spec.input_width:
        raise DataError(f"input width {x.shape[-1]} != network input width {spec.input_width}")
    if train and rng is None:
        raise ValueError("train mode needs an rng for dropout")

    trace = ForwardTrace(inputs=x)
    z = x
    idx = 0
    if spec.has_lstm:
        mask = None
        if train and spec.lstm_dropout > 0:
            mask = _dropout_mask(rng, (x.shape[0], x.shape[2]), spec.lstm_dropout)
        z, trace.lstm = lstm_forward(network.layers[0], x, input_mask=mask)
        _check_finite(z, 0)
        idx = 1
    dense = network.layers[idx:]
    for j, layer in enumerate(dense):
        last = j == len(dense) - 1
        if last and spec.has_hidden and train and spec.dropout > 0:
            trace.dropout_mask = _dropout_mask(rng, z.shape, spec.dropout)
            z = z * trace.dropout_mask
        a = z @ layer.weights.T + layer.bias
        trace.dense_inputs.append(z)
        trace.pre.append(a)
        z = activation_apply(layer.activation, a)
        _check_finite(z, idx + j)
        trace.post.append(z)
    out = z[:, 0]
    trace.output = out
    return (float(out[0]) if single else out), trace


def predict(network: Network, inputs) -> np.ndarray:
    """Inference-mode outputs for a batch."""
    out, _ = forward(network, inputs, train=False)
    return np.atleast_1d(out)


# ---------------------------------------------------------------- losses


def loss(kind: str, prediction, target, score=None):
    """Per-example loss.

    ``bce`` clamps the probability to [1e-7, 1 - 1e-7]. ``squared_hinge``
    maps 0/1 targets to -1/+1 and uses ``score`` (the output pre-activation);
    when no score is given it is recovered as the logit of the prediction.
    """
    p = np.asarray(prediction, dtype=float)
    y = np.asarray(target, dtype=float)
    if kind == "bce":
        pc = np.clip(p, BCE_EPS, 1 - BCE_EPS)
        out = -(y * np.log(pc) + (1 - y) * np.log(1 - pc))
    elif kind == "mse":
        out = (p - y) ** 2
    elif kind == "squared_hinge":
        if score is None:
            pc = np.clip(p, BCE_EPS, 1 - BCE_EPS)
            score = np.log(pc) - np.log1p(-pc)
        sign = 2 * y - 1
        out = np.maximum(0.0, 1 - sign * np.asarray(score, dtype=float)) ** 2
    else:
        raise ConfigError(f"unknown loss {kind!r}")
    return float(out) if out.ndim == 0 else out


def _loss_grad_pre(kind, out_layer, a, z, y):
    """d(per-example loss)/d(output pre-activation)."""
    if kind == "bce":
        inside = (z > BCE_EPS) & (z < 1 - BCE_EPS)
        if out_layer.activation == "sigmoid":
            return np.where(inside, z - y, 0.0)
        dldp = np.where(inside, -(y / z) + (1 - y) / (1 - z), 0.0)
        return dldp * activation_derivative(out_layer.activation, a, z)
    if kind == "mse":
        return 2 * (z - y) * activation_derivative(out_layer.activation, a, z)
    if kind == "squared_hinge":
        sign = 2 * y - 1
        return -2 * sign * np.maximum(0.0, 1 - sign * a)
    raise ConfigError(f"unknown loss {kind!r}")


def regularization_penalty(kind: str, lam: float, network: Network) -> float:
    """lam * sum|w| (l1) or lam * sum w^2 (l2) over weight matrices; biases excluded."""
    if kind == "none" or lam == 0:
        return 0.0
    total = 0.0
    for layer in network.layers:
        for name in layer.penalized:
            w = _get(layer, name)
            total += np.abs(w).sum() if kind == "l1" else (w * w).sum()
    return float(lam * total)


def network_loss(network: Network, inputs, targets, loss_kind: str, train: bool = False, rng=None) -> float:
    """Mean data loss over the batch plus the spec's regularization penalty."""
    out, trace = forward(network, inputs, train=train, rng=rng)
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    data = loss(loss_kind, np.atleast_1d(out), y, score=trace.pre[-1][:, 0])
    spec = network.spec
    return float(np.mean(data)) + regularization_penalty(spec.regularization, spec.lam, network)


def backward(network: Network, trace: ForwardTrace, loss_kind: str, targets) -> list[np.ndarray]:
    """Gradients of :func:`network_loss` w.r.t. every parameter, ordered as ``network.parameters()``."""
    spec = network.spec
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    n_dense = len(network.layers) - (1 if spec.has_lstm else 0)
    if len(trace.pre) != n_dense or trace.output is None or trace.output.shape[0] != y.shape[0]:
        raise DataError("trace does not match this network / targets")
    B = y.shape[0]
    grads = {}
    offset = 1 if spec.has_lstm else 0
    dense = network.layers[offset:]

    out_layer = dense[-1]
    da = _loss_grad_pre(loss_kind, out_layer, trace.pre[-1][:, 0], trace.post[-1][:, 0], y)[:, None] / B
    dz = None
    for j in range(len(dense) - 1, -1, -1):
        layer = dense[j]
        if j < len(dense) - 1:
            da = dz * activation_derivative(layer.activation, trace.pre[j], trace.post[j])
        grads[(offset + j, "weights")] = da.T @ trace.dense_inputs[j]
        grads[(offset + j, "bias")] = da.sum(axis=0)
        dz = da @ layer.weights
        if j == len(dense) - 1 and trace.dropout_mask is not None:
            dz = dz * trace.dropout_mask

    if spec.has_lstm:
        grads.update(_lstm_backward(network.layers[0], trace.lstm, dz))

    if spec.regularization != "none" and spec.lam > 0:
        for i, layer in enumerate(network.layers):
            for name in layer.penalized:
                w = _get(layer, name)
                extra = spec.lam * np.sign(w) if spec.regularization == "l1" else 2 * spec.lam * w
                grads[(i, name)] = grads[(i, name)] + extra

    return [grads[(i, name)] for i, name, _ in network.parameters()]


def _lstm_backward(layer: LstmLayer, trace: LstmTrace, dh_last):
    """Back-propagation through time over the whole sequence."""
    cand = _candidate_act(layer.candidate)
    g = {name: np.zeros_like(layer.params[name]) for name in layer.param_names}
    dh = dh_last
    ds_next = np.zeros_like(dh)
    for st in reversed(trace.steps):
        ds = ds_next + dh * st["q"] * (1 - st["tanh_s"] ** 2)
        da = {
            "o": dh * st["tanh_s"] * st["q"] * (1 - st["q"]),
            "f": ds * st["s_prev"] * st["f"] * (1 - st["f"]),
            "g": ds * st["c"] * st["g"] * (1 - st["g"]),
            "c": ds * st["g"] * activation_derivative(cand, None, st["c"]),
        }
        ds_next = ds * st["f"]
        dh = np.zeros_like(dh)
        for k in LSTM_BLOCKS:
            g[f"b_{k}"] += da[k].sum(axis=0)
            g[f"U_{k}"] += da[k].T @ st["x"]
            g[f"W_{k}"] += da[k].T @ st["h_prev"]
            dh += da[k] @ layer.params[f"W_{k}"]
    return {(0, name): arr for name, arr in g.items()}


# ---------------------------------------------------------- serialization

FORMAT = "macroxfer.network/1"


def network_to_dict(network: Network) -> dict:
    layers = []
    for layer in network.layers:
        if isinstance(layer, LstmLayer):
            layers.append(
                {
                    "type": "lstm",
                    "candidate": layer.candidate,
                    "hidden_size": layer.hidden_size,
                    "input_size": layer.input_size,
                    "params": {
                        name: {"shape": list(layer.params[name].shape), "data": layer.params[name].ravel().tolist()}
                        for name in layer.param_names
                    },
                }
            )
        else:
            layers.append(
                {
                    "type": "dense",
                    "activation": layer.activation,
                    "shape": list(layer.weights.shape),
                    "weights": layer.weights.ravel().tolist(),
                    "bias": layer.bias.tolist(),
                }
            )
    return {"format": FORMAT, "spec": network.spec.to_dict(), "layers": layers}


def network_from_dict(d: dict) -> Network:
    if d.get("format") != FORMAT:
        raise DataError(f"not a serialized network (format={d.get('format')!r})")
    spec = NetworkSpec.from_dict(d["spec"])
    layers = []
    for item in d["layers"]:
        if item["type"] == "lstm":
            params = {
                name: np.asarray(p["data"], dtype=float).reshape(p["shape"]) for name, p in item["params"].items()
            }
            layers.append(LstmLayer(params, item["candidate"]))
        elif item["type"] == "dense":
            w = np.asarray(item["weights"], dtype=float).reshape(item["shape"])
            layers.append(DenseLayer(w, np.asarray(item["bias"], dtype=float), item["activation"]))
        else:
            raise DataError(f"unknown layer type {item['type']!r}")
    net = Network(spec, layers)
    reference = init_network(spec, 0)
    if [a.shape for _, _, a in net.parameters()] != [a.shape for _, _, a in reference.parameters()]:
        raise DataError("serialized layer shapes do not match the spec")
    return net


def dumps_network(network: Network) -> str:
    return json.dumps(network_to_dict(network), sort_keys=True)


def save_network(network: Network, path) -> None:
    Path(path).write_text(dumps_network(network) + "\n", encoding="utf-8")


def load_network(path) -> Network:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read network from {path}: {exc}") from exc
    return network_from_dict(d)
