"""Quarterly-to-monthly temporal disaggregation.

Two routes: the Chow-Lin GLS estimator with AR(1) monthly residuals, and
RIDE, a dense network mapping monthly indicators to the target.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .dataset import SeriesFrame, split, standardize_apply, standardize_fit
from .errors import ConfigError, DataError, RankDeficiencyError, TrainingError
from .nn import NetworkSpec, Network, init_network, predict
from .optim import TrainConfig, TrainHistory, train
from .tuner import HyperSpace, TunerConfig, tune

MODES = ("flow", "stock", "average")
RHO_GRID = np.round(np.arange(-49, 50) * 0.02, 2)
PIVOT_TOL = 1e-10


def build_aggregation(n: int, mode: str = "flow", per: int = 3) -> np.ndarray:
    """n x (per*n) matrix mapping months to quarters.

    ``flow`` sums the three months, ``stock`` takes the last month and
    ``average`` takes the mean (index-style series).
    """
    if n < 1:
        raise DataError("need at least one low-frequency period")
    C = np.zeros((n, per * n))
    for i in range(n):
        if mode == "flow":
            C[i, per * i : per * (i + 1)] = 1.0
        elif mode == "average":
            C[i, per * i : per * (i + 1)] = 1.0 / per
        elif mode == "stock":
            C[i, per * (i + 1) - 1] = 1.0
        else:
            raise ConfigError(f"unknown aggregation mode {mode!r}")
    return C


def ar1_covariance(rho: float, size: int) -> np.ndarray:
    """V[i, j] = rho^|i-j| (unit innovation-scale convention)."""
    if not abs(rho) < 1:
        raise DataError(f"AR(1) coefficient must satisfy |rho| < 1, got {rho}")
    lags = np.abs(np.subtract.outer(np.arange(size), np.arange(size)))
    if rho == 0:
        return (lags == 0).astype(float)
    return rho ** lags.astype(float)


@dataclass
class DisaggregationProblem:
    """Quarterly target ``y_q`` (n) and monthly indicators ``X_m`` (3n + k, p).

    Rows of ``X_m`` beyond 3n are extrapolation months. ``rho`` is a number
    in (-1, 1) or ``"estimate"``.
    """

    y_q: np.ndarray
    X_m: np.ndarray
    mode: str = "flow"
    rho: float | str = "estimate"
    add_constant: bool = False

    def __post_init__(self):
        self.y_q = np.asarray(self.y_q, dtype=float).ravel()
        X = np.asarray(self.X_m, dtype=float)
        self.X_m = X[:, None] if X.ndim == 1 else X
        n = self.y_q.size
        if n < 1:
            raise DataError("empty quarterly target")
        if self.X_m.shape[0] < 3 * n:
            raise DataError(f"{self.X_m.shape[0]} monthly rows cannot cover {n} quarters")
        if self.mode not in MODES:
            raise ConfigError(f"unknown aggregation mode {self.mode!r}")
        if not (np.isfinite(self.y_q).all() and np.isfinite(self.X_m).all()):
            raise DataError("disaggregation inputs must be finite")
        if isinstance(self.rho, str):
            if self.rho != "estimate":
                raise ConfigError(f"rho must be a number or 'estimate', got {self.rho!r}")
        elif not abs(self.rho) < 1:
            raise DataError(f"|rho| must be < 1, got {self.rho}")

    @property
    def n(self) -> int:
        return self.y_q.size

    def design(self) -> np.ndarray:
        if self.add_constant:
            return np.column_stack([np.ones(self.X_m.shape[0]), self.X_m])
        return self.X_m


@dataclass
class ChowLinResult:
    beta: np.ndarray
    u_q: np.ndarray
    y_m: np.ndarray
    rho_used: float
    loglik: float


def _spd_solve_factor(A, what):
    try:
        c, low = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise RankDeficiencyError(f"{what} is not positive definite") from exc
    # the elimination pivots are the squared diagonal of the Cholesky factor
    d = np.diag(c) ** 2
    if d.min() <= PIVOT_TOL * d.max():
        raise RankDeficiencyError(f"{what} is rank deficient (pivot ratio {d.min() / d.max():.2e})")
    return c, low


def _gls(y_q, X, C, V_in):
    n = y_q.size
    Xq = C @ X
    Vq = C @ V_in @ C.T
    fq = _spd_solve_factor(Vq, "aggregated residual covariance")
    Vi_X = linalg.cho_solve(fq, Xq)
    Vi_y = linalg.cho_solve(fq, y_q)
    fa = _spd_solve_factor(Xq.T @ Vi_X, "aggregated indicator matrix")
    beta = linalg.cho_solve(fa, Xq.T @ Vi_y)
    u = y_q - Xq @ beta
    Vi_u = linalg.cho_solve(fq, u)
    sigma2 = float(u @ Vi_u) / n
    logdet = 2.0 * np.log(np.abs(np.diag(fq[0]))).sum()
    if sigma2 > 0:
        loglik = -0.5 * n * (np.log(2 * np.pi * sigma2) + 1.0) - 0.5 * logdet
    else:
        loglik = np.inf
    return beta, u, Vi_u, loglik


def chow_lin(problem: DisaggregationProblem) -> ChowLinResult:
    """Chow-Lin BLUE disaggregation with AR(1) monthly residuals.

    beta is the GLS coefficient on aggregated data, u_q the aggregated
    residual, and the monthly estimate is X beta + V C' V_q^{-1} u_q. Rows
    past the sample get X beta plus the AR(1)-propagated residual tail.
    With ``rho="estimate"`` the aggregated GLS log-likelihood is maximized
    over the grid -0.98, -0.96, ..., 0.98.
    """
    X = problem.design()
    n, N = problem.n, X.shape[0]
    C = build_aggregation(n, problem.mode)
    X_in = X[: 3 * n]

    if problem.rho == "estimate":
        best = None
        for rho in RHO_GRID:
            _, _, _, ll = _gls(problem.y_q, X_in, C, ar1_covariance(float(rho), 3 * n))
            if best is None or ll > best[1]:
                best = (float(rho), ll)
        rho = best[0]
    else:
        rho = float(problem.rho)

    V = ar1_covariance(rho, N)
    beta, u, Vi_u, loglik = _gls(problem.y_q, X_in, C, V[: 3 * n, : 3 * n])
    y_m = X @ beta + V[:, : 3 * n] @ (C.T @ Vi_u)
    if not np.isfinite(y_m).all():
        raise RankDeficiencyError("non-finite Chow-Lin solution")
    return ChowLinResult(beta=beta, u_q=u, y_m=y_m, rho_used=rho, loglik=float(loglik))


def aggregate(monthly, how: str = "mean", per: int = 3) -> np.ndarray:
    """Collapse complete quarters of a monthly vector by mean, sum or last value."""
    m = np.asarray(monthly, dtype=float)
    q = m[: (m.size // per) * per].reshape(-1, per)
    if how == "mean":
        return q.mean(axis=1)
    if how == "sum":
        return q.sum(axis=1)
    if how == "last":
        return q[:, -1]
    raise ConfigError(f"unknown aggregation {how!r}")


# ------------------------------------------------------------------ RIDE


@dataclass
class RideConfig:
    """Network, training and preprocessing settings for the RIDE mapper."""

    depth: int = 2
    units: int = 64
    activation: str = "relu"
    regularization: str = "l2"
    lam: float = 1e-4
    dropout: float = 0.0
    train: TrainConfig = field(
        default_factory=lambda: TrainConfig(epochs=50, learning_rate=1e-3, loss="mse", objective="min_val_loss")
    )
    transform: str = "level"
    aggregation: str = "mean"
    test_fraction: float = 0.2
    val_fraction: float = 0.2
    tuner: TunerConfig | None = None
    space: HyperSpace | None = None

    def __post_init__(self):
        if self.transform not in ("level", "yoy"):
            raise ConfigError(f"unknown RIDE transform {self.transform!r}")
        if self.aggregation not in ("mean", "sum"):
            raise ConfigError(f"unknown RIDE aggregation {self.aggregation!r}")
        if self.train.loss != "mse":
            raise ConfigError("RIDE trains with the mse loss")

    def network_spec(self, width: int) -> NetworkSpec:
        return NetworkSpec(
            input_width=width,
            depth=self.depth,
            units=self.units,
            activation=self.activation,
            dropout=self.dropout,
            output_activation="identity",
            regularization=self.regularization,
            lam=self.lam,
        )


@dataclass
class RideModel:
    network: Network
    feature_scaler: object
    target_mean: float
    target_std: float
    transform: str
    history: TrainHistory
    best_config: dict | None = None


def _yoy(values, period):
    v = np.asarray(values, dtype=float)
    if v.shape[0] <= period:
        raise DataError(f"yoy needs more than {period} rows")
    if not (v > 0).all():
        raise DataError("yoy needs strictly positive values")
    return v[period:] / v[:-period] - 1.0


def ride_inputs(indicators, transform: str) -> np.ndarray:
    """Monthly indicator matrix in the representation RIDE was trained on."""
    X = indicators.values if isinstance(indicators, SeriesFrame) else np.asarray(indicators, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    return _yoy(X, 12) if transform == "yoy" else X


def ride_train(config: RideConfig, indicators, quarterly_target):
    """Fit RIDE; returns (model, in-sample monthly fitted series).

    Each quarter's target value (level, or its YoY change) is replicated
    over its three months to build the monthly training target; a summed
    level target is first divided by three. Features
    and target are standardized on the training rows; the fitted series is
    returned on the original (level or YoY) scale.
    """
    y_q = quarterly_target.values[:, 0] if isinstance(quarterly_target, SeriesFrame) else quarterly_target
    y_q = np.asarray(y_q, dtype=float).ravel()
    X = ride_inputs(indicators, config.transform)
    if config.transform == "yoy":
        y_q = _yoy(y_q, 4)
    n = y_q.size
    if X.shape[0] < 3 * n:
        raise DataError(f"{X.shape[0]} monthly rows cannot cover {n} quarters")
    X_in = X[: 3 * n]
    # a summed (flow) level spreads evenly over its months; YoY ratios do not depend on it
    share = 3.0 if config.aggregation == "sum" and config.transform == "level" else 1.0
    y_m = np.repeat(y_q / share, 3)

    bundle = split(X_in, y_m, config.test_fraction, config.val_fraction, shuffle=True, seed=config.train.seed)
    scaler = standardize_fit(bundle.train_x)
    t_mean, t_std = float(bundle.train_y.mean()), float(bundle.train_y.std())
    if t_std == 0:
        raise DataError("constant training target")
    std_bundle = replace(
        bundle,
        train_x=standardize_apply(bundle.train_x, scaler),
        val_x=standardize_apply(bundle.val_x, scaler),
        test_x=standardize_apply(bundle.test_x, scaler),
        train_y=(bundle.train_y - t_mean) / t_std,
        val_y=(bundle.val_y - t_mean) / t_std,
        test_y=(bundle.test_y - t_mean) / t_std,
    )

    cfg = config
    best = None
    if config.tuner is not None:
        space = config.space or HyperSpace(lstm_units=(0,))

        def build(hp, rng):
            spec = replace(
                config.network_spec(X.shape[1]),
                depth=hp["dense_depth"],
                units=hp["dense_units"],
                activation=hp["activation"],
                lam=hp["lam"],
            )
            return init_network(spec, rng)

        best, _ = tune(space, replace(config.tuner, objective="min_val_loss"), std_bundle, build, config.train)
        cfg = replace(
            config,
            depth=best["dense_depth"],
            units=best["dense_units"],
            activation=best["activation"],
            lam=best["lam"],
            train=replace(config.train, learning_rate=best["learning_rate"]),
        )

    net = init_network(cfg.network_spec(X.shape[1]), np.random.default_rng(cfg.train.seed))
    try:
        net, hist = train(net, std_bundle, cfg.train)
    except TrainingError as exc:
        raise TrainingError(f"RIDE training diverged: {exc}") from None
    model = RideModel(net, scaler, t_mean, t_std, config.transform, hist, best)
    return model, ride_extrapolate(model, X_in)


def ride_extrapolate(model: RideModel, rows) -> np.ndarray:
    """Monthly estimates for indicator rows already in the model's representation."""
    x = np.asarray(rows, dtype=float)
    if x.size == 0:
        return np.zeros(0)
    x = x[:, None] if x.ndim == 1 else x
    if x.shape[1] != model.network.spec.input_width:
        raise DataError(f"rows have {x.shape[1]} columns, model expects {model.network.spec.input_width}")
    return predict(model.network, standardize_apply(x, model.feature_scaler)) * model.target_std + model.target_mean
