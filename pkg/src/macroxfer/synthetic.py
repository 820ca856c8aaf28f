"""Seeded synthetic data calibrated to the U.S. / Brazil descriptive statistics.

Used by tests, demos and the ``synth`` CLI command in place of the FRED/BCB
files, which are not bundled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import SeriesFrame, period_range
from .errors import ConfigError

# quarterly growth mean / std of the five coincident U.S. series, 1967-2020
US_GROWTH = {
    "gdp": (0.006844, 0.007829),
    "income": (0.006885, 0.009104),
    "employment": (0.003678, 0.006319),
    "industrial_production": (0.005290, 0.014928),
    "sales": (0.006486, 0.013956),
}
US_RECESSION_SHARE = 0.127962


@dataclass
class RegimeParams:
    """Two-state Gaussian Markov-switching growth process.

    ``separation`` is the expansion-minus-recession mean gap in units of each
    series' unconditional std; ``common`` is the share of within-regime
    variance driven by a factor shared by all series.
    """

    recession_share: float = US_RECESSION_SHARE
    exit_probability: float = 0.3
    separation: float = 1.6
    common: float = 0.7
    series: dict = field(default_factory=lambda: dict(US_GROWTH))

    def transition(self) -> tuple[float, float]:
        """(P(expansion -> recession), P(recession -> expansion))."""
        pi = self.recession_share
        exit_p = self.exit_probability
        enter_p = exit_p * pi / (1 - pi)
        for p in (enter_p, exit_p):
            if not 0 < p < 1:
                raise ConfigError(f"transition probability {p} outside (0, 1)")
        return enter_p, exit_p


def markov_chain(rng, n: int, enter_p: float, exit_p: float) -> np.ndarray:
    """0/1 two-state chain started from its stationary distribution."""
    state = np.empty(n, dtype=int)
    state[0] = int(rng.random() < enter_p / (enter_p + exit_p))
    u = rng.random(n)
    for t in range(1, n):
        if state[t - 1] == 0:
            state[t] = int(u[t] < enter_p)
        else:
            state[t] = int(u[t] >= exit_p)
    return state


def generate_regime_series(seed: int, n: int, params: RegimeParams | None = None, start: str = "1967-Q2"):
    """Quarterly growth rates of five series plus a 0/1 recession indicator.

    Each series mixes two regime means so that its unconditional mean and
    std match the calibration targets. Returns (SeriesFrame, labels).
    """
    if n < 50:
        raise ConfigError("generate_regime_series needs n >= 50")
    params = params or RegimeParams()
    enter_p, exit_p = params.transition()
    rng = np.random.default_rng(seed)
    state = markov_chain(rng, n, enter_p, exit_p)
    pi = params.recession_share
    between = pi * (1 - pi) * params.separation**2
    if between >= 1:
        raise ConfigError("separation too large for the target std")
    factor = rng.standard_normal(n)
    cols = []
    for mean, std in params.series.values():
        gap = params.separation * std
        within = std * np.sqrt(1 - between)
        mu = np.where(state == 1, mean - (1 - pi) * gap, mean + pi * gap)
        noise = np.sqrt(params.common) * factor + np.sqrt(1 - params.common) * rng.standard_normal(n)
        cols.append(mu + within * noise)
    frame = SeriesFrame(list(params.series), period_range(start, n, "quarterly"), "quarterly", np.column_stack(cols))
    return frame, state.astype(float)


def growth_to_levels(frame: SeriesFrame, base: float = 100.0) -> SeriesFrame:
    """Index levels whose log first difference reproduces ``frame``.

    The output has one more row, stamped one period earlier.
    """
    logs = np.vstack([np.zeros(frame.values.shape[1]), np.cumsum(frame.values, axis=0)])
    stamps = period_range(frame.time_index[0], frame.n_rows + 1, frame.frequency)
    first = stamps[0]
    # shift the stamps back by one period
    from .dataset import format_period, parse_period

    start = format_period(parse_period(first, frame.frequency) - 1, frame.frequency)
    return SeriesFrame(
        list(frame.column_names),
        period_range(start, frame.n_rows + 1, frame.frequency),
        frame.frequency,
        base * np.exp(logs),
    )


def _ar1(rng, n, phi, std, mean=0.0):
    """Stationary AR(1) with the given unconditional std."""
    e = rng.standard_normal(n) * std * np.sqrt(1 - phi**2)
    x = np.empty(n)
    x[0] = rng.standard_normal() * std
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return mean + x


def gap_function(unemployment, capacity, recession):
    """Nonlinear output-gap map used by :func:`generate_gap_series`."""
    u = np.asarray(unemployment, dtype=float)
    c = np.asarray(capacity, dtype=float)
    r = np.asarray(recession, dtype=float)
    return -1.4 - 2.6 * np.tanh((u - 5.8) / 0.9) + 0.25 * np.maximum(c - 80.0, 0.0) - 1.2 * r


def generate_gap_series(seed: int, n: int, noise: float = 0.25, start: str = "1967-Q1"):
    """Unemployment, capacity utilization and recession features with a nonlinear output gap.

    Feature scales follow the U.S. output-gap dataset (unemployment mean
    6.09 / std 1.73, capacity 80.1 / 4.29, recession share 0.135). Returns
    (SeriesFrame of features, gap vector).
    """
    if n < 20:
        raise ConfigError("generate_gap_series needs n >= 20")
    rng = np.random.default_rng(seed)
    enter_p = 0.3 * 0.134884 / (1 - 0.134884)
    rec = markov_chain(rng, n, enter_p, 0.3).astype(float)
    u = _ar1(rng, n, 0.95, 1.55, 6.09 - 0.6 * 0.134884) + 0.6 * rec
    cap = 80.09 - 1.2 * (u - 6.09) + _ar1(rng, n, 0.8, 3.4)
    gap = gap_function(u, cap, rec) + noise * rng.standard_normal(n)
    frame = SeriesFrame(
        ["unemployment", "capacity", "recession"],
        period_range(start, n, "quarterly"),
        "quarterly",
        np.column_stack([u, cap, rec]),
    )
    return frame, gap


@dataclass
class DisaggregationData:
    indicators: SeriesFrame  # monthly levels, in-sample plus ``extra`` months
    truth: np.ndarray  # hidden monthly target for every indicator row
    quarterly: SeriesFrame  # in-sample quarterly target
    weights: np.ndarray


def generate_disaggregation_data(
    seed: int,
    n_quarters: int,
    p: int = 4,
    extra: int = 0,
    how: str = "mean",
    noise: float = 0.003,
    start: str = "1996-01",
):
    """Trending monthly indicators and a monthly target driven by them.

    log target = 0.2 + sum_k w_k log x_k + 0.05 * sum_k (log x_k - mean)^2
    + AR(1) noise; the quarterly target aggregates complete quarters by
    ``how`` (``mean`` or ``sum``).
    """
    if n_quarters < 8:
        raise ConfigError("need at least 8 quarters")
    rng = np.random.default_rng(seed)
    N = 3 * n_quarters + extra
    drift = rng.uniform(0.0005, 0.003, p)
    cycle = _ar1(rng, N, 0.97, 0.04)
    logs = np.empty((N, p))
    for k in range(p):
        own = np.cumsum(drift[k] + 0.01 * rng.standard_normal(N))
        logs[:, k] = np.log(100.0) + own + (0.5 + 0.5 * rng.random()) * cycle
    w = rng.dirichlet(np.ones(p))
    centered = logs - logs.mean(axis=0)
    log_target = 0.2 + logs @ w + 0.5 * (centered**2).mean(axis=1) + _ar1(rng, N, 0.5, noise)
    truth = np.exp(log_target)
    q = truth[: 3 * n_quarters].reshape(-1, 3)
    quarterly = q.mean(axis=1) if how == "mean" else q.sum(axis=1)
    months = period_range(start, N, "monthly")
    first_q = f"{start[:4]}-Q{(int(start[5:7]) - 1) // 3 + 1}"
    return DisaggregationData(
        indicators=SeriesFrame([f"x{k + 1}" for k in range(p)], months, "monthly", np.exp(logs)),
        truth=truth,
        quarterly=SeriesFrame(["gdp"], period_range(first_q, n_quarters, "quarterly"), "quarterly", quarterly),
        weights=w,
    )
