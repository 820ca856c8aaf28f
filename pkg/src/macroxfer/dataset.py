"""Time-series containers, CSV I/O, transforms and train/val/test splitting."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

FREQUENCIES = ("monthly", "quarterly")
PERIODS_PER_YEAR = {"monthly": 12, "quarterly": 4}

_MONTH_RE = re.compile(r"^(\d{4})-(\d{1,2})(?:-(\d{1,2}))?$")
_QUARTER_RE = re.compile(r"^(\d{4})[-:]?Q([1-4])$", re.IGNORECASE)


def parse_period(stamp: str, frequency: str) -> int:
    """Convert a date stamp into an integer period ordinal.

    Accepts ``YYYY-MM``, ``YYYY-MM-DD`` and ``YYYY-Qn``. Monthly ordinals count
    months, quarterly ordinals count quarters, both from year 0.
    """
    if frequency not in FREQUENCIES:
        raise DataError(f"unknown frequency {frequency!r}")
    s = stamp.strip()
    m = _QUARTER_RE.match(s)
    if m:
        if frequency != "quarterly":
            raise DataError(f"quarter stamp {stamp!r} in a monthly series")
        return int(m.group(1)) * 4 + int(m.group(2)) - 1
    m = _MONTH_RE.match(s)
    if m:
        year, month = int(m.group(1)), int(m.group(2))
        if not 1 <= month <= 12:
            raise DataError(f"invalid month in date {stamp!r}")
        if m.group(3) is not None and not 1 <= int(m.group(3)) <= 31:
            raise DataError(f"invalid day in date {stamp!r}")
        if frequency == "monthly":
            return year * 12 + month - 1
        return year * 4 + (month - 1) // 3
    raise DataError(f"unparseable date {stamp!r}")


def format_period(ordinal: int, frequency: str) -> str:
    if frequency == "monthly":
        return f"{ordinal // 12:04d}-{ordinal % 12 + 1:02d}"
    return f"{ordinal // 4:04d}-Q{ordinal % 4 + 1}"


def period_range(start: str, n: int, frequency: str) -> list[str]:
    first = parse_period(start, frequency)
    return [format_period(first + i, frequency) for i in range(n)]


@dataclass
class SeriesFrame:
    """Named, time-indexed real columns at a fixed frequency.

    ``values`` has one row per period; ``nan`` marks a missing observation.
    ``time_index`` holds canonical stamps (``1996-01`` or ``1967-Q1``).
    """

    column_names: list[str]
    time_index: list[str]
    frequency: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.frequency not in FREQUENCIES:
            raise DataError(f"unknown frequency {self.frequency!r}")
        if self.values.shape != (len(self.time_index), len(self.column_names)):
            raise DataError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.time_index)} periods x {len(self.column_names)} columns"
            )
        if len(set(self.column_names)) != len(self.column_names):
            raise DataError("duplicate column names")
        ordinals = [parse_period(t, self.frequency) for t in self.time_index]
        if any(b - a != 1 for a, b in zip(ordinals, ordinals[1:])):
            raise DataError("time index must be strictly increasing with a uniform step")
        self.time_index = [format_period(o, self.frequency) for o in ordinals]

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.column_names.index(name)]
        except ValueError:
            raise DataError(f"no column named {name!r}") from None

    def select(self, names: list[str]) -> "SeriesFrame":
        idx = []
        for name in names:
            if name not in self.column_names:
                raise DataError(f"no column named {name!r}")
            idx.append(self.column_names.index(name))
        return SeriesFrame(list(names), list(self.time_index), self.frequency, self.values[:, idx])

    def rows(self, start: int, stop: int | None = None) -> "SeriesFrame":
        return SeriesFrame(
            list(self.column_names),
            self.time_index[start:stop],
            self.frequency,
            self.values[start:stop],
        )


def load_csv(path, date_column: str = "date", frequency: str = "quarterly") -> SeriesFrame:
    """Read a UTF-8 CSV with a header row into a SeriesFrame sorted by date."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if date_column not in header:
        raise DataError(f"{path}: no date column {date_column!r} in header")
    if len(rows) < 2:
        raise DataError(f"{path} has a header but no data rows")
    date_pos = header.index(date_column)
    names = [h for i, h in enumerate(header) if i != date_pos]

    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        ordinal = parse_period(row[date_pos], frequency)
        vals = []
        for i, cell in enumerate(row):
            if i == date_pos:
                continue
            cell = cell.strip()
            if cell == "":
                vals.append(math.nan)
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value {cell!r}") from None
        records.append((ordinal, vals))

    records.sort(key=lambda r: r[0])
    ordinals = [r[0] for r in records]
    if len(set(ordinals)) != len(ordinals):
        raise DataError(f"{path}: duplicate dates")
    values = np.array([r[1] for r in records], dtype=float).reshape(len(records), len(names))
    return SeriesFrame(names, [format_period(o, frequency) for o in ordinals], frequency, values)


def write_csv(frame: SeriesFrame, path, date_column: str = "date", decimals: int = 6) -> None:
    """Write a frame in the same CSV shape ``load_csv`` reads; missing -> empty cell."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([date_column, *frame.column_names])
        for stamp, row in zip(frame.time_index, frame.values):
            w.writerow([stamp, *("" if np.isnan(v) else f"{v:.{decimals}f}" for v in row)])


def trim_missing(frame: SeriesFrame) -> SeriesFrame:
    """Return the longest suffix of rows with no missing value in any column."""
    bad = np.isnan(frame.values).any(axis=1)
    if not bad.any():
        return frame
    last_bad = int(np.flatnonzero(bad)[-1])
    if last_bad == frame.n_rows - 1:
        raise DataError("no complete suffix: the final row has a missing value")
    return frame.rows(last_bad + 1)


def _check_positive(frame: SeriesFrame, what: str) -> None:
    bad = ~(frame.values > 0)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataError(
            f"{what} needs strictly positive values: column {frame.column_names[c]!r}, "
            f"row {r} ({frame.time_index[r]}) has {frame.values[r, c]!r}"
        )


def log_first_difference(frame: SeriesFrame) -> SeriesFrame:
    """Growth rates ln(x[t+1]) - ln(x[t]), stamped at the later period."""
    _check_positive(frame, "log_first_difference")
    if frame.n_rows < 2:
        raise DataError("log_first_difference needs at least 2 rows")
    out = np.diff(np.log(frame.values), axis=0)
    return SeriesFrame(list(frame.column_names), frame.time_index[1:], frame.frequency, out)


def yoy_change(frame: SeriesFrame, period: int | None = None) -> SeriesFrame:
    """Year-over-year change x[t+period] / x[t] - 1, stamped at the later period."""
    expected = PERIODS_PER_YEAR[frame.frequency]
    if period is None:
        period = expected
    if period != expected:
        raise DataError(f"{frame.frequency} data needs period {expected}, got {period}")
    if frame.n_rows <= period:
        raise DataError(f"yoy_change needs more than {period} rows, got {frame.n_rows}")
    _check_positive(frame, "yoy_change")
    out = frame.values[period:] / frame.values[:-period] - 1.0
    return SeriesFrame(list(frame.column_names), frame.time_index[period:], frame.frequency, out)


@dataclass
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def standardize_fit(train_rows) -> ScalerParams:
    """Per-column mean and population standard deviation of the training rows."""
    x = np.asarray(train_rows, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise DataError("standardize_fit needs at least 2 rows")
    if not np.isfinite(x).all():
        raise DataError("standardize_fit got missing or non-finite values")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    const = std <= 1e-12 * (np.abs(mean) + 1e-12)
    if const.any():
        raise DataError(f"constant column(s) {np.flatnonzero(const).tolist()} cannot be standardized")
    return ScalerParams(mean, std)


def standardize_apply(rows, params: ScalerParams) -> np.ndarray:
    """(x - mean) / std along the last axis, using previously fitted params."""
    x = np.asarray(rows, dtype=float)
    if x.shape[-1] != params.mean.shape[0]:
        raise DataError(f"rows have {x.shape[-1]} columns, scaler was fitted on {params.mean.shape[0]}")
    return (x - params.mean) / params.std


@dataclass
class SplitBundle:
    """Train/validation/test partition; ``*_index`` are row positions in the source."""

    train_x: np.ndarray
    train_y: np.ndarray
    val_x: np.ndarray
    val_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    train_index: np.ndarray
    val_index: np.ndarray
    test_index: np.ndarray
    seed: int = 0
    shuffled: bool = False

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train_index), len(self.val_index), len(self.test_index)


def split_sizes(n: int, test_fraction: float = 0.4, val_fraction: float = 0.3) -> tuple[int, int, int]:
    """Row counts (train, val, test); test and validation sizes are rounded up."""
    for name, frac in (("test_fraction", test_fraction), ("val_fraction", val_fraction)):
        if not 0 < frac < 1:
            raise DataError(f"{name} must lie in (0, 1), got {frac}")
    n_test = math.ceil(test_fraction * n)
    rest = n - n_test
    n_val = math.ceil(val_fraction * rest)
    n_train = rest - n_val
    if min(n_train, n_val, n_test) < 1:
        raise DataError(f"{n} rows are too few for a nonempty train/val/test split")
    return n_train, n_val, n_test


def split(
    features,
    labels,
    test_fraction: float = 0.4,
    val_fraction: float = 0.3,
    shuffle: bool = False,
    seed: int = 0,
) -> SplitBundle:
    """Partition rows into train/val/test.

    Without shuffling the parts are contiguous blocks in time order
    train -> val -> test. With shuffling, rows are permuted by a generator
    seeded with ``seed`` before cutting.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise DataError(f"{x.shape[0]} feature rows but {y.shape[0]} labels")
    n_train, n_val, _ = split_sizes(x.shape[0], test_fraction, val_fraction)
    order = np.random.default_rng(seed).permutation(x.shape[0]) if shuffle else np.arange(x.shape[0])
    tr, va, te = order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]
    return SplitBundle(x[tr], y[tr], x[va], y[va], x[te], y[te], tr, va, te, seed=seed, shuffled=shuffle)


@dataclass
class LabelStats:
    pos: int
    neg: int
    initial_bias: float = field(init=False)

    def __post_init__(self):
        self.initial_bias = math.log(self.pos / self.neg)


def label_stats(labels) -> LabelStats:
    """Class counts and the output bias ln(pos/neg) that reproduces the base rate."""
    y = np.asarray(labels)
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    pos = int((y == 1).sum())
    neg = int((y == 0).sum())
    if pos == 0 or neg == 0:
        raise DataError(f"initial bias undefined with pos={pos}, neg={neg}")
    return LabelStats(pos, neg)


def make_windows(values, length: int) -> np.ndarray:
    """Stack trailing windows: output[i] = values[i : i + length] (rows length-1.. end)."""
    x = np.asarray(values, dtype=float)
    if length < 1:
        raise DataError("window length must be >= 1")
    if x.shape[0] < length:
        raise DataError(f"{x.shape[0]} rows are too few for windows of length {length}")
    return np.stack([x[i : i + length] for i in range(x.shape[0] - length + 1)])
