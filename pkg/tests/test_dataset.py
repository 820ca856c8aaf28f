import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from macroxfer.dataset import (
    SeriesFrame,
    label_stats,
    load_csv,
    log_first_difference,
    make_windows,
    parse_period,
    period_range,
    split,
    split_sizes,
    standardize_apply,
    standardize_fit,
    trim_missing,
    write_csv,
    yoy_change,
)
from macroxfer.errors import DataError
from macroxfer.synthetic import generate_regime_series, growth_to_levels


def frame(values, start="2000-Q1", freq="quarterly", names=None):
    v = np.asarray(values, dtype=float)
    v = v[:, None] if v.ndim == 1 else v
    names = names or [f"c{i}" for i in range(v.shape[1])]
    return SeriesFrame(names, period_range(start, v.shape[0], freq), freq, v)


# ---------------------------------------------------------------- csv


def test_load_three_rows(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("date,gdp\n2000-Q1,1.0\n2000-Q2,2.0\n2000-Q3,3.5\n")
    f = load_csv(p)
    assert f.column_names == ["gdp"]
    assert f.n_rows == 3
    np.testing.assert_array_equal(f.column("gdp"), [1.0, 2.0, 3.5])


def test_load_sorts_by_date_and_accepts_month_stamps(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("date,x,y\n2000-03-01,3,30\n2000-01-01,1,10\n2000-02-01,2,20\n")
    f = load_csv(p, frequency="monthly")
    assert f.time_index == ["2000-01", "2000-02", "2000-03"]
    np.testing.assert_array_equal(f.values, [[1, 10], [2, 20], [3, 30]])


def test_late_starting_column_is_trimmed(tmp_path):
    # one series starts in 1995, the other in 2005: the complete suffix begins in 2005
    rows = ["date,early,late"]
    for i, q in enumerate(period_range("1995-Q1", 60, "quarterly")):
        rows.append(f"{q},1.0,{'' if i < 40 else i}")
    p = tmp_path / "a.csv"
    p.write_text("\n".join(rows) + "\n")
    f = trim_missing(load_csv(p))
    assert f.time_index[0] == "2005-Q1"
    assert not np.isnan(f.values).any()


@pytest.mark.parametrize(
    "text, match",
    [
        ("", "empty"),
        ("date,x\n2000-Q1,1\n2000-Q2\n", "expected 2 fields"),
        ("date,x\n2000-Q1,abc\n", "non-numeric"),
        ("date,x\n2000-Q1,1\n2000-Q1,2\n", "duplicate"),
        ("date,x\nyesterday,1\n", "unparseable"),
        ("when,x\n2000-Q1,1\n", "no date column"),
    ],
)
def test_load_errors(tmp_path, text, match):
    p = tmp_path / "a.csv"
    p.write_text(text)
    with pytest.raises(DataError, match=match):
        load_csv(p)


def test_load_missing_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        load_csv(tmp_path / "nope.csv")


def test_gap_in_dates_rejected(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("date,x\n2000-Q1,1\n2000-Q3,2\n")
    with pytest.raises(DataError, match="uniform step"):
        load_csv(p)


def test_csv_round_trip(tmp_path):
    f = frame([[1.5, np.nan], [2.25, 3.0]], names=["a", "b"])
    write_csv(f, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text() == "date,a,b\n2000-Q1,1.500000,\n2000-Q2,2.250000,3.000000\n"
    g = load_csv(tmp_path / "f.csv")
    np.testing.assert_array_equal(np.isnan(g.values), np.isnan(f.values))


def test_period_parsing():
    assert parse_period("1967-Q2", "quarterly") == 1967 * 4 + 1
    assert parse_period("1967-05", "quarterly") == 1967 * 4 + 1
    assert parse_period("1967-05-01", "monthly") == 1967 * 12 + 4
    with pytest.raises(DataError):
        parse_period("1967-Q2", "monthly")
    with pytest.raises(DataError):
        parse_period("1967-13", "monthly")


# ---------------------------------------------------------------- trim / transforms


def test_trim_identity():
    f = frame([1.0, 2.0, 3.0])
    assert trim_missing(f) is f


def test_trim_leading_block():
    v = np.arange(1.0, 11.0)[:, None].repeat(2, axis=1)
    v[:4, 1] = np.nan
    g = trim_missing(frame(v))
    assert g.n_rows == 6
    np.testing.assert_array_equal(g.values[:, 0], np.arange(5.0, 11.0))


def test_trim_final_row_missing():
    with pytest.raises(DataError):
        trim_missing(frame([1.0, 2.0, np.nan]))


def test_log_diff_values():
    np.testing.assert_array_equal(log_first_difference(frame([5.0, 5.0, 5.0])).values, [[0.0], [0.0]])
    out = log_first_difference(frame([100.0, 110.0]))
    np.testing.assert_allclose(out.values[0, 0], math.log(1.1), rtol=0, atol=1e-15)
    assert round(out.values[0, 0], 7) == 0.0953102
    assert out.time_index == ["2000-Q2"]


def test_log_diff_error_names_column_and_row():
    f = frame([[1.0, 2.0], [1.0, 0.0]], names=["gdp", "sales"])
    with pytest.raises(DataError, match=r"'sales'.*row 1"):
        log_first_difference(f)


def test_yoy_values_and_errors():
    v = np.full(13, 100.0)
    v[12] = 110.0
    out = yoy_change(frame(v, start="2000-01", freq="monthly"))
    assert out.n_rows == 1
    np.testing.assert_allclose(out.values[0, 0], 0.10, atol=1e-15)
    np.testing.assert_array_equal(yoy_change(frame(np.full(8, 3.0))).values, np.zeros((4, 1)))
    with pytest.raises(DataError):
        yoy_change(frame(np.ones(10), start="2000-01", freq="monthly"))
    with pytest.raises(DataError):
        yoy_change(frame(np.ones(20), start="2000-01", freq="monthly"), period=4)


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(float, st.integers(2, 40), elements=st.floats(0.01, 1e4)))
def test_log_diff_cumsum_reconstructs(x):
    growth = log_first_difference(frame(x)).values[:, 0]
    rebuilt = x[0] * np.exp(np.concatenate([[0.0], np.cumsum(growth)]))
    np.testing.assert_allclose(rebuilt, x, rtol=1e-9)


def test_growth_to_levels_inverse():
    g, _ = generate_regime_series(4, 60)
    lv = growth_to_levels(g)
    assert lv.n_rows == g.n_rows + 1
    back = log_first_difference(lv)
    assert back.time_index == g.time_index
    np.testing.assert_allclose(back.values, g.values, atol=1e-12)


# ---------------------------------------------------------------- scaling


def test_standardize_examples():
    p = standardize_fit(np.array([[1.0], [3.0]]))
    np.testing.assert_array_equal(p.mean, [2.0])
    np.testing.assert_array_equal(p.std, [1.0])
    np.testing.assert_array_equal(standardize_apply(np.array([[1.0], [3.0]]), p), [[-1.0], [1.0]])
    p = standardize_fit(np.array([[-1.0], [1.0]]))
    np.testing.assert_array_equal((p.mean, p.std), ([0.0], [1.0]))
    with pytest.raises(DataError):
        standardize_fit(np.array([[5.0], [5.0], [5.0]]))
    with pytest.raises(DataError):
        standardize_apply(np.ones((2, 3)), standardize_fit(np.array([[1.0, 2.0], [3.0, 5.0]])))


@settings(max_examples=50, deadline=None)
@given(
    hnp.arrays(float, st.tuples(st.integers(2, 30), st.integers(1, 4)), elements=st.floats(-1e3, 1e3)),
)
def test_standardize_property(x):
    spread = x.std(axis=0)
    if (spread < 1e-6).any():
        return
    z = standardize_apply(x, standardize_fit(x))
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(z.std(axis=0), 1, atol=1e-9)


def test_standardize_windows_on_last_axis():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10, 3, 2))
    p = standardize_fit(x[:, -1, :])
    np.testing.assert_allclose(standardize_apply(x, p), (x - p.mean) / p.std)


# ---------------------------------------------------------------- split


def test_split_sizes_appendix_fractions():
    assert split_sizes(100) == (42, 18, 40)


def test_split_ordering_and_determinism():
    x = np.arange(100.0)[:, None]
    b = split(x, np.arange(100.0))
    assert b.train_index.max() < b.val_index.min() <= b.val_index.max() < b.test_index.min()
    s1 = split(x, np.arange(100.0), shuffle=True, seed=5)
    s2 = split(x, np.arange(100.0), shuffle=True, seed=5)
    np.testing.assert_array_equal(s1.test_index, s2.test_index)
    assert s1.shuffled and not b.shuffled


@settings(max_examples=60, deadline=None)
@given(st.integers(5, 300), st.booleans(), st.integers(0, 2**31))
def test_split_disjoint_exhaustive(n, shuffle, seed):
    x = np.arange(n, dtype=float)[:, None]
    b = split(x, x[:, 0], shuffle=shuffle, seed=seed)
    idx = np.concatenate([b.train_index, b.val_index, b.test_index])
    np.testing.assert_array_equal(np.sort(idx), np.arange(n))
    np.testing.assert_array_equal(b.test_x[:, 0], b.test_index)


def test_split_too_small():
    with pytest.raises(DataError):
        split(np.ones((2, 1)), np.ones(2))


# ---------------------------------------------------------------- labels / windows


def test_label_stats_examples():
    assert label_stats([0, 1, 0, 1]).initial_bias == 0.0
    y = np.r_[np.ones(27), np.zeros(184)]
    st_ = label_stats(y)
    assert (st_.pos, st_.neg) == (27, 184)
    assert st_.initial_bias == math.log(27 / 184)
    # the documented approximation -1.9188 is within 5e-4 of the exact -1.91910
    assert abs(st_.initial_bias - (-1.9188)) < 5e-4
    with pytest.raises(DataError):
        label_stats(np.zeros(5))
    with pytest.raises(DataError):
        label_stats([0, 2])


@given(st.integers(1, 500), st.integers(1, 500))
def test_initial_bias_reproduces_base_rate(pos, neg):
    b = label_stats(np.r_[np.ones(pos), np.zeros(neg)]).initial_bias
    assert abs(1 / (1 + math.exp(-b)) - pos / (pos + neg)) < 1e-12


def test_make_windows():
    x = np.arange(12.0).reshape(6, 2)
    w = make_windows(x, 3)
    assert w.shape == (4, 3, 2)
    np.testing.assert_array_equal(w[0], x[:3])
    np.testing.assert_array_equal(w[-1], x[3:])
    with pytest.raises(DataError):
        make_windows(x, 7)
