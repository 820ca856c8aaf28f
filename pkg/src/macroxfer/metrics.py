"""Classification and regression metrics: confusion matrix, ROC/AUC, MAE, Pearson."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def to_dict(self) -> dict:
        return {"tn": self.tn, "fp": self.fp, "fn": self.fn, "tp": self.tp}


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


def _pair(a, b, what):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0:
        raise DataError(f"{what}: empty input")
    if a.size != b.size:
        raise DataError(f"{what}: length mismatch {a.size} vs {b.size}")
    return a, b


def _binary(labels, what):
    if not np.isin(labels, (0, 1)).all():
        raise DataError(f"{what}: labels must be 0 or 1")


def confusion(scores, labels, threshold: float = 0.5) -> ConfusionMatrix:
    """Counts with the positive class predicted when score >= threshold."""
    s, y = _pair(scores, labels, "confusion")
    _binary(y, "confusion")
    pred = s >= threshold
    pos = y == 1
    return ConfusionMatrix(
        tn=int((~pred & ~pos).sum()),
        fp=int((pred & ~pos).sum()),
        fn=int((~pred & pos).sum()),
        tp=int((pred & pos).sum()),
    )


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(random positive outranks random negative), ties count 1/2."""
    s, y = _pair(scores, labels, "auc")
    _binary(y, "auc")
    n_pos = int((y == 1).sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("auc is undefined when only one class is present")
    ranks = rankdata(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels) -> list[RocPoint]:
    """ROC points at every distinct score, from threshold +inf downwards."""
    s, y = _pair(scores, labels, "roc_curve")
    _binary(y, "roc_curve")
    n_pos = (y == 1).sum()
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("roc_curve is undefined when only one class is present")
    points = [RocPoint(float("inf"), 0.0, 0.0)]
    for t in np.unique(s)[::-1]:
        pred = s >= t
        points.append(RocPoint(float(t), float((pred & (y == 1)).sum() / n_pos), float((pred & (y == 0)).sum() / n_neg)))
    return points


def roc_area(points: list[RocPoint]) -> float:
    """Trapezoidal area under an ROC curve."""
    fpr = np.array([p.fpr for p in points])
    tpr = np.array([p.tpr for p in points])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))


def mae(predictions, targets) -> float:
    p, t = _pair(predictions, targets, "mae")
    return float(np.mean(np.abs(p - t)))


def pearson(x, y) -> float:
    """Sample Pearson correlation, clipped to [-1, 1] against rounding."""
    a, b = _pair(x, y, "pearson")
    if a.size < 2:
        raise DataError("pearson needs at least 2 points")
    da, db = a - a.mean(), b - b.mean()
    na, nb = np.sqrt((da * da).sum()), np.sqrt((db * db).sum())
    if na == 0 or nb == 0:
        raise DataError("pearson is undefined for a constant input")
    return float(np.clip((da * db).sum() / (na * nb), -1.0, 1.0))


@dataclass
class MetricReport:
    n: int
    auc: float | None = None
    confusion: ConfusionMatrix | None = None
    mae: float | None = None
    pearson: float | None = None

    def to_dict(self) -> dict:
        d = {"n": self.n}
        if self.auc is not None:
            d["auc"] = self.auc
        if self.confusion is not None:
            d["confusion"] = self.confusion.to_dict()
        if self.mae is not None:
            d["mae"] = self.mae
        if self.pearson is not None:
            d["pearson"] = self.pearson
        return d


def classification_report(scores, labels, threshold: float = 0.5) -> MetricReport:
    """AUC (None when a single class is present) and the confusion matrix."""
    s, y = _pair(scores, labels, "classification_report")
    try:
        a = auc(s, y)
    except DataError:
        _binary(y, "classification_report")
        a = None
    return MetricReport(n=s.size, auc=a, confusion=confusion(s, y, threshold))


def regression_report(predictions, targets) -> MetricReport:
    p, t = _pair(predictions, targets, "regression_report")
    try:
        r = pearson(p, t)
    except DataError:
        r = None
    return MetricReport(n=p.size, mae=mae(p, t), pearson=r)


def format_json(obj, decimals: int = 6, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float printed in fixed notation with ``decimals`` places."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {format_json(v, decimals, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{format_json(v, decimals, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            return "null"
        return f"{float(obj):.{decimals}f}"
    return json.dumps(obj)
