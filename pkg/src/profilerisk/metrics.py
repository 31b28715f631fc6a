"""Per-attribute classifier metrics and chance baselines."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping

import numpy as np

from .dataset import ProfileDataset
from .errors import EmptyDataset, KeyMismatch, SchemaMismatch


@dataclass(frozen=True)
class AttributeMetrics:
    accuracy: float
    weighted_f1: float
    baseline: float


@dataclass(frozen=True)
class MetricsTable:
    attributes: Mapping[str, AttributeMetrics]
    granularity: str
    baseline_kind: str = "majority"


def weighted_f1(truth: np.ndarray, pred: np.ndarray, n_levels: int) -> float:
    """Support-weighted mean of per-level F1; F1 is 0 where P + R = 0."""
    total = 0.0
    n = len(truth)
    for level in range(n_levels):
        support = int(np.sum(truth == level))
        if support == 0:
            continue
        tp = int(np.sum((truth == level) & (pred == level)))
        predicted = int(np.sum(pred == level))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total += support * f1
    return total / n


def _priors(levels: np.ndarray, n_levels: int) -> np.ndarray:
    return np.bincount(levels, minlength=n_levels) / len(levels)


def baseline(
    truth: ProfileDataset, kind: Literal["majority", "weighted_random"] = "majority"
) -> dict[str, float]:
    """Chance accuracy per attribute.

    ``majority``: always predict the most frequent level (max prior).
    ``weighted_random``: predict level i with probability prior_i, giving sum(prior_i**2).
    """
    mat = truth.label_matrix()
    if mat.shape[0] == 0:
        raise EmptyDataset("empty dataset")
    out = {}
    for a, attr in enumerate(truth.schema.attributes):
        p = _priors(mat[:, a], attr.n_levels)
        if kind == "majority":
            out[attr.name] = float(p.max())
        elif kind == "weighted_random":
            out[attr.name] = float(np.sum(p * p))
        else:
            raise ValueError(f"unknown baseline kind {kind!r}")
    return out


def classification_metrics(
    pred: ProfileDataset,
    truth: ProfileDataset,
    baseline_kind: Literal["majority", "weighted_random"] = "majority",
) -> MetricsTable:
    if pred.schema != truth.schema:
        raise SchemaMismatch("prediction and truth use different schemas")
    pkeys = [r.key for r in pred.records]
    tkeys = [r.key for r in truth.records]
    if pkeys != tkeys:
        raise KeyMismatch(
            "prediction and truth cover different records",
            only_pred=[list(k) for k in sorted(set(pkeys) - set(tkeys))[:10]],
            only_truth=[list(k) for k in sorted(set(tkeys) - set(pkeys))[:10]],
        )
    p, t = pred.label_matrix(), truth.label_matrix()
    base = baseline(truth, baseline_kind)
    attrs = {}
    for a, attr in enumerate(truth.schema.attributes):
        attrs[attr.name] = AttributeMetrics(
            accuracy=float(np.mean(p[:, a] == t[:, a])),
            weighted_f1=weighted_f1(t[:, a], p[:, a], attr.n_levels),
            baseline=base[attr.name],
        )
    return MetricsTable(attrs, truth.granularity, baseline_kind)
