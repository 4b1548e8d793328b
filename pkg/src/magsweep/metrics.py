"""Detection metrics: precision, recall, F1, threat score, correlation.

Count-based metrics use the convention that an empty denominator yields
0.0; :func:`degenerate_metrics` reports which metrics were degenerate so
empty-detection runs are distinguishable from genuinely zero scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .localize import ConfusionCounts


def precision(counts):
    """TP / (TP + FP); 0.0 when nothing was detected."""
    den = counts.tp + counts.fp
    return counts.tp / den if den else 0.0


def recall(counts):
    """TP / (TP + FN); 0.0 when there was nothing to find."""
    den = counts.tp + counts.fn
    return counts.tp / den if den else 0.0


def f1(counts):
    """Harmonic mean of precision and recall."""
    p, r = precision(counts), recall(counts)
    return 2.0 * p * r / (p + r) if p + r else 0.0


def threat_score(counts):
    """Critical success index: TP / (TP + FN + FP)."""
    den = counts.tp + counts.fn + counts.fp
    return counts.tp / den if den else 0.0


def degenerate_metrics(counts):
    """Names of metrics whose denominator is empty for these counts."""
    out = set()
    if counts.tp + counts.fp == 0:
        out.add("precision")
    if counts.tp + counts.fn == 0:
        out.add("recall")
    if precision(counts) + recall(counts) == 0.0:
        out.add("f1")
    if counts.tp + counts.fn + counts.fp == 0:
        out.add("threat_score")
    return out


def pearson(x, y):
    """Sample Pearson correlation; NaN if either series is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two equal-length series of length >= 2")
    xd = x - x.mean()
    yd = y - y.mean()
    den = np.sqrt(np.sum(xd * xd) * np.sum(yd * yd))
    if den == 0.0:
        return float("nan")
    return float(np.sum(xd * yd) / den)


@dataclass
class MetricsReport:
    """Pooled scores for one cleaning/detection combination."""

    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float
    threat_score: float
    pearson_rho: float
    localization_errors: list = field(default_factory=list)
    degenerate: tuple = ()

    @classmethod
    def from_counts(cls, counts, pearson_rho=float("nan"),
                    localization_errors=()):
        return cls(
            counts=counts,
            precision=precision(counts),
            recall=recall(counts),
            f1=f1(counts),
            threat_score=threat_score(counts),
            pearson_rho=pearson_rho,
            localization_errors=list(localization_errors),
            degenerate=tuple(sorted(degenerate_metrics(counts))),
        )

    def to_dict(self):
        errors = self.localization_errors
        return {
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "fn": self.counts.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "threat_score": self.threat_score,
            "pearson_rho": self.pearson_rho,
            "median_error_m": float(np.median(errors)) if errors else None,
            "n_true_positives_with_error": len(errors),
            "degenerate": list(self.degenerate),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)
