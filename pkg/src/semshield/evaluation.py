"""Selective-classification benchmark: ROC curves, AUC, method comparison.

The detection framing: a misprediction is the positive class, and an
example is flagged when its score strictly exceeds the moving threshold
``epsilon``. The threshold is swept over every distinct score value plus
infinite sentinels, so the curve always runs from (0, 0) to (1, 1), and the
trapezoidal AUC agrees with the rank-based (Mann-Whitney, ties counting
one half) statistic. The framing choice is recorded in report metadata.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np

from .confidence import (DEFAULT_NND_K, METHODS, ScoreRecord, score_batch)
from .errors import ConfigurationError, ValidationError
from .knowledge import PrototypeSet
from .projection import SemanticProjector
from .validation import as_labels, as_matrix, check_aligned


@dataclass(frozen=True)
class RocCurve:
    """Threshold sweep results: (fpr, tpr, threshold) points plus the AUC."""

    points: tuple[tuple[float, float, float], ...]
    auc: float

    def __post_init__(self) -> None:
        if not self.points:
            raise ValidationError("ROC curve has no points")
        first, last = self.points[0], self.points[-1]
        if (first[0], first[1]) != (0.0, 0.0) or (last[0], last[1]) != (1.0, 1.0):
            raise ValidationError("ROC curve must run from (0,0) to (1,1)")
        fprs = [p[0] for p in self.points]
        tprs = [p[1] for p in self.points]
        if sorted(fprs) != fprs or sorted(tprs) != tprs:
            raise ValidationError("ROC coordinates must be non-decreasing")
        if not 0.0 <= self.auc <= 1.0:
            raise ValidationError(f"AUC {self.auc} outside [0, 1]")


def _records_outcomes(records: Sequence[ScoreRecord]) -> tuple[np.ndarray, np.ndarray]:
    if not records:
        raise ValidationError("no records to evaluate")
    if any(r.true is None for r in records):
        raise ValidationError("records must carry true classes for evaluation")
    scores = np.array([r.score for r in records], dtype=np.float64)
    positive = np.array([r.predicted != r.true for r in records], dtype=bool)
    return scores, positive


def roc(records: Sequence[ScoreRecord]) -> RocCurve:
    """ROC curve of misprediction detection by thresholding the score.

    True positive rate: flagged mispredictions over all mispredictions.
    False positive rate: flagged correct predictions over all correct ones.
    Needs at least one misprediction and one correct prediction; otherwise
    the curve is undefined and a ValidationError is raised.
    """
    scores, positive = _records_outcomes(records)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError(
            "ROC undefined: need at least one misprediction and one correct "
            "prediction", mispredictions=n_pos, correct=n_neg)

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = positive[order]

    points: list[tuple[float, float, float]] = [(0.0, 0.0, math.inf)]
    tp = fp = 0
    i = 0
    m = scores.size
    while i < m:
        value = sorted_scores[i]
        # operating point for epsilon = value: flag everything scored above it
        point = (fp / n_neg, tp / n_pos, float(value))
        if (point[0], point[1]) != (points[-1][0], points[-1][1]):
            points.append(point)
        while i < m and sorted_scores[i] == value:
            if sorted_pos[i]:
                tp += 1
            else:
                fp += 1
            i += 1
    points.append((1.0, 1.0, -math.inf))

    auc = 0.0
    for (f0, t0, _), (f1, t1, _) in zip(points, points[1:]):
        auc += (f1 - f0) * (t1 + t0) / 2.0
    # the exact value is in [0, 1]; shave off summation dust at the ends
    return RocCurve(points=tuple(points), auc=min(1.0, max(0.0, float(auc))))


def rank_auc(records: Sequence[ScoreRecord]) -> float:
    """Mann-Whitney AUC over (misprediction, correct) pairs, ties = 0.5.

    Quadratic brute force; kept as the independent cross-check of the
    trapezoidal construction.
    """
    scores, positive = _records_outcomes(records)
    pos_scores = scores[positive]
    neg_scores = scores[~positive]
    if pos_scores.size == 0 or neg_scores.size == 0:
        raise ValidationError(
            "rank AUC undefined without both outcomes",
            mispredictions=int(pos_scores.size), correct=int(neg_scores.size))
    wins = (pos_scores[:, None] > neg_scores[None, :]).sum()
    ties = (pos_scores[:, None] == neg_scores[None, :]).sum()
    return float((wins + 0.5 * ties) / (pos_scores.size * neg_scores.size))


def selective_accuracy(records: Sequence[ScoreRecord],
                       epsilon: float) -> tuple[float, float | None]:
    """Coverage and retained-set accuracy when rejecting scores above epsilon.

    Returns ``(coverage, accuracy)``; accuracy is None when nothing is
    retained (the retained-set accuracy is undefined there).
    """
    scores, positive = _records_outcomes(records)
    kept = scores <= epsilon
    coverage = float(kept.mean())
    if not kept.any():
        return 0.0, None
    accuracy = float((~positive[kept]).mean())
    return coverage, accuracy


@dataclass(frozen=True)
class BenchReport:
    """Per-method ROC curves over one example set, plus counts and metadata."""

    methods: dict[str, RocCurve]
    counts: dict[str, int]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.counts["total"] != self.counts["correct"] + self.counts["mispredicted"]:
            raise ValidationError("counts must satisfy total = correct + mispredicted",
                                  **self.counts)


def bench(*, features, labels, predictions, probs=None, mcd_samples=None,
          projector: SemanticProjector | None = None,
          prototypes: PrototypeSet | None = None, train_features=None,
          methods: Iterable[str] = METHODS,
          nnd_k: int = DEFAULT_NND_K) -> BenchReport:
    """Run the selective-classification benchmark for the chosen methods.

    Every method is scored on the same example set and summarized as a ROC
    curve. A method whose required inputs are missing raises
    :class:`ConfigurationError` naming them.
    """
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    methods = list(methods)
    if not methods:
        raise ConfigurationError("no methods requested")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigurationError(
            f"unknown method(s): {', '.join(unknown)}", unknown=unknown)

    feats = as_matrix(features, "features")
    m = feats.shape[0]
    labels = as_labels(labels, "labels", size=m)
    preds = as_labels(predictions, "predictions", size=m)
    if probs is not None:
        check_aligned({"features": m,
                       "probs": as_matrix(probs, "probs").shape[0]})

    curves: dict[str, RocCurve] = {}
    for method in methods:
        records = score_batch(method, predictions=preds, labels=labels,
                              features=feats, projector=projector,
                              prototypes=prototypes, probs=probs,
                              train_features=train_features,
                              mcd_samples=mcd_samples, nnd_k=nnd_k)
        curves[method] = roc(records)

    mispredicted = int((preds != labels).sum())
    counts = {"total": int(m), "correct": int(m - mispredicted),
              "mispredicted": mispredicted}
    meta = {
        "positive_class": "misprediction",
        "flag_rule": "score > epsilon",
        "nnd_k": int(nnd_k) if "nnd" in methods else None,
        "model_fingerprint": _model_fingerprint(projector),
        "kb_fingerprint": prototypes.kb.fingerprint() if prototypes else None,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return BenchReport(methods=curves, counts=counts, meta=meta)


def _model_fingerprint(projector: SemanticProjector | None) -> str | None:
    if projector is None or not hasattr(projector, "w_"):
        return None
    return hashlib.sha256(projector.to_json().encode("utf-8")).hexdigest()


def _json_threshold(value: float):
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def report_to_json(report: BenchReport) -> str:
    """Serialize a report; infinite thresholds become "inf"/"-inf" strings."""
    doc = {
        "methods": {
            name: {
                "auc": curve.auc,
                "points": [[f, t, _json_threshold(thr)]
                           for f, t, thr in curve.points],
            }
            for name, curve in report.methods.items()
        },
        "counts": report.counts,
        "meta": report.meta,
    }
    return json.dumps(doc, indent=1)


def report_from_json(text: str | bytes) -> BenchReport:
    doc = json.loads(text)
    methods = {}
    for name, entry in doc["methods"].items():
        points = tuple((float(f), float(t),
                        float(thr) if not isinstance(thr, str)
                        else (math.inf if thr == "inf" else -math.inf))
                       for f, t, thr in entry["points"])
        methods[name] = RocCurve(points=points, auc=float(entry["auc"]))
    return BenchReport(methods=methods, counts=dict(doc["counts"]),
                       meta=dict(doc["meta"]))


def curves_to_csv(report: BenchReport) -> str:
    """Companion plotting dump: method,fpr,tpr,threshold rows."""
    lines = ["method,fpr,tpr,threshold"]
    for name, curve in report.methods.items():
        for f, t, thr in curve.points:
            thr_text = _json_threshold(thr)
            if not isinstance(thr_text, str):
                thr_text = repr(thr_text)
            lines.append(f"{name},{f!r},{t!r},{thr_text}")
    return "\n".join(lines) + "\n"
