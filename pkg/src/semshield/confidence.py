"""Confidence scores and binarized error detection.

All scores are oriented as distances: 0 means fully confident, larger means
less confident, so one rejection threshold convention serves every method.

* ``semantic_distance`` -- cosine distance between a projected semantic
  vector and the predicted class's prototype; the package's own score.
* ``softmax_score`` -- 1 minus the winning softmax probability.
* ``nnd_score`` -- mean Euclidean distance to the k nearest training
  features (plain k-NN by linear scan, no retraining schemes).
* ``mcd_score`` -- sample variance of the predicted class's probability
  across stochastic forward passes.

``detect_error`` instead binarizes the semantic vector by per-group argmax
and checks the resulting attribute configuration against the prototype set,
yielding a human-readable explanation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ValidationError
from .knowledge import PrototypeSet
from .projection import SemanticProjector
from .validation import (as_labels, as_matrix, as_vector, check_aligned,
                         check_simplex_rows, require)

METHODS = ("semantic", "softmax", "nnd", "mcd")
DEFAULT_NND_K = 10
THREADS_ENV_VAR = "SEMSHIELD_THREADS"


def semantic_distance(s_pred, s_y) -> float:
    """Cosine distance ``1 - cos(angle)`` between two semantic vectors.

    0 is a perfect match (positive scalar multiples), 1 indicates
    orthogonality, and the full range extends to 2 for anti-parallel
    vectors. A zero ``s_pred`` carries no attribute evidence and maps to
    the orthogonality-equivalent score 1; a zero ``s_y`` is rejected
    because prototypes are never zero.
    """
    s_pred = as_vector(s_pred, "s_pred")
    s_y = as_vector(s_y, "s_y", size=s_pred.size)
    norm_y = float(np.linalg.norm(s_y))
    if norm_y == 0.0:
        raise ValidationError("s_y must be nonzero (prototypes are never zero)")
    norm_pred = float(np.linalg.norm(s_pred))
    if norm_pred == 0.0:
        return 1.0
    cos = float(np.dot(s_pred, s_y)) / (norm_pred * norm_y)
    # guard against |cos| drifting past 1 by round-off
    return 1.0 - min(1.0, max(-1.0, cos))


@dataclass(frozen=True)
class Explanation:
    """Binarized reading of a semantic vector, one entry per attribute group.

    ``per_group`` holds (group name, winning value name, winning weight)
    in knowledge-base group order. ``is_valid`` says whether the binarized
    configuration matches any class prototype at all; ``matches_predicted``
    whether it matches the predicted class's prototype.
    """

    per_group: tuple[tuple[str, str, float], ...]
    is_valid: bool
    matches_predicted: bool

    @property
    def attributes_text(self) -> str:
        """Readable attribute string, e.g. "round, red, crossed out, ..."."""
        return ", ".join(value for _, value, _ in self.per_group)


def detect_error(s_pred, predicted: int, protos: PrototypeSet) -> Explanation:
    """Binarize ``s_pred`` by per-group argmax and compare to the prototypes.

    Ties within a group resolve to the lowest value index, so detection is
    deterministic. Raises ValidationError when the vector length does not
    match the prototype layout.
    """
    s_pred = as_vector(s_pred, "s_pred")
    kb = protos.kb
    if s_pred.size != protos.k:
        raise ValidationError(
            f"semantic vector has length {s_pred.size} but the knowledge "
            f"base layout has k={protos.k}",
            vector_length=int(s_pred.size), k=int(protos.k))
    if not 0 <= predicted < protos.count:
        raise ValidationError(
            f"predicted class {predicted} outside [0, {protos.count})",
            predicted=predicted, n_classes=protos.count)

    entries = []
    config = []
    for group, seg in zip(kb.groups, kb.group_slices()):
        segment = s_pred[seg]
        idx = int(np.argmax(segment))  # argmax takes the lowest index on ties
        config.append(idx)
        entries.append((group.name, group.values[idx], float(segment[idx])))
    config_t = tuple(config)
    is_valid = kb.config_class(config_t) is not None
    matches = config_t == kb.classes[predicted].value_indices
    return Explanation(per_group=tuple(entries), is_valid=is_valid,
                       matches_predicted=matches)


def softmax_score(probs) -> float:
    """Distance-oriented softmax confidence: ``1 - max(probs)``."""
    p = as_vector(probs, "probs")
    if p.size == 0:
        raise ValidationError("probs must be nonempty")
    check_simplex_rows(p[None, :], "probs")
    return max(0.0, 1.0 - float(np.max(p)))


def nnd_score(feature, train_features, k: int = DEFAULT_NND_K) -> float:
    """Mean Euclidean distance to the k nearest training feature rows."""
    f = as_vector(feature, "feature")
    train = as_matrix(train_features, "train_features", cols=f.size)
    m = train.shape[0]
    if m == 0:
        raise ValidationError("training feature set is empty")
    if not 1 <= k <= m:
        raise ValidationError(
            f"k must be in [1, {m}] (training rows), got {k}", k=k, rows=m)
    diff = train - f
    dists = np.sqrt(np.sum(diff * diff, axis=1))
    nearest = np.partition(dists, k - 1)[:k]
    return float(np.mean(nearest))


def mcd_score(samples, predicted: int) -> float:
    """Unbiased variance of the predicted class's probability over passes.

    ``samples`` is a (T, c) matrix of per-pass softmax outputs, T >= 2.
    """
    s = as_matrix(samples, "samples")
    if s.shape[0] < 2:
        raise ValidationError(
            f"need at least 2 stochastic passes, got {s.shape[0]}",
            passes=int(s.shape[0]))
    check_simplex_rows(s, "samples")
    if not 0 <= predicted < s.shape[1]:
        raise ValidationError(
            f"predicted class {predicted} outside [0, {s.shape[1]})",
            predicted=predicted, n_classes=int(s.shape[1]))
    return float(np.var(s[:, predicted], ddof=1))


@dataclass(frozen=True)
class ScoreRecord:
    """One scored example: identity, prediction, optional truth, score."""

    example_id: int
    predicted: int
    true: int | None
    score: float
    method: str

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(f"unknown method '{self.method}'",
                                  method=self.method)
        if not np.isfinite(self.score) or self.score < 0:
            raise ValidationError(
                f"score must be finite and >= 0, got {self.score}",
                score=self.score)


def thread_cap() -> int:
    """Worker cap for per-example scoring loops (SEMSHIELD_THREADS, >= 1)."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise ValidationError(
            f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
    if cap < 1:
        raise ValidationError(
            f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}")
    return cap


def _map_ordered(fn, count: int) -> list:
    """Apply ``fn`` to 0..count-1, in-order results, optionally threaded."""
    cap = thread_cap()
    if cap <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, range(count)))


def score_batch(method: str, *, predictions, labels=None, features=None,
                projector: SemanticProjector | None = None,
                prototypes: PrototypeSet | None = None,
                probs=None, train_features=None, mcd_samples=None,
                nnd_k: int = DEFAULT_NND_K) -> list[ScoreRecord]:
    """Score every example with one method, ordered by example id.

    Each method needs a subset of the keyword inputs; a missing one raises
    :class:`ConfigurationError` naming it. ``labels`` is optional and only
    carried through into the records (evaluation needs it, scoring not).
    """
    if method not in METHODS:
        raise ConfigurationError(
            f"unknown method '{method}'; choose from {', '.join(METHODS)}",
            method=method)

    n_classes = None
    if prototypes is not None:
        n_classes = prototypes.count
    elif probs is not None:
        n_classes = as_matrix(probs, "probs").shape[1]
    preds = as_labels(predictions, "predictions", n_classes=n_classes)
    m = preds.size
    truth = None
    if labels is not None:
        truth = as_labels(labels, "labels", size=m)

    if method == "semantic":
        require({"features": features, "projector": projector,
                 "prototypes": prototypes}, method)
        feats = as_matrix(features, "features", rows=m)
        projector.check_kb(prototypes.kb)
        semantic = projector.transform(feats)
        scores = _map_ordered(
            lambda i: semantic_distance(semantic[i],
                                        prototypes.vector(int(preds[i]))), m)
    elif method == "softmax":
        require({"probs": probs}, method)
        p = as_matrix(probs, "probs", rows=m)
        scores = _map_ordered(lambda i: softmax_score(p[i]), m)
    elif method == "nnd":
        require({"features": features, "train_features": train_features},
                method)
        feats = as_matrix(features, "features", rows=m)
        train = as_matrix(train_features, "train_features",
                          cols=feats.shape[1] if m else None)
        scores = _map_ordered(lambda i: nnd_score(feats[i], train, k=nnd_k), m)
    else:  # mcd
        require({"mcd_samples": mcd_samples}, method)
        samples = np.asarray(mcd_samples, dtype=np.float64)
        if samples.ndim != 3:
            raise ValidationError(
                f"mcd_samples must be (examples, passes, classes), "
                f"got ndim={samples.ndim}")
        check_aligned({"predictions": m, "mcd_samples": samples.shape[0]})
        scores = _map_ordered(lambda i: mcd_score(samples[i], int(preds[i])), m)

    return [ScoreRecord(example_id=i, predicted=int(preds[i]),
                        true=None if truth is None else int(truth[i]),
                        score=float(scores[i]), method=method)
            for i in range(m)]
