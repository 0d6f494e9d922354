"""Seeded synthetic classifier emulation for end-to-end pipeline testing.

Emulates a feature extractor plus classifier on a clustered feature space:
one centroid per class, isotropic Gaussian noise, and a controllable
fraction of "mispredicted" test examples whose features are drawn from a
blend of the true and a wrong class's centroids (ambiguous inputs) and
whose predicted label is the wrong class. Softmax rows are peaked for
clean examples and flatter for blended ones, and the stochastic-pass
tensor uses a larger logit jitter for blended examples.

Class centroids are a random isometric embedding of the knowledge base's
(jittered) prototype vectors, so the feature space genuinely encodes the
task's semantic attributes -- the property a well-trained classifier's
hidden layer has and the one that makes a linear semantic projection
meaningful. Centroids are then rescaled so the closest pair sits far above
the noise (see ``TARGET_SEPARATION_FACTOR``).

The misprediction count is exact (``round(rate * test_examples)``), chosen
by a seeded permutation rather than Bernoulli draws, so tests have fixed
denominators. All randomness comes from one counter-based Philox stream;
the generator name and seed are recorded in the output metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .knowledge import KnowledgeBase

RNG_NAME = "Philox4x64-10 (numpy.random.Philox)"
MIN_SEPARATION_FACTOR = 10.0   # required: centroids at least this many sigma apart
TARGET_SEPARATION_FACTOR = 30.0  # enforced: comfortable margin above the floor
PROTOTYPE_JITTER = 0.05        # per-coordinate noise on prototypes before embedding
CLEAN_LOGIT_JITTER = 0.3
BLENDED_LOGIT_JITTER = 1.2


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings; ``classes`` must match the knowledge base."""

    kb: KnowledgeBase
    seed: int = 7
    classes: int = 43
    feature_dim: int = 64
    train_per_class: int = 50
    test_per_class: int = 20
    sigma: float = 1.0
    misprediction_rate: float = 0.05
    mcd_passes: int = 20

    def __post_init__(self) -> None:
        if self.classes != self.kb.n_classes:
            raise ValidationError(
                f"config declares {self.classes} classes but the knowledge "
                f"base defines {self.kb.n_classes}",
                classes=self.classes, kb_classes=self.kb.n_classes)
        if not 0.0 <= self.misprediction_rate <= 1.0:
            raise ValidationError(
                f"misprediction rate must be in [0, 1], got "
                f"{self.misprediction_rate}", rate=self.misprediction_rate)
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be > 0, got {self.sigma}",
                                  sigma=self.sigma)
        if self.feature_dim < self.kb.k:
            raise ValidationError(
                f"feature_dim must be >= the semantic dimensionality "
                f"k={self.kb.k} so features can encode the attributes, "
                f"got {self.feature_dim}",
                feature_dim=self.feature_dim, k=self.kb.k)
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise ValidationError("need at least one example per class")
        if self.mcd_passes < 2:
            raise ValidationError(
                f"mcd_passes must be >= 2, got {self.mcd_passes}",
                passes=self.mcd_passes)


@dataclass(frozen=True)
class SynthData:
    """Everything the pipeline consumes, plus provenance metadata."""

    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    predictions: np.ndarray
    probs: np.ndarray
    mcd_samples: np.ndarray
    centroids: np.ndarray
    meta: dict = field(default_factory=dict)


def generate(cfg: SynthConfig) -> SynthData:
    """Generate a full synthetic train/test run, deterministic in the seed."""
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    c, n, sigma = cfg.classes, cfg.feature_dim, cfg.sigma

    centroids = _separated_centroids(rng, cfg.kb, n, sigma)

    train_labels = np.repeat(np.arange(c), cfg.train_per_class)
    train_features = (centroids[train_labels]
                      + rng.normal(0.0, sigma, (train_labels.size, n)))

    test_labels = np.repeat(np.arange(c), cfg.test_per_class)
    m_test = test_labels.size
    test_features = (centroids[test_labels]
                     + rng.normal(0.0, sigma, (m_test, n)))
    predictions = test_labels.copy()

    n_bad = int(round(cfg.misprediction_rate * m_test))
    corrupted = np.sort(rng.permutation(m_test)[:n_bad])
    for i in corrupted:
        true = int(test_labels[i])
        wrong = int(rng.integers(c - 1))
        if wrong >= true:
            wrong += 1
        alpha = rng.uniform(0.55, 0.75)  # lean toward the true class
        test_features[i] = (alpha * centroids[true]
                            + (1.0 - alpha) * centroids[wrong]
                            + rng.normal(0.0, sigma, n))
        predictions[i] = wrong

    is_blended = np.zeros(m_test, dtype=bool)
    is_blended[corrupted] = True
    probs = _softmax_rows(rng, predictions, test_labels, is_blended, c)
    mcd = _mcd_tensor(rng, probs, is_blended, cfg.mcd_passes)

    meta = {
        "generator": RNG_NAME,
        "seed": int(cfg.seed),
        "mispredictions": int(n_bad),
        "test_examples": int(m_test),
        "train_examples": int(train_labels.size),
        "centroid_min_distance": float(_min_pairwise(centroids)),
        "sigma": float(sigma),
        "kb_fingerprint": cfg.kb.fingerprint(),
    }
    return SynthData(train_features=train_features, train_labels=train_labels,
                     test_features=test_features, test_labels=test_labels,
                     predictions=predictions, probs=probs, mcd_samples=mcd,
                     centroids=centroids, meta=meta)


def _min_pairwise(points: np.ndarray) -> float:
    diff = points[:, None, :] - points[None, :, :]
    dists = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(dists, np.inf)
    return float(dists.min())


def _separated_centroids(rng: np.random.Generator, kb: KnowledgeBase,
                         n: int, sigma: float) -> np.ndarray:
    """Embed the jittered class prototypes isometrically into feature space,
    rescaled so the closest centroid pair sits at TARGET_SEPARATION_FACTOR
    * sigma (comfortably above the 10-sigma floor that keeps clean examples
    nearest their own centroid)."""
    protos = kb.prototypes().matrix
    c, k = protos.shape
    jittered = protos + rng.normal(0.0, PROTOTYPE_JITTER, (c, k))
    basis, _ = np.linalg.qr(rng.normal(0.0, 1.0, (n, k)))  # orthonormal columns
    raw = jittered @ basis.T
    min_d = _min_pairwise(raw)
    if not min_d > 0:
        raise NumericalError("degenerate centroid draw: coincident centroids")
    return raw * (TARGET_SEPARATION_FACTOR * sigma / min_d)


def _softmax_rows(rng: np.random.Generator, predictions: np.ndarray,
                  labels: np.ndarray, is_blended: np.ndarray,
                  c: int) -> np.ndarray:
    m = predictions.size
    probs = np.zeros((m, c))
    for i in range(m):
        pred = int(predictions[i])
        row = np.zeros(c)
        if is_blended[i]:
            top = rng.uniform(0.55, 0.95)
            runner = rng.uniform(0.5, 0.9) * (1.0 - top)
            rest = rng.random(c) * 0.01
            row[:] = rest
            row[int(labels[i])] = runner
            row[pred] = top
        else:
            top = rng.uniform(0.90, 0.999)
            rest = rng.random(c) * 0.01
            row[:] = rest
            row[pred] = top
        probs[i] = row / row.sum()
    return probs


def _mcd_tensor(rng: np.random.Generator, probs: np.ndarray,
                is_blended: np.ndarray, passes: int) -> np.ndarray:
    m, c = probs.shape
    out = np.zeros((m, passes, c))
    logits = np.log(probs + 1e-12)
    for i in range(m):
        jitter = BLENDED_LOGIT_JITTER if is_blended[i] else CLEAN_LOGIT_JITTER
        noisy = logits[i][None, :] + rng.normal(0.0, jitter, (passes, c))
        noisy -= noisy.max(axis=1, keepdims=True)
        exp = np.exp(noisy)
        out[i] = exp / exp.sum(axis=1, keepdims=True)
    return out
