"""Linear projection from classifier features into the semantic space.

The projection matrix ``w`` (k x n) maps a feature vector ``f`` to a
semantic vector ``s = w @ f``. It is fitted with a tied-weights
reconstruction constraint: the same matrix projects back into feature
space, and the combined objective

    J(w) = ||F^T - w^T S^T||_F^2 + lam * ||w F^T - S^T||_F^2

(with features ``F`` stored examples-by-features, annotations ``S``
examples-by-attributes) has the closed-form stationarity condition

    (S^T S) w + w (lam F^T F) = (1 + lam) S^T F,

a Sylvester equation with symmetric PSD coefficients, solved by
:func:`semshield.linalg.sylvester_solve`. No iteration, no random
initialization: fitting is deterministic.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import NumericalError, ShapeError, SingularSystemError, ValidationError
from .knowledge import KnowledgeBase
from .linalg import sylvester_solve
from .validation import as_labels, as_matrix, as_vector

FIT_RESIDUAL_TOL = 1e-6
MODEL_FORMAT = "semshield-projection/1"


def sae_objective(w, features, annotations, lam: float) -> float:
    """Tied-weights objective J(w); the fit minimizes this exactly."""
    w = as_matrix(w, "w")
    f = as_matrix(features, "features")
    s = as_matrix(annotations, "annotations", rows=f.shape[0])
    recon = f.T - w.T @ s.T
    proj = w @ f.T - s.T
    return float(np.sum(recon * recon) + lam * np.sum(proj * proj))


def fit_projection(features, annotations, lam: float,
                   ridge: float = 0.0) -> tuple[np.ndarray, float]:
    """Solve the projection's normal equations.

    Parameters
    ----------
    features : array_like of shape (m, n)
    annotations : array_like of shape (m, k)
        Row i is the semantic annotation of example i.
    lam : float
        Weight of the projection term; must be > 0. 0.1 is a good default.
    ridge : float
        Optional Tikhonov term used only when the system is singular
        (degenerate inputs, e.g. a single example).

    Returns
    -------
    (w, residual)
        ``w`` of shape (k, n) and the relative residual of the linear
        system it solves (always <= 1e-6 on success).

    Raises
    ------
    SingularSystemError
        If the system is singular and ``ridge`` is 0; increasing ``lam``
        with richer features, or passing ``ridge > 0``, regularizes it.
    """
    f = as_matrix(features, "features")
    s = as_matrix(annotations, "annotations")
    if f.shape[0] != s.shape[0]:
        raise ShapeError(
            f"row count mismatch: features has {f.shape[0]} rows, "
            f"annotations has {s.shape[0]}",
            features_rows=int(f.shape[0]), annotations_rows=int(s.shape[0]))
    if f.shape[0] < 1:
        raise ValidationError("fit needs at least one example", rows=0)
    if not lam > 0:
        raise ValidationError(f"lambda must be > 0, got {lam}", lam=lam)

    a = s.T @ s
    b = lam * (f.T @ f)
    c = (1.0 + lam) * (s.T @ f)
    try:
        w = sylvester_solve(a, b, c, ridge=ridge)
    except SingularSystemError as exc:
        raise SingularSystemError(
            f"{exc.message}; the fit inputs are rank-deficient, increase "
            f"lambda with richer features or pass ridge > 0",
            **exc.context) from exc

    residual = _system_residual(a, b, c, w)
    if residual > FIT_RESIDUAL_TOL and ridge > 0:
        # ridge path: residual is measured against the regularized system
        residual = _system_residual(a, b, c, w, ridge=ridge)
    if residual > FIT_RESIDUAL_TOL:
        raise NumericalError(
            f"fit residual {residual:.3e} exceeds {FIT_RESIDUAL_TOL}",
            residual=float(residual))
    return w, residual


def _system_residual(a, b, c, w, ridge: float = 0.0) -> float:
    lhs = a @ w + w @ b
    if ridge:
        lhs = lhs + ridge * w
    return float(np.linalg.norm(lhs - c)) / max(1.0, float(np.linalg.norm(c)))


class SemanticProjector(TransformerMixin, BaseEstimator):
    """Project classifier features into a knowledge-base attribute space.

    Parameters
    ----------
    kb : KnowledgeBase, optional
        Supplies per-class annotations when fitting from integer labels,
        and its content hash is stored so scoring against a different
        knowledge base is detected instead of silently producing garbage.
    lam : float, default=0.1
        Weight of the projection term of the tied-weights objective.
    ridge : float, default=0.0
        Regularization used only when the normal equations are singular;
        the default errors instead, so degenerate inputs are never masked.
    standardize : bool, default=False
        Standardize features (per-feature mean/variance from the training
        set) before fitting and projecting.

    Attributes
    ----------
    w_ : ndarray of shape (k, n)
        Fitted projection matrix.
    residual_ : float
        Relative residual of the solved linear system.
    kb_fingerprint_ : str
        Content hash of the knowledge base used at fit time ("" when
        fitted from a raw annotation matrix).

    Examples
    --------
    >>> proj = SemanticProjector(kb=kb, lam=0.1).fit(features, labels)
    >>> semantic = proj.transform(features)  # (m, kb.k)
    """

    def __init__(self, kb: KnowledgeBase | None = None, lam: float = 0.1,
                 ridge: float = 0.0, standardize: bool = False) -> None:
        self.kb = kb
        self.lam = lam
        self.ridge = ridge
        self.standardize = standardize

    def fit(self, X, y=None, annotations=None) -> "SemanticProjector":
        """Fit the projection from features plus labels or annotations.

        Exactly one of ``y`` (integer class labels, requires ``kb``) or
        ``annotations`` (an (m, k) matrix) must be provided.
        """
        X = as_matrix(X, "features")
        if (y is None) == (annotations is None):
            raise ValidationError(
                "provide exactly one of y (class labels) or annotations")
        if annotations is None:
            if self.kb is None:
                raise ValidationError(
                    "fitting from labels requires a knowledge base")
            y = as_labels(y, "labels", n_classes=self.kb.n_classes,
                          size=X.shape[0])
            annotations = self.kb.annotate(y)
            fingerprint = self.kb.fingerprint()
        else:
            annotations = as_matrix(annotations, "annotations")
            fingerprint = self.kb.fingerprint() if self.kb is not None else ""

        work = X
        if self.standardize:
            self.feature_mean_ = X.mean(axis=0)
            scale = X.std(axis=0)
            scale[scale == 0] = 1.0
            self.feature_scale_ = scale
            work = (X - self.feature_mean_) / self.feature_scale_
        else:
            self.feature_mean_ = None
            self.feature_scale_ = None

        self.w_, self.residual_ = fit_projection(work, annotations, self.lam,
                                                 ridge=self.ridge)
        self.n_features_in_ = X.shape[1]
        self.k_ = self.w_.shape[0]
        self.kb_fingerprint_ = fingerprint
        return self

    def _require_fitted(self) -> None:
        if not hasattr(self, "w_"):
            raise ValidationError("projector is not fitted; call fit() first")

    def _prepare(self, X: np.ndarray) -> np.ndarray:
        if self.feature_mean_ is not None:
            return (X - self.feature_mean_) / self.feature_scale_
        return X

    def project(self, feature) -> np.ndarray:
        """Semantic vector ``w @ f`` of a single feature vector."""
        self._require_fitted()
        f = as_vector(feature, "feature", size=self.n_features_in_)
        return self.w_ @ self._prepare(f[None, :])[0]

    def transform(self, X) -> np.ndarray:
        """Row-wise projection: an (m, n) batch maps to an (m, k) batch."""
        self._require_fitted()
        X = as_matrix(X, "features", cols=self.n_features_in_)
        if X.shape[0] == 0:
            return np.zeros((0, self.k_))
        return self._prepare(X) @ self.w_.T

    def to_json(self) -> str:
        """Serialize the fitted model; floats round-trip bit-exactly."""
        self._require_fitted()
        doc = {
            "format": MODEL_FORMAT,
            "k": int(self.k_),
            "n": int(self.n_features_in_),
            "lambda": float(self.lam),
            "ridge": float(self.ridge),
            "kb_fingerprint": self.kb_fingerprint_,
            "standardize": bool(self.standardize),
            "feature_mean": (None if self.feature_mean_ is None
                             else self.feature_mean_.tolist()),
            "feature_scale": (None if self.feature_scale_ is None
                              else self.feature_scale_.tolist()),
            "residual": float(self.residual_),
            "w": self.w_.tolist(),
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str | bytes) -> "SemanticProjector":
        """Rebuild a fitted projector from :meth:`to_json` output."""
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"model file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
            raise ValidationError(
                f"unrecognized model format: {doc.get('format')!r}")
        try:
            k, n = int(doc["k"]), int(doc["n"])
            model = cls(lam=float(doc["lambda"]), ridge=float(doc["ridge"]),
                        standardize=bool(doc["standardize"]))
            model.w_ = as_matrix(doc["w"], "w", rows=k, cols=n)
            model.n_features_in_ = n
            model.k_ = k
            model.kb_fingerprint_ = str(doc["kb_fingerprint"])
            model.residual_ = float(doc.get("residual", 0.0))
            mean = doc.get("feature_mean")
            scale = doc.get("feature_scale")
            model.feature_mean_ = None if mean is None else as_vector(
                mean, "feature_mean", size=n)
            model.feature_scale_ = None if scale is None else as_vector(
                scale, "feature_scale", size=n)
        except KeyError as exc:
            raise ValidationError(f"model file is missing key {exc}") from exc
        if not model.lam > 0:
            raise ValidationError(f"lambda must be > 0, got {model.lam}")
        return model

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SemanticProjector":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def check_kb(self, kb: KnowledgeBase) -> None:
        """Verify ``kb`` matches the knowledge base used at fit time."""
        self._require_fitted()
        if kb.k != self.k_:
            raise ValidationError(
                f"knowledge base has k={kb.k} but model was fitted with "
                f"k={self.k_}", kb_k=kb.k, model_k=int(self.k_))
        if self.kb_fingerprint_ and kb.fingerprint() != self.kb_fingerprint_:
            raise ValidationError(
                "knowledge base content differs from the one used at fit "
                "time (fingerprint mismatch)",
                expected=self.kb_fingerprint_, actual=kb.fingerprint())
