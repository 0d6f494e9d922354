"""Semantic-embedding confidence scoring and error detection for classifiers.

Projects a pretrained classifier's features into a human-readable attribute
space defined by a symbolic knowledge base, then uses the distance between
a projection and the predicted class's attribute prototype as a confidence
score, with per-attribute explanations for detected errors.
"""

from .confidence import (Explanation, METHODS, ScoreRecord, detect_error,
                         mcd_score, nnd_score, score_batch, semantic_distance,
                         softmax_score)
from .errors import (ConfigurationError, ConvergenceError, NumericalError,
                     SemshieldError, ShapeError, SingularSystemError,
                     ValidationError)
from .evaluation import (BenchReport, RocCurve, bench, curves_to_csv,
                         rank_auc, report_from_json, report_to_json, roc,
                         selective_accuracy)
from .knowledge import (AttributeGroup, KnowledgeBase, PrototypeSet,
                        bundled_kb_path, load_bundled_kb, load_kb,
                        load_kb_file)
from .linalg import SymEigen, matmul, sylvester_residual, sylvester_solve, sym_eigen
from .projection import SemanticProjector, fit_projection, sae_objective
from .synthetic import SynthConfig, SynthData, generate

__version__ = "0.1.0"

__all__ = [
    "AttributeGroup",
    "BenchReport",
    "ConfigurationError",
    "ConvergenceError",
    "Explanation",
    "KnowledgeBase",
    "METHODS",
    "NumericalError",
    "PrototypeSet",
    "RocCurve",
    "ScoreRecord",
    "SemanticProjector",
    "SemshieldError",
    "ShapeError",
    "SingularSystemError",
    "SymEigen",
    "SynthConfig",
    "SynthData",
    "ValidationError",
    "bench",
    "bundled_kb_path",
    "curves_to_csv",
    "detect_error",
    "fit_projection",
    "generate",
    "load_bundled_kb",
    "load_kb",
    "load_kb_file",
    "matmul",
    "mcd_score",
    "nnd_score",
    "rank_auc",
    "report_from_json",
    "report_to_json",
    "roc",
    "sae_objective",
    "score_batch",
    "selective_accuracy",
    "semantic_distance",
    "softmax_score",
    "sylvester_residual",
    "sylvester_solve",
    "sym_eigen",
]
