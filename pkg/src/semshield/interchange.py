"""File formats bridging the CLI, the synthetic generator, and extractors.

Matrices travel as headerless comma-separated CSV with full-precision
decimal floats and LF line endings; labels and predictions as single
integer columns; stochastic-pass tensors in long form (example_id,
pass_id, then one probability column per class). Structured artifacts
(models, reports, generator configs) are JSON. Every writer's output is
accepted by the matching reader.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .knowledge import load_kb_file, load_bundled_kb
from .synthetic import SynthConfig, SynthData
from .validation import as_matrix, check_aligned, check_simplex_rows

_CONFIG_KEYS = {"seed", "classes", "feature_dim", "train_per_class",
                "test_per_class", "sigma", "misprediction_rate",
                "mcd_passes", "kb"}


def _format_float(x: float) -> str:
    return repr(float(x))


def write_matrix_csv(path, matrix) -> None:
    m = as_matrix(matrix, "matrix")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in m:
            fh.write(",".join(_format_float(x) for x in row))
            fh.write("\n")


def read_matrix_csv(path, name: str = "matrix",
                    cols: int | None = None) -> np.ndarray:
    rows: list[list[float]] = []
    width: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ValidationError(
                    f"{name} ({path}): line {lineno} has {len(parts)} fields, "
                    f"expected {width}", name=name, line=lineno)
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValidationError(
                    f"{name} ({path}): line {lineno} is not numeric: {exc}",
                    name=name, line=lineno) from exc
    if not rows:
        return np.zeros((0, cols or 0))
    return as_matrix(np.array(rows), name, cols=cols)


def write_labels_csv(path, labels) -> None:
    arr = np.asarray(labels, dtype=np.int64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for value in arr:
            fh.write(f"{int(value)}\n")


def read_labels_csv(path, name: str = "labels",
                    n_classes: int | None = None) -> np.ndarray:
    values: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError as exc:
                raise ValidationError(
                    f"{name} ({path}): line {lineno} is not an integer",
                    name=name, line=lineno) from exc
    arr = np.array(values, dtype=np.int64)
    if n_classes is not None and arr.size:
        bad = np.flatnonzero((arr < 0) | (arr >= n_classes))
        if bad.size:
            raise ValidationError(
                f"{name} ({path}): line {bad[0] + 1} has class "
                f"{arr[bad[0]]} outside [0, {n_classes})",
                name=name, line=int(bad[0]) + 1)
    return arr


def read_probs_csv(path, n_classes: int | None = None) -> np.ndarray:
    probs = read_matrix_csv(path, "probs", cols=n_classes)
    check_simplex_rows(probs, "probs")
    return probs


def write_mcd_csv(path, samples) -> None:
    """Long-form dump of an (examples, passes, classes) tensor."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 3:
        raise ValidationError(
            f"mcd samples must be 3-D (examples, passes, classes), "
            f"got ndim={arr.ndim}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(arr.shape[0]):
            for t in range(arr.shape[1]):
                fh.write(f"{i},{t},")
                fh.write(",".join(_format_float(x) for x in arr[i, t]))
                fh.write("\n")


def read_mcd_csv(path, n_classes: int | None = None) -> np.ndarray:
    """Rebuild the (examples, passes, classes) tensor from long form.

    Rows must cover the full examples x passes grid exactly once; row order
    inside the file does not matter.
    """
    raw = read_matrix_csv(path, "mcd")
    if raw.shape[0] == 0:
        return np.zeros((0, 0, n_classes or 0))
    if raw.shape[1] < 3:
        raise ValidationError(
            "mcd rows need example_id, pass_id and probability columns")
    ids = raw[:, 0]
    passes = raw[:, 1]
    if not (np.array_equal(ids, ids.astype(np.int64))
            and np.array_equal(passes, passes.astype(np.int64))):
        raise ValidationError("mcd example_id and pass_id must be integers")
    ids = ids.astype(np.int64)
    passes = passes.astype(np.int64)
    m = int(ids.max()) + 1
    t = int(passes.max()) + 1
    c = raw.shape[1] - 2
    if n_classes is not None and c != n_classes:
        raise ValidationError(
            f"mcd has {c} probability columns, expected {n_classes}",
            actual=c, expected=n_classes)
    if raw.shape[0] != m * t:
        raise ValidationError(
            f"mcd must cover a complete grid: found {raw.shape[0]} rows "
            f"for {m} examples x {t} passes", rows=int(raw.shape[0]),
            examples=m, passes=t)
    out = np.full((m, t, c), np.nan)
    out[ids, passes] = raw[:, 2:]
    if np.isnan(out).any():
        raise ValidationError("mcd grid has duplicate or missing "
                              "(example_id, pass_id) rows")
    check_simplex_rows(out.reshape(-1, c), "mcd")
    return out


@dataclass(frozen=True)
class InterchangeSet:
    """A complete benchmark input set as loaded from disk."""

    features: np.ndarray
    labels: np.ndarray
    predictions: np.ndarray
    probs: np.ndarray | None = None
    mcd_samples: np.ndarray | None = None
    train_features: np.ndarray | None = None
    train_labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        counts = {"features": self.features.shape[0],
                  "labels": self.labels.size,
                  "predictions": self.predictions.size}
        if self.probs is not None:
            counts["probs"] = self.probs.shape[0]
        if self.mcd_samples is not None:
            counts["mcd"] = self.mcd_samples.shape[0]
        check_aligned(counts)
        if self.train_features is not None and self.train_labels is not None:
            check_aligned({"train_features": self.train_features.shape[0],
                           "train_labels": self.train_labels.size})


SYNTH_FILES = {
    "train_features": "train_features.csv",
    "train_labels": "train_labels.csv",
    "features": "features.csv",
    "labels": "labels.csv",
    "predictions": "predictions.csv",
    "probs": "probs.csv",
    "mcd": "mcd.csv",
    "meta": "meta.json",
}


def write_synth_dir(out_dir, data: SynthData) -> dict[str, str]:
    """Write a generated data set as one directory of interchange files."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {key: os.path.join(out_dir, fname)
             for key, fname in SYNTH_FILES.items()}
    write_matrix_csv(paths["train_features"], data.train_features)
    write_labels_csv(paths["train_labels"], data.train_labels)
    write_matrix_csv(paths["features"], data.test_features)
    write_labels_csv(paths["labels"], data.test_labels)
    write_labels_csv(paths["predictions"], data.predictions)
    write_matrix_csv(paths["probs"], data.probs)
    write_mcd_csv(paths["mcd"], data.mcd_samples)
    with open(paths["meta"], "w", encoding="utf-8") as fh:
        json.dump(data.meta, fh, indent=1)
        fh.write("\n")
    return paths


def load_interchange_dir(directory, n_classes: int | None = None) -> InterchangeSet:
    """Load a directory written by :func:`write_synth_dir`."""
    paths = {key: os.path.join(directory, fname)
             for key, fname in SYNTH_FILES.items()}
    return InterchangeSet(
        features=read_matrix_csv(paths["features"], "features"),
        labels=read_labels_csv(paths["labels"], "labels", n_classes=n_classes),
        predictions=read_labels_csv(paths["predictions"], "predictions",
                                    n_classes=n_classes),
        probs=read_probs_csv(paths["probs"], n_classes=n_classes),
        mcd_samples=read_mcd_csv(paths["mcd"], n_classes=n_classes),
        train_features=read_matrix_csv(paths["train_features"],
                                       "train_features"),
        train_labels=read_labels_csv(paths["train_labels"], "train_labels",
                                     n_classes=n_classes),
    )


def load_synth_config(path) -> SynthConfig:
    """Parse a generator config file; ``kb`` is a path or null (bundled)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(
            f"unknown config key(s): {', '.join(sorted(unknown))}",
            unknown=sorted(unknown))

    kb_ref = doc.get("kb")
    if kb_ref:
        kb_path = kb_ref
        if not os.path.isabs(kb_path):
            kb_path = os.path.join(os.path.dirname(os.path.abspath(path)),
                                   kb_path)
        kb = load_kb_file(kb_path)
    else:
        kb = load_bundled_kb()

    kwargs = {k: doc[k] for k in _CONFIG_KEYS - {"kb"} if k in doc}
    try:
        return SynthConfig(kb=kb, **kwargs)
    except TypeError as exc:
        raise ValidationError(f"bad config value: {exc}") from exc


def bundled_config_path() -> str:
    from importlib import resources
    return str(resources.files("semshield.data") / "synth_config.json")
