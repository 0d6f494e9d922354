"""Export a trained torch classifier's internals as interchange files.

Runs a user-supplied model over a dataset and writes the files the
semshield CLI consumes: hidden-layer features, softmax outputs,
predictions, and optionally T stochastic forward passes with dropout
active. No score is computed here; every formula lives on the scoring
side, this adapter only moves data across the file-format boundary.

File formats (matching the semshield interchange contract):

* ``features.csv``     headerless CSV, one feature row per example
* ``labels.csv``       one integer class index per line
* ``predictions.csv``  one integer class index per line (argmax of probs)
* ``probs.csv``        headerless CSV of softmax rows
* ``mcd.csv``          long form: example_id, pass_id, per-class probs
* ``meta.json``        provenance: model, layer, seed, pass count

Floats are serialized with full precision (``repr``) so nothing drifts
between this exporter and the scoring side.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn


class ExtractionError(Exception):
    """Raised for unusable specs, models, or datasets."""


@dataclass(frozen=True)
class ExtractionSpec:
    """What to extract: model, feature layer, dataset, pass count, seed.

    ``mcd_passes=None`` skips the stochastic-pass export entirely;
    otherwise at least 2 passes are required.
    """

    model_path: str
    layer: str
    data_path: str
    out_dir: str
    mcd_passes: int | None = 100
    seed: int = 0
    kb_path: str | None = None

    def __post_init__(self) -> None:
        if self.mcd_passes is not None and self.mcd_passes < 2:
            raise ExtractionError(
                f"mcd_passes must be >= 2 when stochastic export is "
                f"requested, got {self.mcd_passes}")


def _load_model(path: str) -> nn.Module:
    try:
        model = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as pickle_exc:
        try:
            return torch.jit.load(path, map_location="cpu")
        except Exception:
            raise ExtractionError(
                f"cannot load model from {path}: {pickle_exc}") from pickle_exc
    if not isinstance(model, nn.Module):
        raise ExtractionError(
            f"{path} does not contain an nn.Module (got {type(model).__name__})")
    return model


def _load_dataset(path: str) -> tuple[torch.Tensor, np.ndarray]:
    try:
        archive = np.load(path)
    except Exception as exc:
        raise ExtractionError(f"cannot load dataset from {path}: {exc}") from exc
    for key in ("images", "labels"):
        if key not in archive:
            raise ExtractionError(f"dataset {path} is missing array '{key}'")
    images = torch.as_tensor(np.asarray(archive["images"]),
                             dtype=torch.float32)
    labels = np.asarray(archive["labels"]).astype(np.int64)
    if labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise ExtractionError(
            f"dataset arrays misaligned: {tuple(images.shape)} images vs "
            f"{labels.shape} labels")
    return images, labels


def _find_layer(model: nn.Module, name: str) -> nn.Module:
    modules = dict(model.named_modules())
    modules.pop("", None)
    if name not in modules:
        available = ", ".join(sorted(modules)) or "<none>"
        raise ExtractionError(
            f"layer '{name}' not found; available layers: {available}")
    return modules[name]


def _dropout_modules(model: nn.Module) -> list[nn.Module]:
    return [m for m in model.modules()
            if isinstance(m, nn.modules.dropout._DropoutNd)]


def _forward_probs(model: nn.Module, images: torch.Tensor) -> torch.Tensor:
    logits = model(images)
    if logits.dim() != 2:
        raise ExtractionError(
            f"model output must be (examples, classes), got shape "
            f"{tuple(logits.shape)}")
    return torch.softmax(logits, dim=1)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_matrix(path: str, matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in matrix:
            fh.write(",".join(_fmt(v) for v in row))
            fh.write("\n")


def _write_labels(path: str, labels: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for value in labels:
            fh.write(f"{int(value)}\n")


def _check_kb_classes(kb_path: str, n_classes: int) -> None:
    with open(kb_path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ExtractionError(
                f"knowledge base {kb_path} is not valid JSON: {exc}") from exc
    declared = len(doc.get("classes", []))
    if declared != n_classes:
        raise ExtractionError(
            f"knowledge base declares {declared} classes but the model "
            f"outputs {n_classes}")


def extract(spec: ExtractionSpec) -> dict[str, str]:
    """Run the model over the dataset and write all interchange files.

    Returns the mapping of artifact name to written path. Output ordering
    follows dataset order; the stochastic passes are seeded and therefore
    reproducible.
    """
    model = _load_model(spec.model_path)
    model.eval()
    images, labels = _load_dataset(spec.data_path)
    layer = _find_layer(model, spec.layer)

    captured: list[torch.Tensor] = []

    def hook(_module, _inputs, output):
        captured.append(output.detach())

    handle = layer.register_forward_hook(hook)
    try:
        with torch.no_grad():
            probs_t = _forward_probs(model, images)
    finally:
        handle.remove()
    if not captured:
        raise ExtractionError(
            f"layer '{spec.layer}' produced no output during the forward pass")
    features = torch.flatten(captured[-1], start_dim=1).numpy().astype(np.float64)
    probs = probs_t.numpy().astype(np.float64)
    predictions = probs.argmax(axis=1)

    if spec.kb_path is not None:
        _check_kb_classes(spec.kb_path, probs.shape[1])

    mcd_rows = None
    if spec.mcd_passes is not None:
        dropouts = _dropout_modules(model)
        if not dropouts:
            raise ExtractionError(
                "stochastic passes requested but the model has no dropout "
                "modules; re-run with the export disabled or use a model "
                "trained with dropout")
        for module in dropouts:
            module.train()
        torch.manual_seed(spec.seed)
        passes = []
        with torch.no_grad():
            for _ in range(spec.mcd_passes):
                passes.append(_forward_probs(model, images).numpy()
                              .astype(np.float64))
        for module in dropouts:
            module.eval()
        mcd_rows = np.stack(passes, axis=1)  # (examples, passes, classes)

    os.makedirs(spec.out_dir, exist_ok=True)
    paths = {
        "features": os.path.join(spec.out_dir, "features.csv"),
        "labels": os.path.join(spec.out_dir, "labels.csv"),
        "predictions": os.path.join(spec.out_dir, "predictions.csv"),
        "probs": os.path.join(spec.out_dir, "probs.csv"),
        "meta": os.path.join(spec.out_dir, "meta.json"),
    }
    _write_matrix(paths["features"], features)
    _write_labels(paths["labels"], labels)
    _write_labels(paths["predictions"], predictions)
    _write_matrix(paths["probs"], probs)
    if mcd_rows is not None:
        paths["mcd"] = os.path.join(spec.out_dir, "mcd.csv")
        with open(paths["mcd"], "w", encoding="utf-8", newline="\n") as fh:
            for i in range(mcd_rows.shape[0]):
                for t in range(mcd_rows.shape[1]):
                    fh.write(f"{i},{t},")
                    fh.write(",".join(_fmt(v) for v in mcd_rows[i, t]))
                    fh.write("\n")

    meta = {
        "model": os.path.abspath(spec.model_path),
        "layer": spec.layer,
        "dataset": os.path.abspath(spec.data_path),
        "examples": int(features.shape[0]),
        "feature_dim": int(features.shape[1]),
        "classes": int(probs.shape[1]),
        "mcd_passes": spec.mcd_passes,
        "seed": spec.seed,
    }
    with open(paths["meta"], "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")
    return paths
