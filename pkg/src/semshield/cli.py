"""Command-line surface: fit, score, detect, bench, gen.

All commands are pure functions of their input files except ``gen``, which
owns the package's only randomness (seeded). Failures are reported as a
single JSON line on stderr ({code, message, context}) with exit code 2 for
validation/configuration problems and 3 for numerical failures.
"""

from __future__ import annotations

import functools
import json
import os
import sys
import time

import click

from . import __version__
from .confidence import DEFAULT_NND_K, detect_error, semantic_distance
from .errors import (ConfigurationError, NumericalError, SemshieldError,
                     ValidationError)
from .evaluation import bench, curves_to_csv, report_to_json
from .interchange import (bundled_config_path, load_synth_config,
                          read_labels_csv, read_matrix_csv, read_mcd_csv,
                          read_probs_csv, write_synth_dir)
from .knowledge import load_kb_file
from .projection import SemanticProjector
from .synthetic import generate

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _fail(code: int, message: str, context: dict) -> None:
    payload = {"code": code, "message": message, "context": context}
    click.echo(json.dumps(payload, default=str), err=True)
    sys.exit(code)


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NumericalError as exc:
            _fail(EXIT_NUMERICAL, exc.message, exc.context)
        except SemshieldError as exc:
            _fail(EXIT_VALIDATION, exc.message, exc.context)
        except BrokenPipeError:
            # downstream consumer closed the stream (e.g. `| head`);
            # silence the interpreter's shutdown flush and exit clean
            devnull = os.open(os.devnull, os.O_WRONLY)
            os.dup2(devnull, sys.stdout.fileno())
            sys.exit(0)
        except OSError as exc:
            _fail(EXIT_VALIDATION, str(exc), {"errno": exc.errno})
    return wrapper


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Semantic-embedding confidence scoring and error detection."""


def _load_model_and_kb(model_path, kb_path):
    model = SemanticProjector.load(model_path)
    kb = load_kb_file(kb_path)
    model.check_kb(kb)
    return model, kb


@main.command("fit")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--kb", "kb_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda", "lam", type=float, default=0.1, show_default=True,
              help="Weight of the projection term.")
@click.option("--ridge", type=float, default=0.0, show_default=True,
              help="Regularization for singular systems (0 = error instead).")
@click.option("--standardize", is_flag=True, default=False,
              help="Standardize features before fitting.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@handles_errors
def cmd_fit(features_path, labels_path, kb_path, lam, ridge, standardize,
            out_path) -> None:
    """Fit the semantic projection from training features and labels."""
    started = time.perf_counter()
    kb = load_kb_file(kb_path)
    features = read_matrix_csv(features_path, "features")
    labels = read_labels_csv(labels_path, "labels", n_classes=kb.n_classes)
    if features.shape[0] != labels.size:
        raise ValidationError(
            f"row count mismatch: features has {features.shape[0]} rows, "
            f"labels has {labels.size}",
            features=int(features.shape[0]), labels=int(labels.size))
    model = SemanticProjector(kb=kb, lam=lam, ridge=ridge,
                              standardize=standardize)
    model.fit(features, labels)
    model.save(out_path)
    elapsed = time.perf_counter() - started
    click.echo(f"fitted w: {model.k_}x{model.n_features_in_}  "
               f"residual={model.residual_:.3e}  elapsed={elapsed:.3f}s")


@main.command("score")
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--kb", "kb_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--predictions", "predictions_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@handles_errors
def cmd_score(model_path, kb_path, features_path, predictions_path) -> None:
    """Stream (example_id, semantic distance) pairs to stdout."""
    model, kb = _load_model_and_kb(model_path, kb_path)
    protos = kb.prototypes()
    features = read_matrix_csv(features_path, "features",
                               cols=model.n_features_in_)
    predictions = read_labels_csv(predictions_path, "predictions",
                                  n_classes=kb.n_classes)
    if features.shape[0] != predictions.size:
        raise ValidationError(
            f"row count mismatch: features has {features.shape[0]} rows, "
            f"predictions has {predictions.size}")
    semantic = model.transform(features)
    for i in range(semantic.shape[0]):
        d = semantic_distance(semantic[i], protos.vector(int(predictions[i])))
        click.echo(f"{i},{d!r}")


@main.command("detect")
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--kb", "kb_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--predictions", "predictions_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@handles_errors
def cmd_detect(model_path, kb_path, features_path, predictions_path,
               out_path) -> None:
    """Explain and flag predictions; one JSON line per example."""
    model, kb = _load_model_and_kb(model_path, kb_path)
    protos = kb.prototypes()
    features = read_matrix_csv(features_path, "features",
                               cols=model.n_features_in_)
    predictions = read_labels_csv(predictions_path, "predictions",
                                  n_classes=kb.n_classes)
    if features.shape[0] != predictions.size:
        raise ValidationError(
            f"row count mismatch: features has {features.shape[0]} rows, "
            f"predictions has {predictions.size}")
    semantic = model.transform(features)
    flagged = 0
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(semantic.shape[0]):
            pred = int(predictions[i])
            info = detect_error(semantic[i], pred, protos)
            d = semantic_distance(semantic[i], protos.vector(pred))
            if not (info.is_valid and info.matches_predicted):
                flagged += 1
            fh.write(json.dumps({
                "example_id": i,
                "predicted": pred,
                "predicted_label": kb.class_labels[pred],
                "explanation": {g: v for g, v, _ in info.per_group},
                "attributes_text": info.attributes_text,
                "valid": info.is_valid,
                "match": info.matches_predicted,
                "distance": d,
            }))
            fh.write("\n")
    click.echo(f"examined {semantic.shape[0]} examples, flagged {flagged}")


@main.command("bench")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--kb", "kb_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--predictions", "predictions_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--probs", "probs_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mcd", "mcd_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--train-features", "train_features_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Training features for the nearest-neighbor baseline.")
@click.option("--nnd-k", type=int, default=DEFAULT_NND_K, show_default=True)
@click.option("--methods", default="semantic,softmax,nnd,mcd",
              show_default=True, help="Comma-separated method list.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--emit-csv", "csv_path", type=click.Path(dir_okay=False),
              help="Also write the curves as method,fpr,tpr,threshold CSV.")
@handles_errors
def cmd_bench(model_path, kb_path, features_path, labels_path,
              predictions_path, probs_path, mcd_path, train_features_path,
              nnd_k, methods, out_path, csv_path) -> None:
    """Benchmark confidence methods on a labeled, predicted example set."""
    kb = load_kb_file(kb_path)
    wanted = [m.strip() for m in methods.split(",") if m.strip()]

    model = None
    protos = kb.prototypes()
    if model_path is not None:
        model = SemanticProjector.load(model_path)
        model.check_kb(kb)
    elif "semantic" in wanted:
        raise ConfigurationError(
            "--model is required for the semantic method")
    features = read_matrix_csv(features_path, "features")
    labels = read_labels_csv(labels_path, "labels", n_classes=kb.n_classes)
    predictions = read_labels_csv(predictions_path, "predictions",
                                  n_classes=kb.n_classes)
    probs = (read_probs_csv(probs_path, n_classes=kb.n_classes)
             if probs_path else None)
    mcd = (read_mcd_csv(mcd_path, n_classes=kb.n_classes)
           if mcd_path else None)
    train = (read_matrix_csv(train_features_path, "train_features")
             if train_features_path else None)

    report = bench(features=features, labels=labels, predictions=predictions,
                   probs=probs, mcd_samples=mcd, projector=model,
                   prototypes=protos, train_features=train, methods=wanted,
                   nnd_k=nnd_k)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_to_json(report))
        fh.write("\n")
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(curves_to_csv(report))

    click.echo(f"{'method':<10} auc")
    for name in wanted:
        click.echo(f"{name:<10} {report.methods[name].auc:.6f}")


@main.command("gen")
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Generator config JSON; defaults to the bundled one.")
@click.option("--out-dir", "out_dir", required=True,
              type=click.Path(file_okay=False))
@handles_errors
def cmd_gen(config_path, out_dir) -> None:
    """Generate a seeded synthetic data set in interchange formats."""
    cfg = load_synth_config(config_path or bundled_config_path())
    data = generate(cfg)
    paths = write_synth_dir(out_dir, data)
    click.echo(f"wrote {len(paths)} files to {out_dir} "
               f"(seed={cfg.seed}, mispredictions={data.meta['mispredictions']})")


if __name__ == "__main__":
    main()
