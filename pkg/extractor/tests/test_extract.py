import json
import shutil
import subprocess

import numpy as np
import pytest

from semshield_extractor import ExtractionError, ExtractionSpec, extract

from conftest import FEATURE_DIM, N_CLASSES, N_IMAGES


def read_matrix(path):
    rows = [line.split(",") for line in
            open(path, encoding="utf-8").read().splitlines() if line]
    return np.array([[float(v) for v in row] for row in rows])


def read_ints(path):
    return [int(line) for line in
            open(path, encoding="utf-8").read().splitlines() if line]


@pytest.fixture(scope="module")
def extracted(toy_model_path, toy_dataset_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    spec = ExtractionSpec(model_path=toy_model_path, layer="relu2",
                          data_path=toy_dataset_path, out_dir=str(out),
                          mcd_passes=100, seed=3)
    return extract(spec)


class TestFormats:
    def test_feature_shape(self, extracted):
        features = read_matrix(extracted["features"])
        assert features.shape == (N_IMAGES, FEATURE_DIM)

    def test_probs_are_simplex_rows(self, extracted):
        probs = read_matrix(extracted["probs"])
        assert probs.shape == (N_IMAGES, N_CLASSES)
        assert np.abs(probs.sum(axis=1) - 1.0).max() <= 1e-6
        assert probs.min() >= 0.0

    def test_predictions_equal_argmax(self, extracted):
        probs = read_matrix(extracted["probs"])
        preds = read_ints(extracted["predictions"])
        assert preds == list(np.argmax(probs, axis=1))

    def test_labels_preserved_in_order(self, extracted, toy_dataset_path):
        labels = read_ints(extracted["labels"])
        assert labels == list(np.load(toy_dataset_path)["labels"])

    def test_mcd_row_count(self, extracted):
        lines = open(extracted["mcd"], encoding="utf-8").read().splitlines()
        assert len(lines) == 100 * N_IMAGES
        first = lines[0].split(",")
        assert first[0] == "0" and first[1] == "0"
        assert len(first) == 2 + N_CLASSES

    def test_mcd_rows_are_simplices(self, extracted):
        raw = read_matrix(extracted["mcd"])
        assert np.abs(raw[:, 2:].sum(axis=1) - 1.0).max() <= 1e-6

    def test_meta(self, extracted):
        meta = json.loads(open(extracted["meta"], encoding="utf-8").read())
        assert meta["examples"] == N_IMAGES
        assert meta["mcd_passes"] == 100
        assert meta["layer"] == "relu2"


class TestDeterminism:
    def test_same_seed_identical_files(self, toy_model_path, toy_dataset_path,
                                       tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            extract(ExtractionSpec(model_path=toy_model_path, layer="relu2",
                                   data_path=toy_dataset_path,
                                   out_dir=str(out), mcd_passes=5, seed=9))
            outs.append(out)
        for fname in ("features.csv", "probs.csv", "predictions.csv",
                      "labels.csv", "mcd.csv"):
            assert (outs[0] / fname).read_bytes() == \
                (outs[1] / fname).read_bytes(), fname

    def test_different_seed_differs(self, toy_model_path, toy_dataset_path,
                                    tmp_path):
        outs = []
        for seed in (1, 2):
            out = tmp_path / f"s{seed}"
            extract(ExtractionSpec(model_path=toy_model_path, layer="relu2",
                                   data_path=toy_dataset_path,
                                   out_dir=str(out), mcd_passes=5, seed=seed))
            outs.append(out)
        assert (outs[0] / "mcd.csv").read_bytes() != \
            (outs[1] / "mcd.csv").read_bytes()
        # deterministic artifacts are unaffected by the dropout seed
        assert (outs[0] / "features.csv").read_bytes() == \
            (outs[1] / "features.csv").read_bytes()


class TestErrors:
    def test_missing_layer_lists_available(self, toy_model_path,
                                           toy_dataset_path, tmp_path):
        spec = ExtractionSpec(model_path=toy_model_path, layer="nope",
                              data_path=toy_dataset_path,
                              out_dir=str(tmp_path))
        with pytest.raises(ExtractionError, match="available layers.*hidden"):
            extract(spec)

    def test_mcd_needs_dropout(self, plain_model_path, toy_dataset_path,
                               tmp_path):
        spec = ExtractionSpec(model_path=plain_model_path, layer="relu2",
                              data_path=toy_dataset_path,
                              out_dir=str(tmp_path), mcd_passes=10)
        with pytest.raises(ExtractionError, match="no dropout"):
            extract(spec)

    def test_no_mcd_skips_export(self, plain_model_path, toy_dataset_path,
                                 tmp_path):
        spec = ExtractionSpec(model_path=plain_model_path, layer="relu2",
                              data_path=toy_dataset_path,
                              out_dir=str(tmp_path), mcd_passes=None)
        paths = extract(spec)
        assert "mcd" not in paths

    def test_too_few_passes(self, toy_model_path, toy_dataset_path, tmp_path):
        with pytest.raises(ExtractionError, match="mcd_passes"):
            ExtractionSpec(model_path=toy_model_path, layer="relu2",
                           data_path=toy_dataset_path, out_dir=str(tmp_path),
                           mcd_passes=1)

    def test_kb_class_mismatch(self, toy_model_path, toy_dataset_path,
                               tmp_path):
        bad_kb = tmp_path / "bad_kb.json"
        bad_kb.write_text(json.dumps({"groups": [], "classes": [{}, {}]}))
        spec = ExtractionSpec(model_path=toy_model_path, layer="relu2",
                              data_path=toy_dataset_path,
                              out_dir=str(tmp_path / "o"),
                              mcd_passes=None, kb_path=str(bad_kb))
        with pytest.raises(ExtractionError, match="declares 2 classes"):
            extract(spec)

    def test_kb_match_passes(self, toy_model_path, toy_dataset_path,
                             toy_kb_path, tmp_path):
        spec = ExtractionSpec(model_path=toy_model_path, layer="relu2",
                              data_path=toy_dataset_path,
                              out_dir=str(tmp_path / "o"),
                              mcd_passes=None, kb_path=toy_kb_path)
        extract(spec)


class TestCli:
    def test_entry_point(self, toy_model_path, toy_dataset_path, toy_kb_path,
                         tmp_path):
        binary = shutil.which("semshield-extract")
        assert binary is not None
        out = tmp_path / "cli_out"
        result = subprocess.run(
            [binary, "--model", toy_model_path, "--layer", "relu2",
             "--data", toy_dataset_path, "--out-dir", str(out),
             "--mcd-passes", "4", "--seed", "2", "--kb", toy_kb_path],
            capture_output=True, text=True)
        assert result.returncode == 0, result.stderr
        assert (out / "mcd.csv").exists()

    def test_cli_error_exits_2(self, toy_model_path, toy_dataset_path,
                               tmp_path):
        binary = shutil.which("semshield-extract")
        result = subprocess.run(
            [binary, "--model", toy_model_path, "--layer", "ghost",
             "--data", toy_dataset_path, "--out-dir", str(tmp_path / "x")],
            capture_output=True, text=True)
        assert result.returncode == 2
        payload = json.loads(result.stderr.strip().splitlines()[-1])
        assert "available layers" in payload["message"]


@pytest.fixture(scope="module")
def semshield_bin():
    binary = shutil.which("semshield")
    if binary is None:
        pytest.skip("semshield CLI not installed")
    return binary


class TestPrimaryRoundTrip:
    """The exported files must be accepted end to end by the scoring CLI."""

    def test_full_pipeline(self, semshield_bin, extracted, toy_kb_path,
                           tmp_path_factory):
        work = tmp_path_factory.mktemp("roundtrip")
        labels = read_ints(extracted["labels"])
        preds = read_ints(extracted["predictions"])
        # the ROC needs both outcomes; the toy model is untrained so both
        # are plentiful, but keep the precondition explicit
        assert any(l == p for l, p in zip(labels, preds))
        assert any(l != p for l, p in zip(labels, preds))

        model_path = work / "model.json"
        # untrained ReLU features have dead units, so the normal equations
        # are singular without a ridge
        fit = subprocess.run(
            [semshield_bin, "fit", "--features", extracted["features"],
             "--labels", extracted["labels"], "--kb", toy_kb_path,
             "--lambda", "0.1", "--ridge", "1e-6", "--out", str(model_path)],
            capture_output=True, text=True)
        assert fit.returncode == 0, fit.stderr

        score = subprocess.run(
            [semshield_bin, "score", "--model", str(model_path),
             "--kb", toy_kb_path, "--features", extracted["features"],
             "--predictions", extracted["predictions"]],
            capture_output=True, text=True)
        assert score.returncode == 0, score.stderr
        assert len(score.stdout.splitlines()) == N_IMAGES

        detect = subprocess.run(
            [semshield_bin, "detect", "--model", str(model_path),
             "--kb", toy_kb_path, "--features", extracted["features"],
             "--predictions", extracted["predictions"],
             "--out", str(work / "detect.jsonl")],
            capture_output=True, text=True)
        assert detect.returncode == 0, detect.stderr

        report_path = work / "report.json"
        bench = subprocess.run(
            [semshield_bin, "bench", "--model", str(model_path),
             "--kb", toy_kb_path, "--features", extracted["features"],
             "--labels", extracted["labels"],
             "--predictions", extracted["predictions"],
             "--probs", extracted["probs"], "--mcd", extracted["mcd"],
             "--train-features", extracted["features"], "--nnd-k", "3",
             "--methods", "semantic,softmax,nnd,mcd",
             "--out", str(report_path)],
            capture_output=True, text=True)
        assert bench.returncode == 0, bench.stderr
        report = json.loads(report_path.read_text())
        assert set(report["methods"]) == {"semantic", "softmax", "nnd", "mcd"}
