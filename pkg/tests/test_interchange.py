import json

import numpy as np
import pytest

from semshield import ValidationError, generate
from semshield.interchange import (InterchangeSet, bundled_config_path,
                                   load_interchange_dir, load_synth_config,
                                   read_labels_csv, read_matrix_csv,
                                   read_mcd_csv, read_probs_csv,
                                   write_labels_csv, write_matrix_csv,
                                   write_mcd_csv, write_synth_dir)

from conftest import tiny_kb_doc
from test_synthetic import small_cfg


class TestMatrixCsv:
    def test_round_trip_bitwise(self, tmp_path, rng):
        m = rng.normal(size=(7, 4)) * np.pi
        path = tmp_path / "m.csv"
        write_matrix_csv(path, m)
        assert np.array_equal(read_matrix_csv(path), m)

    def test_lf_only_no_header(self, tmp_path):
        path = tmp_path / "m.csv"
        write_matrix_csv(path, [[1.5, 2.0]])
        raw = path.read_bytes()
        assert raw == b"1.5,2.0\n"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        out = read_matrix_csv(path, cols=5)
        assert out.shape == (0, 5)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ValidationError, match="line 2"):
            read_matrix_csv(path)

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,zap\n")
        with pytest.raises(ValidationError, match="line 1"):
            read_matrix_csv(path)

    def test_wrong_width_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        write_matrix_csv(path, [[1.0, 2.0]])
        with pytest.raises(ValidationError):
            read_matrix_csv(path, cols=3)


class TestLabelsCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "labels.csv"
        write_labels_csv(path, [0, 3, 1, 42])
        assert read_labels_csv(path).tolist() == [0, 3, 1, 42]

    def test_non_integer_rejected(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("1\n2.5\n")
        with pytest.raises(ValidationError, match="line 2"):
            read_labels_csv(path)

    def test_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "labels.csv"
        write_labels_csv(path, [0, 1, 7])
        with pytest.raises(ValidationError):
            read_labels_csv(path, n_classes=4)


class TestProbsCsv:
    def test_simplex_enforced(self, tmp_path):
        path = tmp_path / "probs.csv"
        write_matrix_csv(path, [[0.6, 0.3]])
        with pytest.raises(ValidationError, match="sums to"):
            read_probs_csv(path)

    def test_ok(self, tmp_path):
        path = tmp_path / "probs.csv"
        write_matrix_csv(path, [[0.6, 0.4], [0.5, 0.5]])
        out = read_probs_csv(path, n_classes=2)
        assert out.shape == (2, 2)


class TestMcdCsv:
    def test_round_trip(self, tmp_path, rng):
        raw = rng.random((3, 4, 2)) + 0.01
        tensor = raw / raw.sum(axis=2, keepdims=True)
        path = tmp_path / "mcd.csv"
        write_mcd_csv(path, tensor)
        assert np.array_equal(read_mcd_csv(path), tensor)

    def test_long_format_layout(self, tmp_path):
        tensor = np.full((2, 2, 2), 0.5)
        path = tmp_path / "mcd.csv"
        write_mcd_csv(path, tensor)
        first = path.read_text().splitlines()[0]
        assert first.split(",")[:2] == ["0", "0"]

    def test_incomplete_grid_rejected(self, tmp_path):
        path = tmp_path / "mcd.csv"
        path.write_text("0,0,0.5,0.5\n1,1,0.5,0.5\n")
        with pytest.raises(ValidationError):
            read_mcd_csv(path)

    def test_duplicate_rows_rejected(self, tmp_path):
        path = tmp_path / "mcd.csv"
        path.write_text("0,0,0.5,0.5\n0,0,0.5,0.5\n")
        with pytest.raises(ValidationError):
            read_mcd_csv(path)

    def test_fractional_ids_rejected(self, tmp_path):
        path = tmp_path / "mcd.csv"
        path.write_text("0.5,0,0.5,0.5\n")
        with pytest.raises(ValidationError, match="integers"):
            read_mcd_csv(path)


class TestSynthDir:
    def test_round_trip(self, tmp_path, tiny_kb):
        data = generate(small_cfg(tiny_kb))
        out = tmp_path / "set"
        write_synth_dir(out, data)
        loaded = load_interchange_dir(out, n_classes=tiny_kb.n_classes)
        assert np.array_equal(loaded.features, data.test_features)
        assert np.array_equal(loaded.labels, data.test_labels)
        assert np.array_equal(loaded.predictions, data.predictions)
        assert np.array_equal(loaded.probs, data.probs)
        assert np.array_equal(loaded.mcd_samples, data.mcd_samples)
        assert np.array_equal(loaded.train_features, data.train_features)
        assert np.array_equal(loaded.train_labels, data.train_labels)
        meta = json.loads((out / "meta.json").read_text())
        assert meta["seed"] == data.meta["seed"]

    def test_alignment_enforced(self):
        with pytest.raises(ValidationError, match="row count mismatch"):
            InterchangeSet(features=np.zeros((3, 2)),
                           labels=np.zeros(2, dtype=np.int64),
                           predictions=np.zeros(3, dtype=np.int64))


class TestSynthConfigFile:
    def test_bundled_config_loads(self):
        cfg = load_synth_config(bundled_config_path())
        assert cfg.classes == 43
        assert cfg.kb.k == 49
        assert cfg.misprediction_rate == 0.05

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 1, "extra": True}))
        with pytest.raises(ValidationError, match="unknown config key"):
            load_synth_config(path)

    def test_relative_kb_path(self, tmp_path):
        kb_path = tmp_path / "kb.json"
        kb_path.write_text(json.dumps(tiny_kb_doc()))
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "seed": 2, "classes": 4, "feature_dim": 8, "train_per_class": 3,
            "test_per_class": 3, "sigma": 1.0, "misprediction_rate": 0.0,
            "mcd_passes": 2, "kb": "kb.json"}))
        cfg = load_synth_config(cfg_path)
        assert cfg.kb.n_classes == 4

    def test_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{")
        with pytest.raises(ValidationError, match="not valid JSON"):
            load_synth_config(path)

    def test_bad_value_surfaces(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"seed": 1, "classes": 43,
                                    "misprediction_rate": 2.0}))
        with pytest.raises(ValidationError):
            load_synth_config(path)
