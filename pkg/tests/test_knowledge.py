import json

import numpy as np
import pytest

from semshield import ValidationError, load_kb

from conftest import tiny_kb_doc


def test_bundled_dimensions(bundled_kb):
    assert [g.size for g in bundled_kb.groups] == [5, 4, 2, 29, 9]
    assert bundled_kb.n_classes == 43
    assert bundled_kb.k == 49


def test_tiny_kb_k_is_sum_of_sizes():
    kb = load_kb(json.dumps(tiny_kb_doc(n_classes=2)))
    assert kb.k == 5
    assert kb.n_classes == 2


def test_speed_limit_60_encoding(bundled_kb):
    idx = bundled_kb.class_labels.index("speed limit 60")
    assert bundled_kb.attribute_names(idx) == (
        "round", "red", "not crossed out", "number", "60")
    vec = bundled_kb.encode_class(idx)
    assert vec.sum() == len(bundled_kb.groups)
    for seg, group, want in zip(bundled_kb.group_slices(), bundled_kb.groups,
                                bundled_kb.attribute_names(idx)):
        segment = vec[seg]
        assert segment.sum() == 1.0
        assert group.values[int(np.argmax(segment))] == want


def test_one_hot_per_group_for_every_class(bundled_kb):
    for label in range(bundled_kb.n_classes):
        vec = bundled_kb.encode_class(label)
        for seg in bundled_kb.group_slices():
            segment = vec[seg]
            assert np.count_nonzero(segment) == 1
            assert segment.max() == 1.0


def test_encode_out_of_range(tiny_kb):
    with pytest.raises(IndexError):
        tiny_kb.encode_class(99)
    with pytest.raises(IndexError):
        tiny_kb.encode_class(-1)


def test_annotate_rows_match_encode(tiny_kb):
    labels = [0, 0, 1, 3]
    s = tiny_kb.annotate(labels)
    assert s.shape == (4, tiny_kb.k)
    for i, lab in enumerate(labels):
        assert np.array_equal(s[i], tiny_kb.encode_class(lab))
    assert np.array_equal(s[0], s[1])


def test_annotate_empty(tiny_kb):
    s = tiny_kb.annotate([])
    assert s.shape == (0, tiny_kb.k)


def test_annotate_reports_row(tiny_kb):
    with pytest.raises(IndexError, match=r"labels\[2\]"):
        tiny_kb.annotate([0, 1, 9])


def test_annotate_bundled_shape(bundled_kb):
    s = bundled_kb.annotate([0, 42, 7])
    assert s.shape == (3, 49)


def test_prototypes(bundled_kb):
    protos = bundled_kb.prototypes()
    assert protos.count == 43
    assert protos.k == 49
    assert len({tuple(row) for row in protos.matrix}) == 43
    assert np.array_equal(protos.vector(5), bundled_kb.encode_class(5))


def test_config_lookup(tiny_kb):
    spec = tiny_kb.classes[2]
    assert tiny_kb.config_class(spec.value_indices) == 2
    assert tiny_kb.config_class((1, 1)) in (None, *range(tiny_kb.n_classes))


def test_load_determinism_and_fingerprint():
    text = json.dumps(tiny_kb_doc())
    kb1 = load_kb(text)
    kb2 = load_kb(text)
    assert kb1 == kb2
    assert kb1.fingerprint() == kb2.fingerprint()
    # whitespace-insensitive: fingerprint hashes structure, not bytes
    spaced = json.dumps(tiny_kb_doc(), indent=4)
    assert load_kb(spaced).fingerprint() == kb1.fingerprint()
    changed = tiny_kb_doc()
    changed["classes"][0]["attributes"]["color"] = "blue"
    changed["classes"][1]["attributes"]["color"] = "red"
    assert load_kb(json.dumps(changed)).fingerprint() != kb1.fingerprint()


class TestLoadValidation:
    def test_missing_group_assignment(self):
        doc = tiny_kb_doc()
        del doc["classes"][1]["attributes"]["color"]
        with pytest.raises(ValidationError, match="round blue.*color"):
            load_kb(json.dumps(doc))

    def test_unknown_value(self):
        doc = tiny_kb_doc()
        doc["classes"][0]["attributes"]["color"] = "mauve"
        with pytest.raises(ValidationError, match="mauve"):
            load_kb(json.dumps(doc))

    def test_unknown_group_in_class(self):
        doc = tiny_kb_doc()
        doc["classes"][0]["attributes"]["texture"] = "matte"
        with pytest.raises(ValidationError, match="texture"):
            load_kb(json.dumps(doc))

    def test_duplicate_label(self):
        doc = tiny_kb_doc()
        doc["classes"][1]["label"] = doc["classes"][0]["label"]
        with pytest.raises(ValidationError, match="duplicate class label"):
            load_kb(json.dumps(doc))

    def test_duplicate_configuration(self):
        doc = tiny_kb_doc()
        doc["classes"][1]["attributes"] = dict(doc["classes"][0]["attributes"])
        doc["classes"][1]["label"] = "other"
        with pytest.raises(ValidationError, match="same attribute configuration"):
            load_kb(json.dumps(doc))

    def test_unknown_top_level_key(self):
        doc = tiny_kb_doc()
        doc["extra"] = 1
        with pytest.raises(ValidationError, match="unknown top-level"):
            load_kb(json.dumps(doc))

    def test_single_value_group(self):
        doc = tiny_kb_doc()
        doc["groups"][0]["values"] = ["round"]
        with pytest.raises(ValidationError, match="at least 2 values"):
            load_kb(json.dumps(doc))

    def test_duplicate_value_names(self):
        doc = tiny_kb_doc()
        doc["groups"][1]["values"] = ["red", "red", "green"]
        with pytest.raises(ValidationError, match="duplicate value names"):
            load_kb(json.dumps(doc))

    def test_too_few_classes(self):
        doc = tiny_kb_doc(n_classes=1)
        with pytest.raises(ValidationError, match="at least 2 classes"):
            load_kb(json.dumps(doc))

    def test_not_json(self):
        with pytest.raises(ValidationError, match="not valid JSON"):
            load_kb("{nope")

    def test_notes_allowed(self):
        doc = tiny_kb_doc()
        doc["notes"] = "illustrative"
        kb = load_kb(json.dumps(doc))
        assert kb.notes == "illustrative"
