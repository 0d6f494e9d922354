"""Symbolic knowledge base: attribute groups, class definitions, prototypes.

A knowledge base declares a handful of multi-valued attribute groups (shape,
color, ...) and assigns every class exactly one value per group. Classes are
embedded as the concatenation of one-hot encodings of their group values, so
the semantic dimensionality ``k`` is the sum of the group sizes and no class
maps to the zero vector. The per-class vectors double as the prototype set
that confidence scoring and error detection compare against.

Group and class ordering is significant and follows document order, which
makes vector layouts reproducible across runs and machines.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .errors import ValidationError
from .validation import as_labels

_ALLOWED_TOP_LEVEL = {"groups", "classes", "notes"}


@dataclass(frozen=True)
class AttributeGroup:
    """One multi-valued attribute: an ordered set of at least two value names."""

    name: str
    values: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.name or not isinstance(self.name, str):
            raise ValidationError("attribute group name must be a non-empty string")
        if len(self.values) < 2:
            raise ValidationError(
                f"group '{self.name}' needs at least 2 values, got {len(self.values)}",
                group=self.name)
        if len(set(self.values)) != len(self.values):
            raise ValidationError(f"group '{self.name}' has duplicate value names",
                                  group=self.name)

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ClassSpec:
    """A class label plus its value index within every group (group order)."""

    label: str
    value_indices: tuple[int, ...]


@dataclass(frozen=True)
class KnowledgeBase:
    """Validated attribute schema and class-to-attribute assignments.

    Build instances with :func:`load_kb` (JSON document) or pass
    pre-validated groups/classes directly.
    """

    groups: tuple[AttributeGroup, ...]
    classes: tuple[ClassSpec, ...]
    notes: str = ""
    _offsets: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _config_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise ValidationError("knowledge base needs at least 2 classes",
                                  n_classes=len(self.classes))
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate group names in knowledge base")
        labels = [c.label for c in self.classes]
        if len(set(labels)) != len(labels):
            dup = next(l for l in labels if labels.count(l) > 1)
            raise ValidationError(f"duplicate class label '{dup}'", label=dup)
        seen: dict[tuple[int, ...], int] = {}
        for pos, spec in enumerate(self.classes):
            if len(spec.value_indices) != len(self.groups):
                raise ValidationError(
                    f"class '{spec.label}' must assign a value to every group",
                    label=spec.label)
            if spec.value_indices in seen:
                other = self.classes[seen[spec.value_indices]].label
                raise ValidationError(
                    f"classes '{other}' and '{spec.label}' share the same "
                    f"attribute configuration",
                    labels=[other, spec.label])
            seen[spec.value_indices] = pos
        offsets = []
        total = 0
        for g in self.groups:
            offsets.append(total)
            total += g.size
        object.__setattr__(self, "_offsets", tuple(offsets))
        object.__setattr__(self, "_config_index", seen)

    @property
    def k(self) -> int:
        """Total semantic dimensionality (sum of group sizes)."""
        return sum(g.size for g in self.groups)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def class_labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.classes)

    def group_slices(self) -> list[slice]:
        """Per-group segment of the semantic vector, in group order."""
        return [slice(off, off + g.size)
                for off, g in zip(self._offsets, self.groups)]

    def encode_class(self, label: int) -> np.ndarray:
        """One-hot-per-group semantic vector of class index ``label``."""
        if not 0 <= label < self.n_classes:
            raise IndexError(f"class index {label} outside [0, {self.n_classes})")
        vec = np.zeros(self.k)
        spec = self.classes[label]
        for off, idx in zip(self._offsets, spec.value_indices):
            vec[off + idx] = 1.0
        return vec

    def annotate(self, labels: Iterable[int]) -> np.ndarray:
        """Stack ``encode_class`` row-wise: an (m, k) annotation matrix."""
        arr = as_labels(np.asarray(list(labels)), "labels")
        out = np.zeros((arr.size, self.k))
        for i, lab in enumerate(arr):
            if not 0 <= lab < self.n_classes:
                raise IndexError(
                    f"labels[{i}] = {lab} outside [0, {self.n_classes})")
            out[i] = self.encode_class(int(lab))
        return out

    def prototypes(self) -> "PrototypeSet":
        """Prototype vectors for all classes, in class order."""
        matrix = np.vstack([self.encode_class(i) for i in range(self.n_classes)])
        return PrototypeSet(kb=self, matrix=matrix)

    def attribute_names(self, label: int) -> tuple[str, ...]:
        """Value names assigned to class ``label``, in group order."""
        spec = self.classes[label]
        return tuple(g.values[i] for g, i in zip(self.groups, spec.value_indices))

    def config_class(self, value_indices: tuple[int, ...]) -> int | None:
        """Class index owning this attribute configuration, or None."""
        return self._config_index.get(tuple(value_indices))

    def to_document(self) -> dict:
        """Reconstruct the JSON document structure (group/class order kept)."""
        doc: dict = {
            "groups": [{"name": g.name, "values": list(g.values)}
                       for g in self.groups],
            "classes": [{"label": c.label,
                         "attributes": {g.name: g.values[i]
                                        for g, i in zip(self.groups,
                                                        c.value_indices)}}
                        for c in self.classes],
        }
        if self.notes:
            doc["notes"] = self.notes
        return doc

    def fingerprint(self) -> str:
        """SHA-256 of the canonical document; identifies the KB content."""
        doc = self.to_document()
        doc.pop("notes", None)
        canonical = json.dumps(doc, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PrototypeSet:
    """The per-class semantic vectors, one-hot per group and pairwise distinct."""

    kb: KnowledgeBase
    matrix: np.ndarray

    @property
    def count(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    def vector(self, label: int) -> np.ndarray:
        if not 0 <= label < self.count:
            raise IndexError(f"class index {label} outside [0, {self.count})")
        return self.matrix[label]


def load_kb(text: str | bytes) -> KnowledgeBase:
    """Parse and validate a knowledge-base JSON document.

    The document must contain exactly the keys ``groups`` and ``classes``
    (plus an optional free-text ``notes``); every class must assign one
    known value to every declared group.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"knowledge base is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("knowledge base document must be a JSON object")
    unknown = set(doc) - _ALLOWED_TOP_LEVEL
    if unknown:
        raise ValidationError(
            f"unknown top-level key(s): {', '.join(sorted(unknown))}",
            unknown=sorted(unknown))
    for key in ("groups", "classes"):
        if key not in doc or not isinstance(doc[key], list):
            raise ValidationError(f"knowledge base must contain a '{key}' array",
                                  key=key)

    groups = []
    for entry in doc["groups"]:
        if not isinstance(entry, dict) or set(entry) != {"name", "values"}:
            raise ValidationError(
                "each group must be an object with exactly 'name' and 'values'")
        values = entry["values"]
        if (not isinstance(values, list)
                or not all(isinstance(v, str) for v in values)):
            raise ValidationError(
                f"group '{entry.get('name')}' values must be strings",
                group=entry.get("name"))
        groups.append(AttributeGroup(name=entry["name"], values=tuple(values)))

    classes = []
    for entry in doc["classes"]:
        if not isinstance(entry, dict) or set(entry) != {"label", "attributes"}:
            raise ValidationError(
                "each class must be an object with exactly 'label' and 'attributes'")
        label = entry["label"]
        attributes = entry["attributes"]
        if not isinstance(label, str) or not label:
            raise ValidationError("class label must be a non-empty string")
        if not isinstance(attributes, Mapping):
            raise ValidationError(
                f"class '{label}' attributes must be an object", label=label)
        classes.append(_resolve_class(label, attributes, groups))

    notes = doc.get("notes", "")
    if not isinstance(notes, str):
        raise ValidationError("'notes' must be a string")
    return KnowledgeBase(groups=tuple(groups), classes=tuple(classes), notes=notes)


def _resolve_class(label: str, attributes: Mapping,
                   groups: list[AttributeGroup]) -> ClassSpec:
    known = {g.name for g in groups}
    extra = set(attributes) - known
    if extra:
        raise ValidationError(
            f"class '{label}' references unknown group(s): {', '.join(sorted(extra))}",
            label=label, unknown=sorted(extra))
    indices = []
    for g in groups:
        if g.name not in attributes:
            raise ValidationError(
                f"class '{label}' is missing a value for group '{g.name}'",
                label=label, group=g.name)
        value = attributes[g.name]
        if value not in g.values:
            raise ValidationError(
                f"class '{label}' assigns unknown value '{value}' "
                f"to group '{g.name}'", label=label, group=g.name, value=value)
        indices.append(g.values.index(value))
    return ClassSpec(label=label, value_indices=tuple(indices))


def load_kb_file(path) -> KnowledgeBase:
    """Load a knowledge base from a UTF-8 JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return load_kb(fh.read())


def bundled_kb_path() -> str:
    """Filesystem path of the bundled traffic-sign knowledge base."""
    return str(resources.files("semshield.data") / "traffic_signs_kb.json")


def load_bundled_kb() -> KnowledgeBase:
    """The bundled 43-class traffic-sign knowledge base (k = 49)."""
    return load_kb_file(bundled_kb_path())
