"""JSON model documents.

Layout (``format_version`` 1)::

    {
      "format": "gustosonic.random_forest",
      "format_version": 1,
      "classes": ["crunchy", "soft", "beverage", "speaking", "idle"],
      "feature_schema": ["ax_mean", ...],
      "params": {...},
      "train_meta": {...},
      "trees": [{"feature": 3, "threshold": 0.41, "left": {...}, "right": {...}}, {"leaf": "idle"}, ...]
    }

Serialisation is canonical (sorted keys, fixed separators) so equal models
give byte-identical documents.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import CorruptDocument, SchemaMismatch, VersionMismatch
from ..sensor_data import LABELS
from .forest import ForestParams, RandomForestModel
from .tree import DecisionTree

FORMAT_NAME = "gustosonic.random_forest"
FORMAT_VERSION = 1


def model_to_document(model: RandomForestModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "classes": [lab.value for lab in model.classes],
        "feature_schema": list(model.feature_schema),
        "params": model.params.to_dict(),
        "train_meta": model.train_meta,
        "trees": [t.to_dict() for t in model.trees],
    }


def dumps(model: RandomForestModel) -> str:
    return json.dumps(model_to_document(model), sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str, expected_schema: tuple[str, ...] | None = None) -> RandomForestModel:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptDocument(f"model document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptDocument("not a random forest model document")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version!r}, this build reads {FORMAT_VERSION}")
    try:
        if doc["classes"] != [lab.value for lab in LABELS]:
            raise CorruptDocument(f"unexpected class list {doc['classes']}")
        schema = tuple(doc["feature_schema"])
        params = ForestParams.from_dict(doc["params"])
        trees = [DecisionTree.from_dict(t, len(schema)) for t in doc["trees"]]
        meta = doc.get("train_meta", {})
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (CorruptDocument, SchemaMismatch)):
            raise
        raise CorruptDocument(f"malformed model document: {exc!r}") from None
    if expected_schema is not None and tuple(expected_schema) != schema:
        raise SchemaMismatch("model feature schema differs from the expected schema")
    if not trees:
        raise CorruptDocument("model document holds no trees")
    return RandomForestModel(trees, params, schema, meta)


def save_model(model: RandomForestModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load_model(path, expected_schema: tuple[str, ...] | None = None) -> RandomForestModel:
    return loads(Path(path).read_text(encoding="utf-8"), expected_schema)
