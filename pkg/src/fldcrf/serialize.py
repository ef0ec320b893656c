"""Versioned model documents.

A trained model is saved as a single JSON text file that is self-describing:
it embeds the structural spec, the flat weight vector, the fitted
normalization bounds, and the data schema, so prediction needs nothing but
this file and an input CSV.  Floats are written as shortest-exact decimal
strings with 17 significant digits, which round-trips every IEEE double
bit-for-bit, and keys are sorted, so saving the same model twice yields
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec
from .params import ParameterVector
from .data import NormalizationRecord, SequenceSchema

__all__ = ["ModelDocument", "FormatError", "save_model", "load_model",
           "spec_to_dict", "spec_from_dict"]

FORMAT_NAME = "fldcrf-model"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """The file is not a model document this version can read."""


def spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "label_alphabet": [list(a) for a in spec.label_alphabet],
        "category_of_layer": list(spec.category_of_layer),
        "states_per_label": [list(r) for r in spec.states_per_label],
        "influence_links": [list(l) for l in spec.influence_links],
        "feature_masks": [list(m) for m in spec.feature_masks],
        "feature_dim": spec.feature_dim,
    }


def spec_from_dict(d: dict) -> ModelSpec:
    return ModelSpec(
        label_alphabet=tuple(tuple(a) for a in d["label_alphabet"]),
        category_of_layer=tuple(d["category_of_layer"]),
        states_per_label=tuple(tuple(r) for r in d["states_per_label"]),
        influence_links=tuple(tuple(l) for l in d["influence_links"]),
        feature_masks=tuple(tuple(m) for m in d["feature_masks"]),
        feature_dim=d["feature_dim"],
    )


@dataclass(frozen=True)
class ModelDocument:
    """Everything needed to run a saved model on new data."""

    spec: ModelSpec
    params: ParameterVector
    normalization: NormalizationRecord | None = None
    schema: SequenceSchema | None = None


def save_model(path, document: ModelDocument) -> None:
    payload = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "model": spec_to_dict(document.spec),
        "weights": [format(v, ".17g") for v in document.params.flat],
    }
    if document.normalization is not None:
        payload["normalization"] = document.normalization.to_dict()
    if document.schema is not None:
        payload["schema"] = document.schema.to_dict()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ModelDocument:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_NAME:
        raise FormatError(f"{path}: not a {FORMAT_NAME} document")
    if payload.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"{path}: format version {payload.get('format_version')!r} is not "
            f"supported by this build (expected {FORMAT_VERSION})")
    spec = spec_from_dict(payload["model"])
    params = ParameterVector(spec, np.array([float(v) for v in payload["weights"]]))
    normalization = (NormalizationRecord.from_dict(payload["normalization"])
                     if "normalization" in payload else None)
    schema = (SequenceSchema.from_dict(payload["schema"])
              if "schema" in payload else None)
    return ModelDocument(spec=spec, params=params, normalization=normalization,
                         schema=schema)
