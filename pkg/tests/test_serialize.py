"""Model document round trips and format guards."""

import json

import numpy as np
import pytest

from fldcrf.data import NormalizationRecord, SequenceSchema
from fldcrf.model import build_spec
from fldcrf.params import ParameterVector, init_params
from fldcrf.serialize import (
    FORMAT_VERSION,
    FormatError,
    ModelDocument,
    load_model,
    save_model,
)


def make_document():
    spec = build_spec("fldcrf-m2", [["a", "b"], ["u", "v", "w"]], 3, n_states=2)
    params = init_params(spec, rng_seed=5)
    record = NormalizationRecord(minimum=np.array([0.0, -1.5, 2.25]),
                                 maximum=np.array([1.0, 3.125, 2.25]))
    schema = SequenceSchema(feature_columns=("f0", "f1", "f2"),
                            label_columns=("act", "mood"))
    return ModelDocument(spec=spec, params=params, normalization=record, schema=schema)


def test_round_trip_is_bitwise(tmp_path):
    doc = make_document()
    path = tmp_path / "model.json"
    save_model(path, doc)
    revived = load_model(path)
    assert revived.spec == doc.spec
    np.testing.assert_array_equal(revived.params.flat, doc.params.flat)
    np.testing.assert_array_equal(revived.normalization.minimum, doc.normalization.minimum)
    np.testing.assert_array_equal(revived.normalization.maximum, doc.normalization.maximum)
    assert revived.schema == doc.schema


def test_save_twice_is_byte_identical(tmp_path):
    doc = make_document()
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_model(a, doc)
    save_model(b, doc)
    assert a.read_bytes() == b.read_bytes()


def test_optional_fields_may_be_absent(tmp_path):
    spec = build_spec("crf", ["x", "y"], 1)
    doc = ModelDocument(spec=spec, params=init_params(spec, rng_seed=0))
    path = tmp_path / "bare.json"
    save_model(path, doc)
    revived = load_model(path)
    assert revived.normalization is None and revived.schema is None
    np.testing.assert_array_equal(revived.params.flat, doc.params.flat)


def test_rejects_non_json(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("this is not json", encoding="utf-8")
    with pytest.raises(FormatError, match="not valid JSON"):
        load_model(path)


def test_rejects_foreign_document(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"format": "something-else"}), encoding="utf-8")
    with pytest.raises(FormatError, match="not a"):
        load_model(path)


def test_rejects_future_version(tmp_path):
    doc = make_document()
    path = tmp_path / "model.json"
    save_model(path, doc)
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["format_version"] = FORMAT_VERSION + 1
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(FormatError, match="version"):
        load_model(path)


def test_awkward_floats_survive(tmp_path):
    spec = build_spec("crf", ["a", "b"], 1)
    # values chosen to break naive float printing
    flat = np.array([1.0 / 3.0, -1e-300, 1e300, 5e-324, 0.1, -0.0, 2.0 ** -52, 7.1])
    doc = ModelDocument(spec=spec, params=ParameterVector(spec, flat))
    path = tmp_path / "model.json"
    save_model(path, doc)
    np.testing.assert_array_equal(load_model(path).params.flat, flat)
