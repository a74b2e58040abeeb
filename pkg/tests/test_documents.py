import json

import numpy as np
import pytest

from helpers import rand_mat
from isolab import documents as D
from isolab.errors import ParseError
from isolab.holsztynski import CommutativeMap
from isolab.linmap import MatrixMap, Shape


def test_map_document_roundtrip_lossless():
    rng = np.random.default_rng(140)
    t = MatrixMap(Shape(2, 3), Shape(3, 2), rand_mat(rng, 6, 6).reshape(6, 3, 2))
    doc = D.map_to_document(t, metadata={"name": "roundtrip"})
    blob = json.dumps(doc)
    back, meta = D.map_from_document(json.loads(blob))
    assert np.array_equal(back.action, t.action)
    assert meta["name"] == "roundtrip"


def test_commutative_document_roundtrip():
    cm = CommutativeMap(np.array([[1, 0], [0.25, -0.25j]], dtype=complex))
    doc = D.commutative_to_document(cm)
    back, _ = D.commutative_from_document(json.loads(json.dumps(doc)))
    assert np.array_equal(back.matrix, cm.matrix)


def test_digest_stable():
    t = MatrixMap.identity(Shape(2, 2))
    doc = D.map_to_document(t)
    assert D.canonical_digest(doc) == D.canonical_digest(json.loads(json.dumps(doc)))


def test_validation_passes_for_generated_documents():
    t = MatrixMap.identity(Shape(2, 2))
    D.validate_document(D.map_to_document(t))
    cm = CommutativeMap(np.eye(2, dtype=complex))
    D.validate_document(D.commutative_to_document(cm))


def test_malformed_action_positions():
    t = MatrixMap.identity(Shape(2, 2))
    doc = D.map_to_document(t)
    doc["action"][3][1][0] = [1.0]  # not an [re, im] pair
    with pytest.raises(ParseError) as err:
        D.map_from_document(doc)
    assert "action[3]" in str(err.value)


def test_wrong_unit_count():
    t = MatrixMap.identity(Shape(2, 2))
    doc = D.map_to_document(t)
    doc["action"] = doc["action"][:3]
    with pytest.raises(ParseError):
        D.map_from_document(doc)


def test_wrong_kind_and_version():
    t = MatrixMap.identity(Shape(2, 2))
    doc = D.map_to_document(t)
    doc["version"] = 99
    with pytest.raises(ParseError):
        D.map_from_document(doc)
    doc["version"] = 1
    doc["kind"] = "mystery"
    with pytest.raises(ParseError):
        D.map_from_document(doc)


def test_ragged_rows_rejected_with_position():
    doc = {
        "version": 1, "kind": "commutative_map", "k1": 2, "k2": 2,
        "rows": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0]]],
    }
    with pytest.raises(ParseError) as err:
        D.commutative_from_document(doc)
    assert "rows[1]" in str(err.value)


def test_load_document_syntax_error_location(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"version": 1,\n  "kind": }')
    with pytest.raises(ParseError) as err:
        D.load_document(str(path))
    assert ":2:" in str(err.value)
