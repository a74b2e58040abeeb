"""JSON documents for maps and reports.

One schema file (schema.json, shipped with the package) covers both the
map documents consumed by the CLI and the machine-readable reports it
emits; the version field is mandatory so corpora survive refactors.
Complex numbers are serialized as [re, im] pairs of IEEE doubles, which
round-trips losslessly through Python's json module.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json

import numpy as np

from .errors import ParseError
from .holsztynski import CommutativeMap
from .linmap import MatrixMap, Shape

SCHEMA_VERSION = 1


def _schema():
    text = importlib.resources.files("isolab").joinpath("schema.json").read_text()
    return json.loads(text)


def validate_document(doc: dict) -> None:
    """Validate a parsed document against the shipped schema."""
    import jsonschema

    schema = _schema()
    kind = doc.get("kind")
    key = {"matrix_map": "map_document", "commutative_map": "commutative_document",
           "report": "report"}.get(kind)
    if key is None:
        raise ParseError(f"unknown document kind {kind!r}", "kind")
    try:
        jsonschema.validate(doc, {**schema["definitions"][key],
                                  "definitions": schema["definitions"]})
    except jsonschema.ValidationError as exc:
        raise ParseError(exc.message, "/".join(str(p) for p in exc.absolute_path)) from exc


def complex_to_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def matrix_to_lists(mat: np.ndarray) -> list:
    return [[complex_to_pair(z) for z in row] for row in np.asarray(mat, dtype=complex)]


def matrix_from_lists(data, location: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise ParseError("expected a nonempty list of rows", location)
    rows = []
    width = None
    for i, row in enumerate(data):
        if not isinstance(row, list):
            raise ParseError("expected a list of entries", f"{location}[{i}]")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} entries, got {len(row)}", f"{location}[{i}]")
        entries = []
        for j, pair in enumerate(row):
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(c, (int, float)) for c in pair)):
                raise ParseError("expected an [re, im] pair", f"{location}[{i}][{j}]")
            entries.append(complex(pair[0], pair[1]))
        rows.append(entries)
    return np.array(rows, dtype=complex)


def map_to_document(t: MatrixMap, metadata: dict | None = None) -> dict:
    doc = {
        "version": SCHEMA_VERSION,
        "kind": "matrix_map",
        "domain": {"rows": t.domain.rows, "cols": t.domain.cols},
        "codomain": {"rows": t.codomain.rows, "cols": t.codomain.cols},
        "action": [matrix_to_lists(img) for img in t.action],
    }
    if metadata:
        doc["metadata"] = metadata
    return doc


def map_from_document(doc: dict) -> tuple[MatrixMap, dict]:
    if doc.get("kind") != "matrix_map":
        raise ParseError(f"expected kind 'matrix_map', got {doc.get('kind')!r}", "kind")
    if doc.get("version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported version {doc.get('version')!r}", "version")
    try:
        dom = Shape(int(doc["domain"]["rows"]), int(doc["domain"]["cols"]))
        cod = Shape(int(doc["codomain"]["rows"]), int(doc["codomain"]["cols"]))
    except (KeyError, TypeError) as exc:
        raise ParseError("missing or malformed shape", "domain/codomain") from exc
    action = doc.get("action")
    if not isinstance(action, list) or len(action) != dom.dim:
        raise ParseError(f"expected {dom.dim} unit images", "action")
    images = []
    for k, img in enumerate(action):
        mat = matrix_from_lists(img, f"action[{k}]")
        if mat.shape != (cod.rows, cod.cols):
            raise ParseError(f"expected {cod.rows}x{cod.cols}, got {mat.shape[0]}x{mat.shape[1]}",
                             f"action[{k}]")
        images.append(mat)
    return MatrixMap(dom, cod, np.stack(images)), doc.get("metadata", {})


def commutative_to_document(cm: CommutativeMap, metadata: dict | None = None) -> dict:
    doc = {
        "version": SCHEMA_VERSION,
        "kind": "commutative_map",
        "k1": cm.k1,
        "k2": cm.k2,
        "rows": matrix_to_lists(cm.matrix),
    }
    if metadata:
        doc["metadata"] = metadata
    return doc


def commutative_from_document(doc: dict) -> tuple[CommutativeMap, dict]:
    if doc.get("kind") != "commutative_map":
        raise ParseError(f"expected kind 'commutative_map', got {doc.get('kind')!r}", "kind")
    if doc.get("version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported version {doc.get('version')!r}", "version")
    mat = matrix_from_lists(doc.get("rows"), "rows")
    if mat.shape != (int(doc.get("k2", -1)), int(doc.get("k1", -1))):
        raise ParseError("rows do not match declared k1/k2", "rows")
    return CommutativeMap(mat), doc.get("metadata", {})


def load_document(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from exc
    except OSError as exc:
        raise ParseError(str(exc), path) from exc


def dump_document(doc: dict, path: str | None) -> str:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text


def canonical_digest(doc: dict) -> str:
    """Stable digest of a document's canonical JSON form."""
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
