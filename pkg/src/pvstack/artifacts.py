"""Deterministic JSON artifacts.

Arrays are stored as base64 of their little-endian bytes so values survive a
round trip bit-for-bit and repeated saves are byte-identical.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .errors import MissingArtifact, SchemaMismatch


def encode_array(a) -> dict:
    a = np.ascontiguousarray(a)
    dtype = a.dtype.newbyteorder("<") if a.dtype.byteorder == ">" else a.dtype
    a = a.astype(dtype, copy=False)
    return {"dtype": dtype.str, "shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(doc: dict) -> np.ndarray:
    raw = base64.b64decode(doc["data"])
    return np.frombuffer(raw, dtype=np.dtype(doc["dtype"])).reshape(doc["shape"]).copy()


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def save(doc: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))
    return path


def load(path, kind: str, schema_version: int) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"artifact not found: {path}")
    doc = json.loads(path.read_text())
    if doc.get("kind") != kind:
        raise SchemaMismatch(f"{path}: expected a {kind!r} artifact, found {doc.get('kind')!r}")
    if doc.get("schema_version") != schema_version:
        raise SchemaMismatch(
            f"{path}: {kind} schema version {doc.get('schema_version')} != supported {schema_version}"
        )
    return doc
