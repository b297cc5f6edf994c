"""Deterministic machine-readable output.

Every artifact embeds the configuration that produced it: CSV files
carry a leading comment line with the config hash, JSON files embed the
full config, its hash, and the package version.  Formatting is pinned
(shortest round-trip floats, '.' decimal separator, '\\n' line ends,
sorted JSON keys, no timestamps) so a re-run from the embedded config
reproduces every byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .config import VERSION


def jsonable(value):
    """Recursively convert a result object to plain JSON-ready data.

    Handles numpy scalars/arrays, dataclasses, paths, and mappings.
    Non-finite floats become the strings "inf", "-inf", "nan" so the
    output stays strict JSON.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: jsonable(getattr(value, f.name))
                for f in dataclasses.fields(value)}
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, complex):
        return {"re": jsonable(value.real), "im": jsonable(value.imag)}
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(obj) -> str:
    """Key-sorted compact JSON; the byte-stable form that gets hashed."""
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form of a configuration."""
    return hashlib.sha256(canonical_json(config).encode("ascii")).hexdigest()


def _cell(v) -> str:
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header: list[str], rows, config: dict,
              emit_schema: bool = True) -> Path:
    """Write rows with a pinned format and a config-hash comment line.

    First line: ``# config_hash=<sha256>``; second line: the header;
    floats render via repr (shortest string that round-trips).  A
    sibling ``<name>.columns.json`` documents the column layout unless
    disabled.
    """
    path = Path(path)
    lines = [f"# config_hash={config_hash(config)}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    if emit_schema:
        meta = {
            "columns": header,
            "decimal": ".",
            "line_terminator": "\\n",
            "leading_comment": "config_hash",
        }
        path.with_suffix(".columns.json").write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="ascii"
        )
    return path


def write_json(path, result, config: dict, emit_schema: bool = True) -> Path:
    """Write a result envelope: config, hash, version, result.

    A sibling ``<name>.schema.json`` describing the document's shape is
    emitted unless disabled.
    """
    path = Path(path)
    doc = {
        "config": jsonable(config),
        "config_hash": config_hash(config),
        "version": VERSION,
        "result": jsonable(result),
    }
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="ascii")
    if emit_schema:
        schema = {
            "$schema": "https://json-schema.org/draft/2020-12/schema",
            "title": path.stem,
        }
        schema.update(infer_schema(doc))
        spath = path.with_suffix(".schema.json")
        spath.write_text(
            json.dumps(schema, sort_keys=True, indent=2) + "\n", encoding="ascii"
        )
    return path


def infer_schema(doc) -> dict:
    """Structural JSON schema of a concrete document.

    Numbers that may be non-finite appear as the strings "inf"/"nan",
    hence string-typed leaves where a float would be expected; the
    schema reflects the document as written.
    """
    if isinstance(doc, dict):
        return {
            "type": "object",
            "properties": {k: infer_schema(v) for k, v in sorted(doc.items())},
        }
    if isinstance(doc, list):
        if doc:
            return {"type": "array", "items": infer_schema(doc[0])}
        return {"type": "array"}
    if isinstance(doc, bool):
        return {"type": "boolean"}
    if isinstance(doc, int):
        return {"type": "integer"}
    if isinstance(doc, float):
        return {"type": "number"}
    if doc is None:
        return {"type": "null"}
    return {"type": "string"}


def read_embedded_config(path) -> dict:
    """Recover the exact configuration a JSON artifact was produced from."""
    doc = json.loads(Path(path).read_text(encoding="ascii"))
    return doc["config"]
