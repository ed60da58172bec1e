"""Task-file loading, schema validation and deterministic report writing."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema

from .errors import InputError

SCHEMA_VERSION = "1"

_word = {"type": "array", "items": {"type": "integer", "minimum": 0}}
_algebra = {
    "type": "object", "additionalProperties": False,
    "properties": {"commutative": {"type": "integer", "minimum": 1},
                   "blocks": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}},
}
_corr = {
    "type": "object", "additionalProperties": False, "required": ["type"],
    "properties": {
        "type": {"enum": ["crossed_product", "twisted_free", "identity", "random_fgp"]},
        "n": {"type": "integer", "minimum": 1},
        "shift": {"type": "integer"},
        "shifts": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "algebra": _algebra,
        "rank": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "free": {"type": "boolean"},
    },
}
_tower = {
    "type": "object", "additionalProperties": False, "required": ["type"],
    "properties": {
        "type": {"enum": ["cyclic", "diagonal"]},
        "n": {"type": "integer", "minimum": 1},
        "p": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 0, "maximum": 1},
        "levels": {"type": "array", "items": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}},
    },
}
_band = {
    "type": "object", "additionalProperties": False,
    "properties": {"x": _word, "y": _word,
                   "coef": {"oneOf": [{"type": "number"},
                                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}},
}
_graph = {
    "type": "object", "additionalProperties": False, "required": ["entities"],
    "properties": {
        "entities": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id", "kind"],
            "properties": {"id": {"type": "string"}, "kind": {"type": "string"}, "over": {"type": "string"}}}},
        "constructions": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["op", "out"],
            "properties": {"op": {"type": "string"},
                           "in": {"oneOf": [{"type": "string"}, {"type": "array", "items": {"type": "string"}}]},
                           "out": {"type": "string"}, "copies": {"type": "integer"},
                           "m": {"type": "integer"}, "n": {"type": "integer"}}}},
        "declared": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["entity", "attribute"],
            "properties": {"entity": {"type": "string"}, "attribute": {"type": "string"},
                           "value": {"type": ["number", "boolean"]}}}},
    },
}


def _task(name: str, props: Mapping[str, Any], required: Sequence[str] = ()) -> dict:
    return {
        "type": "object", "additionalProperties": False,
        "required": ["version", "task", *required],
        "properties": {"version": {"const": SCHEMA_VERSION}, "task": {"const": name}, **props},
    }


TASK_SCHEMAS: dict[str, dict] = {
    "check_tower": _task("check_tower", {
        "correspondence": _corr, "tower": _tower, "vectors": {"type": "array", "items": _word},
        "eps": {"type": "number", "exclusiveMinimum": 0}}, ["correspondence", "tower"]),
    "synthesize_tower": _task("synthesize_tower", {
        "n": {"type": "integer", "minimum": 1}, "p": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 0, "maximum": 1}}, ["n", "p"]),
    "verify_factorization": _task("verify_factorization", {
        "correspondence": _corr, "tower": _tower, "F": {"type": "array", "items": _band, "minItems": 1},
        "epsilon": {"type": "number", "exclusiveMinimum": 0}, "q_max": {"type": "integer", "minimum": 2}},
        ["correspondence", "tower", "F", "epsilon", "q_max"]),
    "sweep": _task("sweep", {
        "p": {"type": "array", "items": {"type": "integer"}},
        "d": {"type": "integer", "minimum": 0, "maximum": 1},
        "F": {"type": "array", "items": _band, "minItems": 1},
        "q_extra": {"type": "integer", "minimum": 3},
        "epsilon": {"type": "number", "exclusiveMinimum": 0}}, ["p"]),
    "quasicentral_check": _task("quasicentral_check", {
        "correspondence": _corr, "p": {"type": "integer", "minimum": 1},
        "n": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}},
        ["correspondence", "p", "n"]),
    "bounds": _task("bounds", {"graph": _graph, "r9_variant": {"enum": ["statement", "proof"]},
                               "explain": {"type": "array", "items": {"type": "string"}}}, ["graph"]),
    "relations": _task("relations", {
        "count": {"type": "integer", "minimum": 1}, "max_blocks": {"type": "integer", "minimum": 1},
        "max_block_size": {"type": "integer", "minimum": 1}, "max_rank": {"type": "integer", "minimum": 1},
        "max_cutoff": {"type": "integer", "minimum": 2}}),
}


def parse_json_text(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_task(path: str | Path, expected: str | None = None) -> dict:
    """Read, parse and schema-validate a task file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc.strerror}") from None
    doc = parse_json_text(text, str(p))
    return validate_task(doc, expected)


def validate_task(doc: Any, expected: str | None = None) -> dict:
    if not isinstance(doc, dict):
        raise InputError("task file must contain a JSON object")
    name = doc.get("task")
    if name not in TASK_SCHEMAS:
        raise InputError(f"unknown task {name!r}")
    if expected is not None and name != expected:
        raise InputError(f"task file is a {name!r} task, expected {expected!r}")
    try:
        jsonschema.validate(doc, TASK_SCHEMAS[name])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(s) for s in exc.absolute_path) or "<root>"
        raise InputError(f"schema violation at {where}: {exc.message}") from None
    return doc


def _clean(obj: Any) -> Any:
    """Make floats JSON-safe and numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, obj: Any) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(obj))
    return p


def write_csv(path: str | Path, rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: _clean(r.get(c)) for c in columns})
    return p
