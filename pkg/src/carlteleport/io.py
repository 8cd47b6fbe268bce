"""Deterministic file outputs: full-precision CSV, canonical JSON, versioned report schemas."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import jsonschema
import numpy as np

REPORT_SCHEMA_VERSION = "1.0"

_num = {"type": "number"}
_num_or_null = {"type": ["number", "null"]}

_common = {
    "schema_version": {"const": REPORT_SCHEMA_VERSION},
    "kind": {"type": "string"},
    "config": {"type": "object"},
}

REPORT_SCHEMAS = {
    "dynamics": {
        "type": "object",
        "required": ["schema_version", "kind", "config", "time", "window", "final", "max_leakage", "max_c_drift"],
        "properties": {
            **_common,
            "time": _num,
            "window": {"type": "object", "required": ["t_lower_scale", "t_upper"]},
            "final": {"type": "object", "required": ["N1", "N2", "N3"]},
            "max_leakage": _num,
            "max_c_drift": _num,
        },
    },
    "teleport": {
        "type": "object",
        "required": ["schema_version", "kind", "config", "time", "input", "resource", "k", "fidelity",
                     "trace_distance", "quadrature", "samples", "seed"],
        "properties": {
            **_common,
            "time": _num_or_null,
            "input": {"type": "object", "required": ["kind"]},
            "resource": {"type": "object", "required": ["n1", "n3"]},
            "k": _num,
            "fidelity": {"type": "object", "required": ["quadrature", "channel"]},
            "trace_distance": {"type": "object", "required": ["channel_consistency"]},
            "quadrature": {"type": "object", "required": ["raw_trace", "tolerance", "radius", "n_radial", "n_angular"]},
            "samples": {"type": "integer", "minimum": 0},
            "seed": {"type": "integer"},
        },
    },
    "readout": {
        "type": "object",
        "required": ["schema_version", "kind", "config", "k", "shots", "seed", "simulation-only",
                     "experimentally accessible"],
        "properties": {
            **_common,
            "k": _num,
            "shots": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
            "simulation-only": {
                "type": "object",
                "required": ["fidelity", "root_fidelity", "trace_distance"],
            },
            "experimentally accessible": {
                "type": "object",
                "required": ["diagonal_tv_distance", "odd_weight", "number_variance", "empirical_odd_fraction",
                             "empirical_tv_distance", "tv_bound"],
            },
        },
    },
    "verification": {
        "type": "object",
        "required": ["schema_version", "kind", "criteria", "passed"],
        "properties": {
            **_common,
            "criteria": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["id", "name", "passed", "values"],
                    "properties": {"id": {"type": "integer"}, "name": {"type": "string"},
                                   "passed": {"type": "boolean"}, "values": {"type": "object"}},
                },
            },
            "passed": {"type": "boolean"},
        },
    },
}


def _plain(value):
    """Convert numpy scalars/arrays and tuples into JSON-native values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def make_report(kind: str, **fields) -> dict:
    report = {"schema_version": REPORT_SCHEMA_VERSION, "kind": kind, **fields}
    return _plain(report)


def validate_report(report: dict) -> None:
    schema = REPORT_SCHEMAS.get(report.get("kind"))
    if schema is None:
        raise ValueError(f"unknown report kind {report.get('kind')!r}")
    jsonschema.validate(report, schema)


def dumps_json(data) -> str:
    return json.dumps(_plain(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, data, validate: bool = True) -> Path:
    if validate:
        validate_report(data)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(data))
    return path


def format_number(x) -> str:
    """Round-trip decimal with 17 significant digits (integers stay integers)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return header, data
