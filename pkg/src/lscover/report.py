"""Cover reports, their JSON schema and checksummed persistence.

Reports are written with sorted keys and a SHA-256 checksum over the
canonical serialisation of everything else, so a repeated run with the same
seed produces a byte-identical file and any edit to a stored report is
detected on load.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ReportCorrupted

COVER_REPORT_SCHEMA = {
    "type": "object",
    "required": ["experiment", "density", "valid", "grid_resolution", "bounds", "stats", "params"],
    "properties": {
        "experiment": {"type": "string"},
        "chosen_centers": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "chosen_rotations": {"type": "array",
                             "items": {"type": "array", "items": {"type": "number"}, "minItems": 9, "maxItems": 9}},
        "density": {"type": "number", "minimum": 0},
        "valid": {"type": "boolean"},
        "grid_resolution": {"type": ["number", "null"]},
        "bounds": {"type": "object", "additionalProperties": {"type": ["number", "null"]}},
        "stats": {"type": "object"},
        "params": {"type": "object"},
        "checksum": {"type": "string"},
    },
}

SETCOVER_REPORT_SCHEMA = {
    "type": "object",
    "required": ["greedy_size", "tau", "tau_star", "max_deg", "ls_bound", "holds"],
    "properties": {
        "greedy_size": {"type": "integer", "minimum": 0},
        "tau": {"type": ["integer", "null"]},
        "tau_star": {"type": "number"},
        "max_deg": {"type": "integer"},
        "ls_bound": {"type": "number"},
        "holds": {"type": "boolean"},
        "checksum": {"type": "string"},
    },
}


@dataclass
class CoverReport:
    experiment: str
    density: float
    valid: bool
    grid_resolution: float | None
    bounds: dict = field(default_factory=dict)
    chosen_centers: list | None = None
    chosen_rotations: list | None = None
    stats: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            "density": self.density,
            "valid": self.valid,
            "grid_resolution": self.grid_resolution,
            "bounds": self.bounds,
            "stats": self.stats,
            "params": self.params,
        }
        if self.chosen_centers is not None:
            d["chosen_centers"] = self.chosen_centers
        if self.chosen_rotations is not None:
            d["chosen_rotations"] = self.chosen_rotations
        return to_plain(d)


def to_plain(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def canonical(d: dict) -> str:
    return json.dumps(d, sort_keys=True, indent=2, allow_nan=False)


def checksum(d: dict) -> str:
    body = {k: v for k, v in d.items() if k != "checksum"}
    return hashlib.sha256(canonical(body).encode("utf-8")).hexdigest()


def _schema_for(d):
    return COVER_REPORT_SCHEMA if "experiment" in d and "density" in d else SETCOVER_REPORT_SCHEMA


def validate(d: dict) -> None:
    try:
        jsonschema.validate(d, _schema_for(d))
    except jsonschema.ValidationError as exc:
        raise ReportCorrupted(f"schema violation: {exc.message}") from exc


def dumps_report(report) -> str:
    d = report.to_dict() if hasattr(report, "to_dict") else to_plain(dict(report))
    d.pop("checksum", None)
    validate(d)
    d["checksum"] = checksum(d)
    return canonical(d) + "\n"


def save_report(report, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report))
    return path


def load_report(path) -> dict:
    """Read a report back, checking JSON syntax, schema and checksum."""
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ReportCorrupted(f"{path}: unreadable report ({exc})") from exc
    if not isinstance(d, dict):
        raise ReportCorrupted(f"{path}: top level is not an object")
    validate(d)
    if d.get("checksum") != checksum(d):
        raise ReportCorrupted(f"{path}: checksum mismatch")
    return d
