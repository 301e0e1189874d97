"""JSON report envelope shared by every subcommand."""
from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from importlib import resources

import numpy as np

SCHEMA_ID = "percolab/1"
TIMESTAMP_FIELD = "created"


def plain(obj):
    """Convert numpy scalars/arrays and tuples to JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def make_report(kind: str, config: dict, result: dict, notes=(), fixture: bool = False,
                timestamp: bool = True) -> dict:
    report = {
        "schema": SCHEMA_ID,
        "kind": kind,
        "config": plain(config),
        "notes": list(notes),
        "fixture": bool(fixture),
        "result": plain(result),
    }
    if timestamp:
        report[TIMESTAMP_FIELD] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_timestamp(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != TIMESTAMP_FIELD}


def load_schema() -> dict:
    text = resources.files("percolab").joinpath("schema/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
