"""Output helpers for persisting run reports and result tables.

Reports are JSON documents written with sorted keys and two-space
indentation so that loading a report and writing it again reproduces the
same bytes. Non-finite floats are stored as the strings ``"inf"``,
``"-inf"`` and ``"nan"``; a missing value (for example an oracle that found
nothing) is ``null``. Inside the free-form ``rows`` table a non-finite float
is wrapped as ``{"$float": "inf"}`` so text cells stay text.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from ..errors import SchemaError
from .models import REPORT_SCHEMA_VERSION, Certificate, ComparisonRow, RunReport

_NON_FINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}
_FLOAT_TAG = "$float"


def encode_float(value: float | None) -> float | str | None:
    if value is None:
        return None
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def decode_float(value: Any) -> float | None:
    if value is None:
        return None
    if isinstance(value, str):
        if value not in _NON_FINITE:
            raise SchemaError(f"expected a number or one of {sorted(_NON_FINITE)}, got {value!r}")
        return _NON_FINITE[value]
    return float(value)


def _encode_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        encoded = encode_float(value)
        return {_FLOAT_TAG: encoded} if isinstance(encoded, str) else encoded
    if isinstance(value, Mapping):
        return {str(key): _encode_value(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_encode_value(item) for item in value]
    return value


def _decode_value(value: Any) -> Any:
    if isinstance(value, dict) and value.keys() == {_FLOAT_TAG}:
        return decode_float(value[_FLOAT_TAG])
    if isinstance(value, dict):
        return {key: _decode_value(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_decode_value(item) for item in value]
    return value


def certificate_to_dict(cert: Certificate) -> dict[str, Any]:
    return {
        "method": cert.method,
        "p": cert.p,
        "true_class": cert.true_class,
        "target_class": cert.target_class,
        "radius": encode_float(cert.radius),
        "iterations": cert.iterations,
        "bracket_unsafe": encode_float(cert.bracket_unsafe),
        "bracket_safe": encode_float(cert.bracket_safe),
        "wall_time_ms": encode_float(cert.wall_time_ms),
        "status": cert.status,
        "targets": [certificate_to_dict(child) for child in cert.targets],
    }


def certificate_from_dict(data: Mapping[str, Any]) -> Certificate:
    try:
        return Certificate(
            method=data["method"],
            p=data["p"],
            true_class=int(data["true_class"]),
            target_class=None if data["target_class"] is None else int(data["target_class"]),
            radius=decode_float(data["radius"]),
            iterations=int(data["iterations"]),
            bracket_unsafe=decode_float(data["bracket_unsafe"]),
            bracket_safe=decode_float(data["bracket_safe"]),
            wall_time_ms=decode_float(data["wall_time_ms"]),
            status=data["status"],
            targets=[certificate_from_dict(child) for child in data.get("targets", [])],
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed certificate entry ({exc})") from exc


def comparison_to_dict(row: ComparisonRow) -> dict[str, Any]:
    return {
        "method": row.method,
        "target_class": row.target_class,
        "certified": encode_float(row.certified),
        "attack_upper": encode_float(row.attack_upper),
        "grid_min": encode_float(row.grid_min),
        "gap_attack": encode_float(row.gap_attack),
        "gap_grid": encode_float(row.gap_grid),
        "sample_check": row.sample_check,
        "note": row.note,
    }


def comparison_from_dict(data: Mapping[str, Any]) -> ComparisonRow:
    try:
        return ComparisonRow(
            method=data["method"],
            target_class=data["target_class"],
            certified=decode_float(data["certified"]),
            attack_upper=decode_float(data["attack_upper"]),
            grid_min=decode_float(data["grid_min"]),
            gap_attack=decode_float(data["gap_attack"]),
            gap_grid=decode_float(data["gap_grid"]),
            sample_check=data["sample_check"],
            note=data["note"],
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed comparison entry ({exc})") from exc


def report_to_dict(report: RunReport) -> dict[str, Any]:
    return {
        "schema_version": report.schema_version,
        "command": report.command,
        "model_path": report.model_path,
        "input_path": report.input_path,
        "methods": list(report.methods),
        "p": report.p,
        "mode": report.mode,
        "true_class": report.true_class,
        "certificates": [certificate_to_dict(cert) for cert in report.certificates],
        "comparisons": [comparison_to_dict(row) for row in report.comparisons],
        "timing_ms": {str(key): encode_float(value) for key, value in report.timing_ms.items()},
        "rows": _encode_value(report.rows),
    }


def report_from_dict(data: Mapping[str, Any]) -> RunReport:
    version = data.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise SchemaError(f"unsupported report schema version {version!r}")
    try:
        return RunReport(
            command=data["command"],
            model_path=data["model_path"],
            input_path=data["input_path"],
            methods=list(data["methods"]),
            p=data["p"],
            mode=data["mode"],
            true_class=data["true_class"],
            certificates=[certificate_from_dict(item) for item in data["certificates"]],
            comparisons=[comparison_from_dict(item) for item in data["comparisons"]],
            timing_ms={key: decode_float(value) for key, value in data["timing_ms"].items()},
            rows=_decode_value(data["rows"]),
            schema_version=version,
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed report ({exc})") from exc


def dump_report(report: RunReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def write_report(path: Path, report: RunReport) -> Path:
    """Write a run report to *path* as JSON and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_report(report), encoding="utf-8")
    return path


def load_report(path: Path) -> RunReport:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"report is not valid JSON ({exc})", path=path) from exc
    if not isinstance(data, dict):
        raise SchemaError("report must be a JSON object", path=path)
    return report_from_dict(data)


def write_table(rows: list[dict[str, Any]], stem: Path) -> tuple[Path, Path]:
    """Write *rows* next to *stem* as ``.parquet`` and ``.csv``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows)
    parquet_path = stem.with_suffix(".parquet")
    csv_path = stem.with_suffix(".csv")
    df.to_parquet(parquet_path, index=False, engine="pyarrow")
    df.to_csv(csv_path, index=False)
    return parquet_path, csv_path
