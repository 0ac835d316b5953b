"""
CSV and JSON emission shared by the CLI and the API. Every document starts
with a versioned header; numbers are written with repr so the same run
always produces the same bytes.
"""

import csv
import io
import json
import math
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from app.core.config import settings


def header_line(command: str) -> str:
    return f"# {settings.PROJECT_NAME} schema={settings.OUTPUT_SCHEMA_VERSION} command={command}"


def plain(value: Any) -> Any:
    """JSON-safe form: non-finite floats become strings, Fractions become floats."""
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Mapping):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        # str enums
        return value.value
    return value


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return repr(float(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return str(value)


def to_csv(command: str, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    buffer = io.StringIO()
    buffer.write(header_line(command) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buffer.getvalue()


def to_json(command: str, payload: Any, run: Mapping[str, Any] | None = None) -> str:
    document = {
        "schema_version": settings.OUTPUT_SCHEMA_VERSION,
        "command": command,
        "run": plain(run or {}),
        "settings": {
            "MC_STREAM_BLOCK": settings.MC_STREAM_BLOCK,
            "LIPSCHITZ_DELTA": settings.LIPSCHITZ_DELTA,
        },
        "result": plain(payload),
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def read_csv(text: str) -> list[dict[str, str]]:
    """Rows of a document written by to_csv, header comment skipped."""
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    return list(csv.DictReader(lines))
