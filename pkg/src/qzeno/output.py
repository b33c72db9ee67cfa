"""Deterministic CSV/JSON table writers.

Every file starts with a header holding the tool version, the command and
the fully resolved configuration. Numbers are written in scientific
notation with 12 significant digits; no timestamps are recorded, so the
same inputs always produce byte-identical files.
"""
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path

TRUNCATION_MARKER = "# TRUNCATED: run interrupted before all rows were computed"


def fmt_number(x):
    """12-significant-digit text for floats; other values via ``str``."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float) or hasattr(x, "dtype"):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.11e}"
    return str(x)


def _json_value(x):
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.11e}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return _json_value(obj)


@contextmanager
def _sink(path):
    if path is None or str(path) == "-":
        yield sys.stdout
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        yield fh


def write_table(path, fmt, header, columns, rows, truncated=False):
    """Write ``rows`` (sequences matching ``columns``) to ``path`` or stdout.

    ``header`` is a JSON-serializable mapping (version, command, config).
    """
    with _sink(path) as fh:
        if fmt == "json":
            doc = {"header": _jsonable(header), "columns": list(columns),
                   "rows": [[_json_value(v) for v in row] for row in rows],
                   "truncated": bool(truncated)}
            fh.write(json.dumps(doc, indent=1, sort_keys=False) + "\n")
            return
        fh.write(f"# qzeno {header.get('version')} {header.get('command')}\n")
        fh.write("# config: " + json.dumps(_jsonable(header.get("config")), sort_keys=True) + "\n")
        for key, val in header.items():
            if key not in ("version", "command", "config"):
                fh.write(f"# {key}: {json.dumps(_jsonable(val), sort_keys=True)}\n")
        fh.write("# columns: " + ",".join(columns) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt_number(v) for v in row) + "\n")
        if truncated:
            fh.write(TRUNCATION_MARKER + "\n")
