"""CSV and JSON persistence for experiment reports."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaMismatch


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _as_row(r) -> dict:
    if isinstance(r, dict):
        return r
    if hasattr(r, "as_dict"):
        return r.as_dict()
    raise SchemaMismatch(f"row of type {type(r).__name__} is not a mapping")


def render_csv(rows: Iterable, schema: Sequence[str]) -> str:
    """Header plus one line per row in schema order, floats at 17 significant digits."""
    schema = list(schema)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(schema)
    for k, r in enumerate(rows):
        r = _as_row(r)
        if set(r) != set(schema):
            extra = sorted(set(r) - set(schema))
            missing = sorted(set(schema) - set(r))
            raise SchemaMismatch(f"row {k}: missing {missing}, unexpected {extra}", row=k)
        w.writerow([format_value(r[c]) for c in schema])
    return buf.getvalue()


def report_writer(rows: Iterable, schema: Sequence[str], path=None, flags: str | None = None) -> str:
    """Write rows as CSV; the command line that produced them goes to ``<path>.meta.json``."""
    text = render_csv(rows, schema)
    if path is not None:
        path = Path(path)
        path.write_text(text)
        if flags is not None:
            meta = {"command": flags, "columns": list(schema)}
            Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    return text


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dump_json(obj, path=None) -> str:
    text = json.dumps(_jsonable(obj), indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
