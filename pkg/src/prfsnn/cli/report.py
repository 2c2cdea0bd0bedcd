"""CSV / JSON emission of flat records.

CSV columns follow the key order of the first record; floats are written
with ``repr`` so a CSV round trip is exact. JSON is an array of objects.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import asdict, is_dataclass
from pathlib import Path

FORMATS = ("csv", "json")


def _flat(record) -> dict:
    if is_dataclass(record):
        record = asdict(record)
    if not isinstance(record, dict):
        raise TypeError(f"records must be dicts or dataclasses, got {type(record).__name__}")
    for k, v in record.items():
        if isinstance(v, (dict, list, tuple)):
            raise TypeError(f"field {k!r} is not flat")
    return record


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(records, fmt: str = "csv") -> str:
    rows = [_flat(r) for r in records]
    if not rows:
        raise ValueError("no records to emit")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    header = list(rows[0])
    for r in rows[1:]:
        if list(r) != header:
            raise ValueError(f"record fields {list(r)} differ from header {header}")
    if fmt == "json":
        clean = [{k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in r.items()} for r in rows]
        return json.dumps(clean, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_cell(r[k]) for k in header])
    return buf.getvalue()


def emit_report(records, fmt: str = "csv", path=None) -> str:
    """Render ``records`` and write them to ``path`` (stdout when ``None`` or ``"-"``)."""
    text = render(records, fmt)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc
    return text


def _parse(cell: str):
    if cell == "":
        return None
    if cell in ("true", "false"):
        return cell == "true"
    for cast in (int, float):
        try:
            return cast(cell)
        except ValueError:
            pass
    return cell


def read_report(path, fmt: str | None = None) -> list[dict]:
    """Load records written by :func:`emit_report`, restoring numbers and booleans."""
    text = Path(path).read_text()
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "json":
        return json.loads(text)
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return [dict(zip(header, (_parse(c) for c in row))) for row in reader]
