"""CSV rendering with full-precision floats, written atomically."""

from __future__ import annotations

import csv
import io

from ..autodiff.checkpoint import atomic_write_bytes


def _cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return "" if v is None else v


def format_rows(rows, fields):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _cell(r.get(k)) for k in fields})
    return buf.getvalue()


def write_rows(path, rows, fields):
    atomic_write_bytes(path, format_rows(rows, fields).encode())


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
