"""CSV emission for scan results.

Files are UTF-8 with LF line endings: a block of ``# key = value`` comment
lines recording the run parameters, one header row, then data rows. Floats
are written in scientific notation with 17 significant digits so that
parsing recovers them exactly; missing values are empty cells.
"""
from __future__ import annotations

import csv
import io
import math
from typing import Iterable, Mapping, Sequence

import numpy as np


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.16e}"


def render_csv(columns: Sequence[str], rows: Iterable[Sequence],
               comments: Mapping[str, object] = ()) -> str:
    buf = io.StringIO(newline="")
    for key, value in dict(comments).items():
        buf.write(f"# {key} = {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, comments=()) -> None:
    text = render_csv(columns, rows, comments)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_csv(path):
    """Return ``(comments, columns, rows)``; numeric cells come back as floats."""
    comments = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            comments[key.strip()] = value.strip()
        elif line:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [[_parse(cell) for cell in row] for row in reader]
    return comments, columns, rows


def _parse(cell):
    if cell == "":
        return None
    try:
        return float(cell)
    except ValueError:
        return cell
