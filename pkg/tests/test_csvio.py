import numpy as np
from hypothesis import given, strategies as st

from upbdimer.csvio import format_value, read_csv, render_csv, write_csv


def test_format_value():
    assert format_value(None) == ""
    assert format_value(float("nan")) == ""
    assert format_value(3) == "3"
    assert format_value(np.int64(4)) == "4"
    assert format_value("abc") == "abc"
    assert format_value(0.1) == "1.0000000000000001e-01"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert float(format_value(x)) == x


def test_file_layout(tmp_path):
    path = tmp_path / "out.csv"
    write_csv(path, ["a", "b"], [[1.5, None], [2.0, "x"]], {"J": 0.4, "note": "é"})
    raw = path.read_bytes()
    assert b"\r" not in raw
    text = raw.decode("utf-8")
    lines = text.split("\n")
    assert lines[:3] == ["# J = 0.4", "# note = é", "a,b"]
    assert lines[3] == "1.5000000000000000e+00,"
    assert text.endswith("\n")
    meta, cols, rows = read_csv(path)
    assert meta == {"J": "0.4", "note": "é"}
    assert cols == ["a", "b"]
    assert rows == [[1.5, None], [2.0, "x"]]


def test_render_is_deterministic():
    rows = [[0.1 * i, np.sqrt(i)] for i in range(5)]
    assert render_csv(["x", "y"], rows, {"k": 1}) == render_csv(["x", "y"], rows, {"k": 1})
