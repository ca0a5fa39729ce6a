import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from rqtraj.serialize import fmt, read_csv, to_csv, to_json


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert float(fmt(x)) == x


def test_fmt_types():
    assert fmt(np.int64(3)) == "3"
    assert fmt(True) == "true"
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt("free") == "free"


def test_csv_round_trip():
    rows = [[0.0, 1 / 3, -2], [1e-300, math.pi, 7]]
    text = to_csv(["t", "x", "n"], rows, {"b": 1.5, "a": "free"})
    assert text.splitlines()[:2] == ["# a=free", "# b=1.5"]
    header, cols, data = read_csv(text)
    assert header == {"a": "free", "b": "1.5"}
    assert cols == ["t", "x", "n"]
    np.testing.assert_array_equal(data, np.array(rows, dtype=float))


def test_json_sorted_and_plain():
    text = to_json({"b": np.array([1.0, 2.0]), "a": np.float64(0.5), "c": float("inf"), "d": np.bool_(True)})
    d = json.loads(text)
    assert list(d) == ["a", "b", "c", "d"]
    assert d == {"a": 0.5, "b": [1.0, 2.0], "c": "inf", "d": True}
