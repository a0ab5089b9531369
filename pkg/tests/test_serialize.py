import json
import math

import numpy as np

from reducing_atlas.serialize import csv_text, dumps, fmt_float, to_plain


def test_floats_use_17_significant_digits():
    assert fmt_float(0.1) == "0.10000000000000001"
    text = dumps({"x": 0.1, "y": 1.0})
    assert '"x": 0.10000000000000001' in text and '"y": 1.0' in text


def test_round_trip_is_exact():
    rng = np.random.default_rng(3)
    vals = rng.standard_normal(50) * 10.0 ** rng.integers(-20, 20, 50)
    back = json.loads(dumps({"v": vals}))["v"]
    assert back == vals.tolist()


def test_complex_and_arrays():
    doc = to_plain({"m": np.array([[1 + 2j, 0], [0, -1j]]), "k": np.int64(3), "b": np.bool_(True)})
    assert doc == {"m": [[[1.0, 2.0], [0.0, 0.0]], [[0.0, 0.0], [-0.0, -1.0]]], "k": 3, "b": True}
    assert to_plain(float("nan")) is None and to_plain(math.inf) is None


def test_key_order_is_preserved():
    text = dumps({"b": 1, "a": 2})
    assert text.index('"b"') < text.index('"a"')


def test_csv():
    text = csv_text(["name", "value"], [["x", 0.1], ["y", 2]])
    assert text == "name,value\nx,0.10000000000000001\ny,2\n"
