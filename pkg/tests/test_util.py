import json
import math

import numpy as np
import pytest

from pvfaultsig.errors import NumericError
from pvfaultsig.util import derive_rng, dumps_json


def test_derive_rng_deterministic_and_stream_independent():
    a = derive_rng(42, 1, 0).integers(0, 1000, 5)
    b = derive_rng(42, 1, 0).integers(0, 1000, 5)
    c = derive_rng(42, 1, 1).integers(0, 1000, 5)
    d = derive_rng(43, 1, 0).integers(0, 1000, 5)
    assert a.tolist() == b.tolist()
    assert a.tolist() != c.tolist()
    assert a.tolist() != d.tolist()


def test_json_sorted_keys_and_float_format():
    s = dumps_json({"b": 1, "a": 0.1, "c": [1.5, 2, True, None, "x"]})
    assert s == '{"a": 0.10000000000000001, "b": 1, "c": [1.5, 2, true, null, "x"]}\n'


def test_json_round_trip_is_byte_fixed_point():
    rng = np.random.default_rng(0)
    obj = {
        "floats": [float(v) for v in rng.normal(size=20) * 10.0 ** rng.integers(-8, 8, 20)],
        "ints": [int(v) for v in rng.integers(-10**12, 10**12, 5)],
        "nested": {"neg_zero": -0.0, "tiny": 5e-324, "big": 1.7976931348623157e308},
        "text": "line\nbreak\t\"quote\"\\",
    }
    first = dumps_json(obj)
    second = dumps_json(json.loads(first))
    assert first == second
    # parsed floats are value-identical
    parsed = json.loads(first)
    for orig, back in zip(obj["floats"], parsed["floats"]):
        assert orig == back


def test_json_rejects_non_finite():
    with pytest.raises(NumericError):
        dumps_json({"x": math.inf})
    with pytest.raises(NumericError):
        dumps_json([math.nan])


def test_json_numpy_scalars_and_arrays():
    s = dumps_json({"v": np.float64(0.5), "n": np.int64(3), "a": np.array([1.0, 2.0])})
    assert s == '{"a": [1, 2], "n": 3, "v": 0.5}\n'
