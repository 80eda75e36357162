import json

import numpy as np
import pytest

from philr import __version__
from philr.report import RunReport


def test_json_full_precision_and_types():
    x = 0.1 + 0.2
    rep = RunReport("scr", {"tol": 1e-5}, {"v": np.float64(x), "n": np.int64(3),
                                           "arr": np.array([1.0, 2.0]), "ok": np.bool_(True),
                                           "t": (1, 2)}, {"scr": 0.5})
    d = json.loads(rep.to_json())
    assert d["outputs"]["v"] == x  # shortest round-trip repr
    assert d["outputs"]["n"] == 3 and d["outputs"]["ok"] is True
    assert d["tool_version"] == __version__
    assert "timings" not in json.loads(rep.to_json(include_timings=False))


def test_nonfinite_rendered_as_text():
    rep = RunReport("x", outputs={"v": float("inf")})
    assert json.loads(rep.to_json())["outputs"]["v"] == "inf"


def test_sorted_keys_are_stable():
    a = RunReport("x", {"b": 1, "a": 2}).to_json()
    b = RunReport("x", {"a": 2, "b": 1}).to_json()
    assert a == b
    with pytest.raises(TypeError):
        RunReport("x", {"obj": object()}).to_json()
