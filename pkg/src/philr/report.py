"""Structured run reports written by the CLI."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


@dataclass
class RunReport:
    """One CLI invocation: inputs, results and wall-clock timings.

    Timings live in their own map so everything else can be compared
    byte for byte between runs.
    """

    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    version: str = __version__

    def as_dict(self, include_timings=True):
        d = {"command": self.command, "inputs": self.inputs,
             "outputs": self.outputs, "tool_version": self.version}
        if include_timings:
            d["timings"] = self.timings
        return _plain(d)

    def to_json(self, include_timings=True):
        # float repr is the shortest string that round-trips, i.e. full precision
        return json.dumps(self.as_dict(include_timings), indent=2,
                          sort_keys=True, allow_nan=False) + "\n"
