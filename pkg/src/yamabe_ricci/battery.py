"""Test functions for the gradient-comparison battery.

The battery lives in ``data/battery.json`` so that its contents are versioned
with the code; the random splines there were drawn once with
:func:`random_spline_entry` and a fixed seed.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ValidationError
from .functions import RadialFunction


def load_battery():
    text = resources.files("yamabe_ricci").joinpath("data/battery.json").read_text()
    return json.loads(text)["functions"]


def random_spline_entry(rng, name, max_knots=12):
    """A positive monotone-preserving spline with random knot values in [0.2, 3]."""
    k = int(rng.integers(4, max_knots + 1))
    return {
        "name": name,
        "kind": "spline",
        "knots": np.linspace(0.0, 1.0, k).tolist(),
        "values": rng.uniform(0.2, 3.0, k).round(6).tolist(),
    }


def battery_function(entry, metric):
    """Sample a battery entry on the metric's nodes; ``x = r / r_max`` in [0, 1]."""
    x = metric.nodes / metric.nodes[-1]
    kind = entry.get("kind")
    if kind == "constant":
        values = np.full_like(x, float(entry["value"]))
    elif kind == "cos":
        values = entry["offset"] + np.cos(math.pi * x)
    elif kind == "sin":
        values = entry["offset"] + np.sin(math.pi * x)
    elif kind == "spline":
        # PCHIP keeps positive data positive
        values = PchipInterpolator(entry["knots"], entry["values"])(x)
    else:
        raise ValidationError(f"unknown battery kind {kind!r}")
    return RadialFunction(metric.nodes, values)


def random_radial_function(metric, rng):
    return battery_function(random_spline_entry(rng, "random"), metric)
