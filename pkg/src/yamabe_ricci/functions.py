"""Radial functions and their integrals on a metric's radial grid.

A :class:`RadialFunction` is the piecewise-linear interpolant of its node
samples. With that reading every integral below is the integral of an actual
Lipschitz function: ``f'`` is constant on each cell and powers of ``f`` are
integrated with one Simpson panel per cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Positive samples of a function of the radial coordinate."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape:
            raise ValidationError("nodes and values must be 1-D arrays of equal length")
        if not np.all(np.isfinite(values)):
            raise ValidationError("radial function values must be finite")
        if np.any(values <= 0):
            raise ValidationError("radial function values must be positive")
        nodes.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, metric, func):
        """Sample ``func(r)`` on the metric's nodes."""
        r = metric.nodes
        return cls(r, np.broadcast_to(np.asarray(func(r), dtype=float), r.shape).copy())

    @classmethod
    def constant(cls, metric, value=1.0):
        return cls(metric.nodes, np.full(metric.grid_size, float(value)))

    def __call__(self, r):
        return np.interp(r, self.nodes, self.values)

    def __mul__(self, lam):
        return RadialFunction(self.nodes, self.values * lam)

    __rmul__ = __mul__

    def to_json(self):
        return {"nodes": self.nodes.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(np.asarray(obj["nodes"], float), np.asarray(obj["values"], float))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"radial function JSON needs 'nodes' and 'values': {exc}") from exc


def check_on_grid(metric, f):
    if len(f.values) != metric.grid_size or not np.allclose(f.nodes, metric.nodes, rtol=0, atol=1e-12):
        raise ValidationError("radial function is not sampled on the metric's grid")


@dataclass(frozen=True)
class P1Weights:
    """Quadrature data for piecewise-linear functions on one metric.

    ``node`` and ``mid`` are Simpson weights (density included) at nodes and
    cell midpoints; ``stiff`` multiplies squared cell differences in the
    Dirichlet energy.
    """

    node: np.ndarray
    mid: np.ndarray
    scal_node: np.ndarray
    scal_mid: np.ndarray
    stiff: np.ndarray

    @property
    def lumped_mass(self):
        m = self.node.copy()
        m[:-1] += 0.5 * self.mid
        m[1:] += 0.5 * self.mid
        return m


@lru_cache(maxsize=64)
def _weights_cached(metric):
    r = metric.nodes
    h = metric.h
    mids = 0.5 * (r[:-1] + r[1:])
    d = metric.density(r)
    node = h / 3.0 * d
    node[0], node[-1] = h / 6.0 * d[0], h / 6.0 * d[-1]
    mid = 4.0 * h / 6.0 * metric.density(mids)
    stiff = metric.cell_volumes / (h * metric.stretch) ** 2
    return P1Weights(node, mid, metric.scal_at(r), metric.scal_at(mids), stiff)


def p1_weights(metric):
    return _weights_cached(metric)


def midpoints(values):
    return 0.5 * (values[:-1] + values[1:])


def integral_of(metric, values):
    """Integral of a piecewise-linear function given by node values."""
    w = p1_weights(metric)
    return float(w.node @ values + w.mid @ midpoints(values))


def integral_power(metric, f, q):
    """``int f^q dvol`` for a radial function ``f``."""
    check_on_grid(metric, f)
    w = p1_weights(metric)
    v = f.values
    return float(w.node @ v**q + w.mid @ midpoints(v) ** q)


def p1_dirichlet_energy(metric, values):
    w = p1_weights(metric)
    return float(w.stiff @ np.diff(values) ** 2)


def p1_scal_term(metric, values):
    """``int Scal f^2 dvol``."""
    w = p1_weights(metric)
    return float((w.node * w.scal_node) @ values**2 + (w.mid * w.scal_mid) @ midpoints(values) ** 2)
