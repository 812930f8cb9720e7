"""Metric backends with exactly computable volume and curvature.

Two families are provided:

* :class:`WarpedSphereMetric` -- ``c * (dr^2 + phi(r)^2 g_{S^{n-1}})`` on S^n,
  with ``r`` in ``[0, L]`` and poles at both ends.
* :class:`ProductSphereMetric` -- round ``S^p(a) x S^q(b)``.

Both expose the same one-dimensional "radial model" used by the rest of the
package: a uniform node grid in a radial coordinate, a volume density along
it (so that ``vol = int density dr``), a ``stretch`` (``sqrt(g_rr)``, so that
``|grad f| = |f'| / stretch``) and the scalar curvature along the grid. For a
product metric the radial coordinate is the polar angle of the first factor.

Integrals over the grid use one Simpson panel per cell (node, midpoint, node).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import DomainError, MetricSpecError, ValidationError
from .quadrature import cell_simpson, simpson

CLOSURE_TOL = 1e-3
MIN_GRID_SIZE = 64
# nodes excluded at each pole from curvature scans
POLE_MARGIN = 2


@lru_cache(maxsize=None)
def round_sphere_volume(n):
    """Volume of the unit round sphere S^n.

    Uses V_n = V_{n-1} * int_0^pi sin^{n-1}(t) dt starting from V_0 = 2.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"round_sphere_volume needs an integer n >= 1, got {n!r}")
    n = int(n)
    prev = 2.0 if n == 1 else round_sphere_volume(n - 1)
    return prev * float(simpson(lambda t: np.sin(t) ** (n - 1), 0.0, math.pi))


# --------------------------------------------------------------------------
# warps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SineWarp:
    """Closed-form warp ``phi(r) = sin r * (1 + eps sin^2 r)`` on ``[0, pi]``.

    ``eps = 0`` is the round metric. Derivatives are exact.
    """

    eps: float = 0.0
    exact = True

    @property
    def length(self):
        return math.pi

    def phi(self, r):
        s = np.sin(r)
        return s * (1.0 + self.eps * s * s)

    def dphi(self, r):
        s, c = np.sin(r), np.cos(r)
        return c * (1.0 + 3.0 * self.eps * s * s)

    def d2phi(self, r):
        s, c = np.sin(r), np.cos(r)
        return -s + self.eps * (6.0 * s * c * c - 3.0 * s**3)

    def pole_ricci(self, n):
        """Common limit of both Ricci eigenvalues at ``r = 0`` and ``r = pi`` (unit scale)."""
        return (n - 1) * (1.0 - 6.0 * self.eps)

    def to_spec(self):
        return {"phi": "sin"} if self.eps == 0.0 else {"phi": "sin_eps", "eps": self.eps}


@dataclass(frozen=True)
class SampledWarp:
    """Warp given by uniform samples on ``[0, length]``, linearly interpolated."""

    values: tuple
    length: float
    exact = False

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) < 3:
            raise ValidationError("a sampled warp needs at least 3 samples")

    @cached_property
    def _grid(self):
        return np.linspace(0.0, self.length, len(self.values))

    def phi(self, r):
        return np.interp(r, self._grid, np.asarray(self.values))

    def to_spec(self):
        return {"phi": list(self.values)}


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------


class _RadialModel:
    """Shared grid machinery; subclasses define nodes, density, stretch."""

    @cached_property
    def h(self):
        return float(self.nodes[1] - self.nodes[0])

    @cached_property
    def cell_volumes(self):
        return cell_simpson(self.density, self.nodes[:-1], self.nodes[1:])

    @cached_property
    def cumulative_volume(self):
        """Volume of ``{r < nodes[i]}`` for every node."""
        return np.concatenate([[0.0], np.cumsum(self.cell_volumes)])

    @cached_property
    def volume(self):
        return float(self.cumulative_volume[-1])

    def ball_volume(self, r):
        """Volume of the coordinate ball ``{r' < r}`` (vectorized)."""
        r = np.clip(np.asarray(r, dtype=float), self.nodes[0], self.nodes[-1])
        i = np.clip(((r - self.nodes[0]) // self.h).astype(int), 0, len(self.nodes) - 2)
        left = self.nodes[i]
        return self.cumulative_volume[i] + cell_simpson(self.density, left, r)

    def sphere_area(self, r):
        """(n-1)-volume of the coordinate sphere at radial coordinate r."""
        return self.density(r) / self.stretch


@dataclass(frozen=True, eq=False)
class WarpedSphereMetric(_RadialModel):
    """Rotationally symmetric metric ``scale * (dr^2 + phi(r)^2 g_{S^{n-1}})``."""

    n: int
    L: float
    warp: object = field(default_factory=SineWarp)
    grid_size: int = 1024
    scale: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"n must be an integer >= 2, got {self.n!r}")
        if self.grid_size < MIN_GRID_SIZE:
            raise ValidationError(f"grid_size must be >= {MIN_GRID_SIZE}")
        if not self.scale > 0:
            raise ValidationError("scale must be positive")
        if not self.L > 0:
            raise ValidationError("L must be positive")
        if abs(self.warp.length - self.L) > 1e-12 * max(1.0, self.L):
            raise ValidationError("warp length does not match L")
        if isinstance(self.warp, SineWarp) and not self.warp.eps > -1.0:
            raise ValidationError("sin_eps warp needs eps > -1")
        self._check_closure()

    def _check_closure(self):
        phi, dphi, _ = self._node_derivatives
        if np.any(phi[1:-1] <= 0):
            raise ValidationError("warp must be positive at interior nodes")
        if abs(phi[0]) > CLOSURE_TOL or abs(phi[-1]) > CLOSURE_TOL:
            raise ValidationError("warp must vanish at both poles")
        if abs(dphi[0] - 1.0) > CLOSURE_TOL or abs(dphi[-1] + 1.0) > CLOSURE_TOL:
            raise ValidationError(
                "smooth closure needs phi'(0) = 1 and phi'(L) = -1 "
                f"(got {dphi[0]:.6g}, {dphi[-1]:.6g})"
            )

    @cached_property
    def nodes(self):
        return np.linspace(0.0, self.L, self.grid_size)

    @cached_property
    def stretch(self):
        return math.sqrt(self.scale)

    @cached_property
    def _omega(self):
        return round_sphere_volume(self.n - 1)

    def density(self, r):
        return self._omega * self.scale ** (self.n / 2) * self.warp.phi(r) ** (self.n - 1)

    @cached_property
    def _node_derivatives(self):
        r = self.nodes
        if self.warp.exact:
            return self.warp.phi(r), self.warp.dphi(r), self.warp.d2phi(r)
        phi = self.warp.phi(r)
        dphi = np.gradient(phi, self.h, edge_order=2)
        d2phi = np.zeros_like(phi)
        d2phi[1:-1] = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / self.h**2
        return phi, dphi, d2phi

    @cached_property
    def _scan(self):
        return slice(POLE_MARGIN, self.grid_size - POLE_MARGIN)

    def _ricci_from(self, phi, dphi, d2phi):
        k = self.n - 1
        radial = -k * d2phi / phi
        tangential = -d2phi / phi + (k - 1) * (1.0 - dphi**2) / phi**2
        return radial / self.scale, tangential / self.scale

    @cached_property
    def ricci_eigenvalues(self):
        """Radial and tangential Ricci eigenvalues on the scan nodes."""
        phi, dphi, d2phi = (a[self._scan] for a in self._node_derivatives)
        return self._ricci_from(phi, dphi, d2phi)

    @cached_property
    def scal_nodes(self):
        if self.warp.exact:
            return self.scal_at(self.nodes)
        radial, tangential = self.ricci_eigenvalues
        inner = radial + (self.n - 1) * tangential
        return np.concatenate(
            [np.full(POLE_MARGIN, inner[0]), inner, np.full(POLE_MARGIN, inner[-1])]
        )

    def scal_at(self, r):
        r = np.asarray(r, dtype=float)
        if not self.warp.exact:
            return np.interp(r, self.nodes, self.scal_nodes)
        lo = self.nodes[POLE_MARGIN]
        hi = self.nodes[-1 - POLE_MARGIN]
        rc = np.clip(r, lo, hi)
        radial, tangential = self._ricci_from(
            self.warp.phi(rc), self.warp.dphi(rc), self.warp.d2phi(rc)
        )
        return radial + (self.n - 1) * tangential

    @cached_property
    def ricci_lower_bound(self):
        radial, tangential = self.ricci_eigenvalues
        rho = min(radial.min(), tangential.min())
        if self.warp.exact:
            # the scan stops short of the poles, where the infimum may sit
            rho = min(rho, self.warp.pole_ricci(self.n) / self.scale)
        return float(rho)

    @cached_property
    def diameter_bounds(self):
        rho = self.ricci_lower_bound
        high = math.pi * math.sqrt((self.n - 1) / rho) if rho > 0 else math.inf
        return self.stretch * self.L, high

    def scaled(self, c):
        """The metric ``c * g``."""
        return WarpedSphereMetric(self.n, self.L, self.warp, self.grid_size, self.scale * c)

    def with_grid(self, grid_size):
        return WarpedSphereMetric(self.n, self.L, self.warp, grid_size, self.scale)

    def to_spec(self):
        return {
            "type": "warped",
            "n": self.n,
            "L": self.L,
            **self.warp.to_spec(),
            "grid_size": self.grid_size,
            "scale": self.scale,
        }


def round_metric(n, grid_size=1024, scale=1.0):
    return WarpedSphereMetric(n, math.pi, SineWarp(), grid_size, scale)


def sin_eps_metric(n, eps, grid_size=1024, scale=1.0):
    """Warp ``sin r (1 + eps sin^2 r)``; ``eps = 0`` is round."""
    return WarpedSphereMetric(n, math.pi, SineWarp(float(eps)), grid_size, scale)


@dataclass(frozen=True, eq=False)
class ProductSphereMetric(_RadialModel):
    """Product of round spheres ``S^p(a) x S^q(b)``.

    The radial coordinate is the polar angle of the ``S^p`` factor, sampled on
    ``grid_size`` nodes; it is only used for functions of that angle.
    """

    p: int
    q: int
    a: float = 1.0
    b: float = 1.0
    grid_size: int = 1024

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise ValidationError(f"{name} must be an integer >= 2, got {v!r}")
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("factor radii must be positive")
        if self.grid_size < MIN_GRID_SIZE:
            raise ValidationError(f"grid_size must be >= {MIN_GRID_SIZE}")

    @property
    def n(self):
        return self.p + self.q

    @cached_property
    def nodes(self):
        return np.linspace(0.0, math.pi, self.grid_size)

    @property
    def stretch(self):
        return self.a

    @cached_property
    def _density_const(self):
        return (
            round_sphere_volume(self.q) * self.b**self.q
            * round_sphere_volume(self.p - 1) * self.a**self.p
        )

    def density(self, theta):
        return self._density_const * np.sin(theta) ** (self.p - 1)

    @cached_property
    def exact_volume(self):
        return round_sphere_volume(self.p) * self.a**self.p * round_sphere_volume(self.q) * self.b**self.q

    @cached_property
    def scal_constant(self):
        return self.p * (self.p - 1) / self.a**2 + self.q * (self.q - 1) / self.b**2

    @cached_property
    def scal_nodes(self):
        return np.full(self.grid_size, self.scal_constant)

    def scal_at(self, r):
        return np.full(np.shape(r), self.scal_constant)

    @cached_property
    def ricci_lower_bound(self):
        return min((self.p - 1) / self.a**2, (self.q - 1) / self.b**2)

    @cached_property
    def diameter_bounds(self):
        rho = self.ricci_lower_bound
        high = math.pi * math.sqrt((self.n - 1) / rho) if rho > 0 else math.inf
        return max(math.pi * self.a, math.pi * self.b), high

    def scaled(self, c):
        s = math.sqrt(c)
        return ProductSphereMetric(self.p, self.q, self.a * s, self.b * s, self.grid_size)

    def with_grid(self, grid_size):
        return ProductSphereMetric(self.p, self.q, self.a, self.b, grid_size)

    def to_spec(self):
        return {
            "type": "product",
            "p": self.p,
            "a": self.a,
            "q": self.q,
            "b": self.b,
            "grid_size": self.grid_size,
        }


# --------------------------------------------------------------------------
# module-level operations
# --------------------------------------------------------------------------


def volume(metric):
    return metric.volume


def scalar_curvature_profile(metric):
    """Scalar curvature sampled on the metric's radial nodes."""
    return metric.scal_nodes


def ricci_lower_bound(metric):
    return metric.ricci_lower_bound


def diameter_bounds(metric):
    """``(d_low, d_high)``; ``d_high`` is the Myers bound or ``inf``."""
    return metric.diameter_bounds


def normalized(metric):
    """Rescale so the Ricci lower bound equals ``n - 1``.

    Returns ``(metric', c)`` with ``metric' = c * metric``.
    """
    from .errors import NotApplicable

    rho = metric.ricci_lower_bound
    if not rho > 0:
        raise NotApplicable(f"Ricci lower bound {rho:.6g} is not positive")
    c = rho / (metric.n - 1)
    return metric.scaled(c), c


# --------------------------------------------------------------------------
# JSON metric specifications
# --------------------------------------------------------------------------


def _require(spec, key, kind):
    if key not in spec:
        raise MetricSpecError(key, "missing")
    value = spec[key]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise MetricSpecError(key, f"expected an integer, got {value!r}")
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise MetricSpecError(key, f"expected a number, got {value!r}")
        value = float(value)
    return value


def _optional(spec, key, kind, default):
    return _require(spec, key, kind) if key in spec else default


def metric_from_spec(spec):
    """Build a metric from its JSON object form.

    ``{"type": "round", "n": 4}``, ``{"type": "warped", "n": 4, "L": 3.14..,
    "phi": "sin" | [samples], "eps": 0.1}`` or
    ``{"type": "product", "p": 2, "a": 1, "q": 2, "b": 1}``. Optional keys:
    ``grid_size`` and ``scale`` (warped), ``grid_size`` (product).
    """
    if not isinstance(spec, dict):
        raise MetricSpecError("<root>", "metric specification must be a JSON object")
    kind = spec.get("type")
    if kind not in ("round", "warped", "product"):
        raise MetricSpecError("type", f"expected 'round', 'warped' or 'product', got {kind!r}")
    grid_size = _optional(spec, "grid_size", int, 1024)
    try:
        if kind == "product":
            return ProductSphereMetric(
                _require(spec, "p", int),
                _require(spec, "q", int),
                _require(spec, "a", float),
                _require(spec, "b", float),
                grid_size,
            )
        n = _require(spec, "n", int)
        scale = _optional(spec, "scale", float, 1.0)
        if kind == "round":
            return round_metric(n, grid_size, scale)
        phi = spec.get("phi", "sin")
        if isinstance(phi, str):
            if phi not in ("sin", "sin_eps"):
                raise MetricSpecError("phi", f"unknown closed form {phi!r}")
            eps = _optional(spec, "eps", float, 0.0)
            warp = SineWarp(eps)
            L = _optional(spec, "L", float, math.pi)
            if abs(L - math.pi) > 1e-12:
                raise MetricSpecError("L", "closed-form sine warps need L = pi")
            L = math.pi
        elif isinstance(phi, list):
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in phi):
                raise MetricSpecError("phi", "samples must be numbers")
            L = _require(spec, "L", float)
            warp = SampledWarp(tuple(phi), L)
        else:
            raise MetricSpecError("phi", "expected 'sin', 'sin_eps' or a list of samples")
        return WarpedSphereMetric(n, L, warp, grid_size, scale)
    except MetricSpecError:
        raise
    except ValidationError as exc:
        raise MetricSpecError(kind, str(exc)) from exc
