"""Isoperimetric profiles: round sphere, diameter factor, lower and candidate bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geom_models import ProductSphereMetric, normalized, round_sphere_volume
from .quadrature import simpson

BISECTION_ITERS = 64
BETA_TOL = 1e-12
# relative slack admitted when a diameter equals pi up to roundoff
PI_SLACK = 1e-12

ISOPERIMETRIC_NOTE = (
    "h(beta) itself is not computed: h_lower is the Ricci/diameter lower bound and "
    "h_candidate the best coordinate ball, an upper bound"
)


def _check_beta(beta):
    beta = np.asarray(beta, dtype=float)
    if np.any(~(beta > 0) | ~(beta < 1)):
        raise DomainError("beta must lie in the open interval (0, 1)")
    return beta


def _sin_cap(n, r):
    return simpson(lambda t: np.sin(t) ** (n - 1), np.zeros_like(r), r)


def sphere_profile_h0(n, beta):
    """Normalized boundary area of the geodesic ball of volume fraction beta in S^n."""
    if n < 2:
        raise DomainError("sphere_profile_h0 needs n >= 2")
    beta = _check_beta(beta)
    total = float(_sin_cap(n, np.array(math.pi)))
    lo = np.zeros_like(beta)
    hi = np.full_like(beta, math.pi)
    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        below = _sin_cap(n, mid) / total < beta
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo < 1e-15):
            break
    r = 0.5 * (lo + hi)
    h = round_sphere_volume(n - 1) * np.sin(r) ** (n - 1) / round_sphere_volume(n)
    return float(h) if h.ndim == 0 else h


def _check_d(d):
    if not d > 0:
        raise DomainError(f"diameter must be positive, got {d!r}")
    if d > math.pi * (1 + PI_SLACK):
        raise DomainError(f"diameter {d!r} exceeds pi, impossible when Ricci >= n - 1")
    return min(float(d), math.pi)


def diameter_factor_A(n, d):
    """The factor A(d) >= 1 improving the round profile for diameter d <= pi."""
    if n < 2:
        raise DomainError("diameter_factor_A needs n >= 2")
    d = _check_d(d)
    cos_pow = lambda t: np.cos(t) ** (n - 1)  # noqa: E731
    num = float(simpson(cos_pow, 0.0, math.pi / 2))
    den = float(simpson(cos_pow, 0.0, d / 2))
    return (num / den) ** (1.0 / n)


def resolve_diameter(metric, d_choice):
    """Pick d inside ``diameter_bounds(metric)``.

    ``"myers"`` takes the upper endpoint, ``"pole"`` the pole-to-pole lower
    endpoint; a number is checked against the interval.
    """
    low, high = metric.diameter_bounds
    if d_choice == "myers":
        d = high
    elif d_choice == "pole":
        d = low
    else:
        d = float(d_choice)
        if d < low * (1 - PI_SLACK) or d > high * (1 + PI_SLACK):
            raise DomainError(f"d = {d!r} lies outside the diameter bounds [{low!r}, {high!r}]")
    return _check_d(d)


@dataclass(frozen=True)
class LowerProfile:
    h: float
    A: float
    d_used: float
    scale: float


def bbg_lower(metric, beta, d_choice="myers"):
    """Lower bound for the isoperimetric profile, with its ingredients.

    The metric is rescaled to Ricci >= n - 1, where the bound is A(d) h0(beta)
    with d taken in the rescaled metric, and mapped back with
    ``h_{c g} = h_g / sqrt(c)``.
    """
    beta = _check_beta(beta)
    norm, c = normalized(metric)
    d = resolve_diameter(norm, d_choice)
    a = diameter_factor_A(metric.n, d)
    return LowerProfile(math.sqrt(c) * a * sphere_profile_h0(metric.n, beta), a, d, c)


def bbg_lower_profile(metric, beta, d_choice="myers"):
    return bbg_lower(metric, beta, d_choice).h


def _radius_for_volume(metric, target):
    lo = np.zeros_like(target)
    hi = np.full_like(target, metric.nodes[-1])
    for _ in range(BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        below = metric.ball_volume(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def coordinate_ball_profile(metric, beta):
    """Smallest normalized boundary among ``{r < r0}`` and ``{r > r1}`` of volume fraction beta.

    Any such domain is admissible, so this is an upper bound for h(beta).
    """
    if isinstance(metric, ProductSphereMetric):
        raise DomainError("coordinate-ball profiles are only defined for warped metrics")
    beta = _check_beta(beta)
    v0 = metric.volume
    r0 = _radius_for_volume(metric, beta * v0)
    r1 = _radius_for_volume(metric, (1 - beta) * v0)
    h = np.minimum(metric.sphere_area(r0), metric.sphere_area(r1)) / v0
    return float(h) if h.ndim == 0 else h


def profile_sweep(metric, betas, d_choice="myers"):
    """Rows ``(beta, h_lower, h_candidate, A, d_used)``."""
    betas = _check_beta(betas)
    low = bbg_lower(metric, betas, d_choice)
    cand = coordinate_ball_profile(metric, betas)
    return [
        (float(b), float(hl), float(hc), low.A, low.d_used)
        for b, hl, hc in zip(betas, np.atleast_1d(low.h), np.atleast_1d(cand))
    ]
