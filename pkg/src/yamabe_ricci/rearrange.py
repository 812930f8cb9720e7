"""Distribution functions, spherical rearrangement and the gradient comparison.

Everything here treats a :class:`~yamabe_ricci.functions.RadialFunction` as
its piecewise-linear interpolant, so the superlevel set ``{f > t}`` is an exact
union of radial intervals whose endpoints are found cell by cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .functions import RadialFunction, check_on_grid, p1_dirichlet_energy
from .geom_models import normalized, round_metric, round_sphere_volume
from .isoperimetry import diameter_factor_A, resolve_diameter
from .quadrature import cell_simpson

MIN_LEVELS = 16
MAX_ROOT_ITERS = 60
# level solves stop once |mu{f > t} - vol(B_r)| <= ROOT_TOL * V0
ROOT_TOL = 1e-14
# target grid cells per source cell; integer so a monotone f on the round
# sphere is reproduced exactly
TARGET_REFINE = 4


@dataclass(frozen=True)
class DistributionProfile:
    """Pairs ``(t_k, mu{f > t_k})`` with ``t_k`` strictly increasing."""

    levels: np.ndarray
    masses: np.ndarray
    total_volume: float

    def csv_rows(self):
        return [(float(t), float(m)) for t, m in zip(self.levels, self.masses)]


class _Cells:
    """Per-cell data of a piecewise-linear radial function."""

    def __init__(self, metric, f):
        check_on_grid(metric, f)
        self.metric = metric
        v = f.values
        self.left_r = metric.nodes[:-1]
        self.right_r = metric.nodes[1:]
        self.f0 = v[:-1]
        self.f1 = v[1:]
        self.lo = np.minimum(self.f0, self.f1)
        self.hi = np.maximum(self.f0, self.f1)
        self.volume = metric.cell_volumes
        self.slope = (self.f1 - self.f0) / metric.h
        order = np.argsort(self.lo, kind="stable")
        self.lo_sorted = self.lo[order]
        # suffix[i] = total volume of the cells with rank >= i in lo order
        self.suffix = np.concatenate([np.cumsum(self.volume[order][::-1])[::-1], [0.0]])

    def full_above(self, t, strict=True):
        """Volume of the cells with ``lo > t`` (``lo >= t`` if not strict)."""
        side = "right" if strict else "left"
        return self.suffix[np.searchsorted(self.lo_sorted, t, side=side)]

    def crossing_point(self, cells, t):
        return self.left_r[cells] + (t - self.f0[cells]) / self.slope[cells]

    def partial(self, cells, t):
        """Volume of ``{f > t}`` inside each given crossing cell."""
        r = self.crossing_point(cells, t)
        decreasing = self.f1[cells] < self.f0[cells]
        a = np.where(decreasing, self.left_r[cells], r)
        b = np.where(decreasing, r, self.right_r[cells])
        return cell_simpson(self.metric.density, a, b)

    @cached_property
    def runs(self):
        """Monotone runs as ``(first_cell, values)`` with values nondecreasing.

        Decreasing runs are stored reversed with negated cell offsets.
        """
        v = self.f0.tolist() + [self.f1[-1]]
        sign = np.sign(np.diff(v))
        # flat cells join the preceding run
        for i in range(1, len(sign)):
            if sign[i] == 0:
                sign[i] = sign[i - 1]
        cuts = np.nonzero(np.diff(sign) != 0)[0] + 1
        bounds = np.concatenate([[0], cuts, [len(sign)]])
        vals = np.asarray(v)
        out = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            seg = vals[a:b + 1]
            out.append((a, sign[a] >= 0, seg if sign[a] >= 0 else seg[::-1]))
        return out

    def pairs(self, lower, upper, strict_lower=False):
        """Index pairs (row, cell) with ``lo <= lower[row]`` and ``hi > upper[row]``.

        With ``strict_lower`` the first condition is ``lo < lower``. Each
        monotone run contributes at most one cell per row, found by bisection.
        """
        side = "left" if strict_lower else "right"
        rows, cells = [], []
        for first, increasing, seg in self.runs:
            j = np.searchsorted(seg, lower, side=side) - 1
            ok = (j >= 0) & (j < len(seg) - 1)
            jj = np.where(ok, j, 0)
            ok &= seg[jj + 1] > upper
            r = np.nonzero(ok)[0]
            c = first + jj[r] if increasing else first + len(seg) - 2 - jj[r]
            rows.append(r)
            cells.append(c)
        return np.concatenate(rows), np.concatenate(cells)

    def superlevel(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = self.full_above(t).astype(float)
        rows, cells = self.pairs(t, t)
        if len(rows):
            out += np.bincount(rows, self.partial(cells, t[rows]), minlength=len(t))
        return out


def superlevel_volume(metric, f, t):
    """``mu{f > t}`` for scalar or array ``t``."""
    out = _Cells(metric, f).superlevel(t)
    return float(out[0]) if np.ndim(t) == 0 else out


def distribution_profile(metric, f, levels=64):
    """Distribution function of ``f`` at quantile levels and their midpoints."""
    if levels < MIN_LEVELS:
        raise ValueError(f"levels must be >= {MIN_LEVELS}")
    q = np.unique(np.quantile(f.values, np.linspace(0.0, 1.0, levels)))
    t = np.sort(np.concatenate([q, 0.5 * (q[:-1] + q[1:])]))
    masses = _Cells(metric, f).superlevel(t)
    return DistributionProfile(t, np.minimum.accumulate(masses), metric.volume)


# --------------------------------------------------------------------------
# level-set quantities
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelSetData:
    """Integrals over ``f^{-1}(t)``, a union of coordinate spheres."""

    t: float
    area: float
    flux: float
    inverse_flux: float

    @property
    def holder_lower(self):
        """``area^2 / inverse_flux``, which never exceeds ``flux``."""
        return self.area**2 / self.inverse_flux if self.inverse_flux > 0 else 0.0


def recovered_derivative(metric, f):
    """Nodal ``df/dr``: centered differences inside, one-sided at the poles."""
    return np.gradient(f.values, metric.h, edge_order=2)


def level_set_data(metric, f, t):
    """Area, ``int |grad f|`` and ``int |grad f|^{-1}`` over the level set ``f = t``.

    ``t`` should be a regular value: no sample equals it. The gradient at a
    crossing is the recovered nodal derivative interpolated there; the cell
    slope of the interpolant is only first-order accurate at a point.
    """
    cells = _Cells(metric, f)
    idx = np.nonzero((cells.lo < t) & (cells.hi > t))[0]
    r = cells.crossing_point(idx, t)
    sigma = metric.sphere_area(r)
    grad = np.abs(np.interp(r, metric.nodes, recovered_derivative(metric, f))) / metric.stretch
    return LevelSetData(
        float(t),
        float(sigma.sum()),
        float((sigma * grad).sum()),
        float((sigma / grad).sum()),
    )


def level_crossing_integral(metric, f, t):
    """``int_{f = t} |grad f|^{-1} d sigma`` from the level-crossing points."""
    return level_set_data(metric, f, t).inverse_flux


@dataclass(frozen=True)
class CoareaCheck:
    levels: np.ndarray
    fd_slope: np.ndarray
    crossing: np.ndarray

    @property
    def rel_err(self):
        return np.abs(self.fd_slope - self.crossing) / np.abs(self.crossing)


def coarea_derivative_check(metric, f, levels=256):
    """Compare ``-d mu{f>t}/dt`` with the level-crossing integral.

    The slope is a centered difference across each pair of neighbouring
    quantile levels of :func:`distribution_profile`, evaluated at their
    midpoint. Brackets within one cell's variation of a local extremum value
    of ``f`` are skipped.
    """
    prof = distribution_profile(metric, f, levels)
    t, m = prof.levels, prof.masses
    centers = t[1:-1:2]
    slope = -(m[2::2] - m[:-2:2]) / (t[2::2] - t[:-2:2])

    v = f.values
    interior = (np.diff(np.sign(np.diff(v))) != 0).nonzero()[0] + 1
    critical = np.concatenate([v[[0, -1]], v[interior]])
    cell_var = np.max(np.abs(np.diff(v)))
    lower, upper = t[:-2:2], t[2::2]
    regular = np.ones(len(centers), dtype=bool)
    for c in critical:
        regular &= ~((lower - cell_var <= c) & (c <= upper + cell_var))
    regular &= ~np.isin(centers, v)
    centers, slope = centers[regular], slope[regular]
    crossing = np.array([level_crossing_integral(metric, f, c) for c in centers])
    return CoareaCheck(centers, slope, crossing)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)


def coarea_energy(metric, f):
    """``int_t int_{f = t} |grad f| d sigma dt``, integrated over levels.

    Gauss-Legendre in ``t`` between consecutive sample values, where the
    level-set data is smooth. Equals the Dirichlet energy by the coarea formula.
    """
    cells = _Cells(metric, f)
    s = np.unique(f.values)
    if len(s) < 2:
        return 0.0
    a, b = s[:-1], s[1:]
    total = 0.0
    for x, w in zip(_GL_NODES, _GL_WEIGHTS):
        t = 0.5 * (a + b) + 0.5 * (b - a) * x
        rows, idx = cells.pairs(t, t, strict_lower=True)
        r = cells.crossing_point(idx, t[rows])
        flux = metric.sphere_area(r) * np.abs(cells.slope[idx]) / metric.stretch
        per_level = np.bincount(rows, flux, minlength=len(t))
        total += float(np.sum(0.5 * (b - a) * w * per_level))
    return total


# --------------------------------------------------------------------------
# rearrangement
# --------------------------------------------------------------------------


def dirichlet_energy(metric, f):
    """``int |grad f|^2 dvol`` for a radial function."""
    check_on_grid(metric, f)
    return p1_dirichlet_energy(metric, f.values)


def rearrangement_target(metric, refine=TARGET_REFINE):
    """The round sphere rescaled to the metric's volume.

    Its grid has ``refine`` cells per cell of ``metric``.
    """
    n = metric.n
    c = (metric.volume / round_sphere_volume(n)) ** (2.0 / n)
    return round_metric(n, (metric.grid_size - 1) * refine + 1, c)


def _solve_levels(metric, cells, full, rows, idx, m, t, t_lo, t_hi):
    """Solve ``mu{f > t} = m`` per row inside ``[t_lo, t_hi]``.

    Safeguarded Newton with ``d mu/dt = -sum density(r*) / |slope|`` over
    the row's crossing cells; rows stop once the residual is below
    ``ROOT_TOL * V0`` or the bracket has collapsed.
    """
    tol = ROOT_TOL * metric.volume
    active = np.bincount(rows, minlength=len(m)) > 0
    for _ in range(MAX_ROOT_ITERS):
        sel = active[rows]
        rr, ii = rows[sel], idx[sel]
        tr = t[rr]
        vol = full + np.bincount(rr, cells.partial(ii, tr), minlength=len(m))
        dvol = np.bincount(
            rr, metric.density(cells.crossing_point(ii, tr)) / np.abs(cells.slope[ii]),
            minlength=len(m),
        )
        small = vol <= m
        t_hi = np.where(active & small, t, t_hi)
        t_lo = np.where(active & ~small, t, t_lo)
        active &= ~(np.abs(vol - m) <= tol) & (t_hi - t_lo > 4 * np.spacing(t_hi))
        if not active.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = t + (vol - m) / dvol
        inside = np.isfinite(step) & (step > t_lo) & (step < t_hi)
        t = np.where(active, np.where(inside, step, 0.5 * (t_lo + t_hi)), t)
    return t


def spherical_rearrangement(metric, f, refine=TARGET_REFINE):
    """Radially decreasing rearrangement of ``f`` on the volume-matched round sphere.

    Returns ``(target, f_star)``. The maximum of ``f_star`` sits at ``r = 0``
    and ``f_star(r) = inf{t : mu{f > t} <= vol(B_r)}``, so coordinate balls of
    the target have the same volumes as the superlevel sets of ``f``.
    """
    target = rearrangement_target(metric, refine)
    cells = _Cells(metric, f)
    ball = target.cumulative_volume * (metric.volume / target.volume)

    s = np.unique(f.values)
    fs = cells.superlevel(s)
    # number of sample values whose superlevel set is larger than the ball
    k = np.searchsorted(-fs, -ball, side="left")
    out = np.full(len(ball), s[0])
    todo = np.nonzero(k > 0)[0]
    if len(todo):
        kk = k[todo]
        t_lo = s[kk - 1].copy()
        t_hi = s[kk].copy()
        full = cells.full_above(t_hi, strict=False)
        # cells with lo <= t_lo and hi >= t_hi cross every t in the bracket
        rows, idx = cells.pairs(t_lo, np.nextafter(t_hi, -np.inf))
        m = ball[todo]
        f_lo, f_hi = fs[kk - 1], fs[kk]
        t = t_lo + (t_hi - t_lo) * np.clip((f_lo - m) / (f_lo - f_hi), 0.0, 1.0)
        # no crossing cell: mu{f > t} is constant on the bracket and jumps at t_hi
        t = np.where(np.bincount(rows, minlength=len(todo)) == 0, t_hi, t)
        out[todo] = _solve_levels(metric, cells, full, rows, idx, m, t, t_lo, t_hi)
    out = np.minimum.accumulate(out)
    return target, RadialFunction(target.nodes, out)


# --------------------------------------------------------------------------
# gradient comparison
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GradientComparison:
    lhs: float
    rhs: float
    ratio: float
    ok: bool
    scale: float
    d: float
    A: float


def gradient_comparison(metric, f, d_choice="myers", rel_tol=1e-6):
    """Evaluate ``int|grad f|^2 >= (V0/V_n)^(2/n) A(d)^2 int|grad f_*|^2`` end to end.

    The metric is first rescaled by ``scale`` so its Ricci lower bound is
    ``n - 1``; both sides refer to the rescaled metric. Raises
    :class:`NotApplicable` if the Ricci lower bound is not positive.
    """
    norm, c = normalized(metric)
    d = resolve_diameter(norm, d_choice)
    a = diameter_factor_A(metric.n, d)
    f_norm = RadialFunction(norm.nodes, f.values)
    lhs = dirichlet_energy(norm, f_norm)
    target, f_star = spherical_rearrangement(norm, f_norm)
    factor = (norm.volume / round_sphere_volume(metric.n)) ** (2.0 / metric.n)
    rhs = factor * a**2 * dirichlet_energy(target, f_star)
    if rhs == 0.0:
        ratio = 1.0 if lhs == 0.0 else math.inf
    else:
        ratio = lhs / rhs
    return GradientComparison(lhs, rhs, ratio, lhs >= rhs * (1 - rel_tol), c, d, a)
