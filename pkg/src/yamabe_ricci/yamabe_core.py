"""Yamabe functional, lower bounds, radial upper bounds and the bound report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import solveh_banded

from .errors import DomainError, NotApplicable
from .functions import (
    RadialFunction,
    check_on_grid,
    integral_power,
    midpoints,
    p1_dirichlet_energy,
    p1_scal_term,
    p1_weights,
)
from .geom_models import ProductSphereMetric, round_sphere_volume

UB_LABEL = "restricted upper bound"
# floor for trial functions, relative to their maximum
POSITIVITY_FLOOR = 1e-12


@dataclass(frozen=True)
class YamabeConstants:
    n: int
    a_n: Fraction
    p_n: Fraction
    V_n: float
    Y_n: float


def yamabe_constants(n):
    """``a_n = 4(n-1)/(n-2)``, ``p_n = 2n/(n-2)``, ``V_n`` and ``Y_n``."""
    if int(n) != n or n < 3:
        raise DomainError(f"the Yamabe functional needs an integer n >= 3, got {n!r}")
    n = int(n)
    v = round_sphere_volume(n)
    return YamabeConstants(
        n=n,
        a_n=Fraction(4 * (n - 1), n - 2),
        p_n=Fraction(2 * n, n - 2),
        V_n=v,
        Y_n=n * (n - 1) * v ** (2.0 / n),
    )


def _require_dim(metric):
    if metric.n < 3:
        raise DomainError(f"the Yamabe functional needs n >= 3, got n = {metric.n}")
    return yamabe_constants(metric.n)


def yamabe_functional(metric, f):
    """``(a_n int |grad f|^2 + int Scal f^2) / (int f^p)^(2/p)``.

    ``f`` is a radial function on the metric's grid (for a product metric, a
    function of the first factor's polar angle).
    """
    const = _require_dim(metric)
    check_on_grid(metric, f)
    a, p = float(const.a_n), float(const.p_n)
    num = a * p1_dirichlet_energy(metric, f.values) + p1_scal_term(metric, f.values)
    return num / integral_power(metric, f, p) ** (2.0 / p)


def constant_function_value(metric):
    return yamabe_functional(metric, RadialFunction.constant(metric))


def kobayashi_lower_bound(metric):
    """``inf Scal * V^(2/n)``; a lower bound for Y only when it is <= 0."""
    _require_dim(metric)
    return float(np.min(metric.scal_nodes)) * metric.volume ** (2.0 / metric.n)


def ricci_yamabe_lower_bound(metric):
    """``n * rho * V^(2/n)`` for a metric with Ricci >= rho > 0."""
    _require_dim(metric)
    rho = metric.ricci_lower_bound
    if not rho > 0:
        raise NotApplicable(f"Ricci lower bound {rho:.6g} is not positive")
    return metric.n * rho * metric.volume ** (2.0 / metric.n)


def einstein_volume_bound(Y_value, n, rho):
    """Largest volume allowed by ``Y >= n rho V^(2/n)`` when ``Y(M) <= Y_value``."""
    if not (Y_value > 0 and rho > 0) or n < 3:
        raise DomainError("einstein_volume_bound needs Y_value > 0, rho > 0 and n >= 3")
    return (Y_value / (n * rho)) ** (n / 2.0)


# --------------------------------------------------------------------------
# radial minimization
# --------------------------------------------------------------------------


@dataclass
class YamabeOptions:
    grid_size: int | None = None
    max_iters: int = 10_000
    tol: float = 1e-8
    with_minimizer: bool = True


@dataclass
class MinimizationResult:
    value: float
    f: RadialFunction
    converged: bool
    iterations: int
    history: list = field(repr=False)


class _DiscreteFunctional:
    """The functional restricted to piecewise-linear radial functions, with gradient."""

    def __init__(self, metric):
        const = yamabe_constants(metric.n)
        self.a = float(const.a_n)
        self.p = float(const.p_n)
        w = p1_weights(metric)
        self.w = w
        self.ms_node = w.node * w.scal_node
        self.ms_mid = w.mid * w.scal_mid
        # H^1-type preconditioner a*K + s*M in upper banded storage
        s = max(float(np.mean(np.abs(w.scal_node))), 1e-12)
        diag = s * w.lumped_mass
        diag[:-1] += self.a * w.stiff
        diag[1:] += self.a * w.stiff
        upper = np.concatenate([[0.0], -self.a * w.stiff])
        self.band = np.vstack([upper, diag])

    def value_and_parts(self, v):
        vm = midpoints(v)
        energy = self.w.stiff @ np.diff(v) ** 2
        scal = self.ms_node @ v**2 + self.ms_mid @ vm**2
        mass = self.w.node @ v**self.p + self.w.mid @ vm**self.p
        return (self.a * energy + scal) / mass ** (2.0 / self.p), mass

    def value(self, v):
        return self.value_and_parts(v)[0]

    def gradient(self, v):
        y, mass = self.value_and_parts(v)
        vm = midpoints(v)
        dv = np.diff(v)
        g_energy = np.zeros_like(v)
        flux = 2.0 * self.w.stiff * dv
        g_energy[:-1] -= flux
        g_energy[1:] += flux
        g_scal = 2.0 * self.ms_node * v
        half = self.ms_mid * vm
        g_scal[:-1] += half
        g_scal[1:] += half
        g_mass = self.p * self.w.node * v ** (self.p - 1)
        half = 0.5 * self.p * self.w.mid * vm ** (self.p - 1)
        g_mass[:-1] += half
        g_mass[1:] += half
        return (self.a * g_energy + g_scal) / mass ** (2.0 / self.p) - (2.0 / self.p) * y * g_mass / mass

    def precondition(self, g):
        return solveh_banded(self.band, g)

    def normalize(self, v):
        v = np.maximum(v, POSITIVITY_FLOOR * v.max())
        mass = self.w.node @ v**self.p + self.w.mid @ midpoints(v) ** self.p
        return v / mass ** (1.0 / self.p)


def minimize_yamabe_radial(metric, options=None):
    """Descend the functional over positive radial functions from ``f = 1``.

    Preconditioned gradient steps with backtracking (halving), projection
    onto positive functions and renormalization to unit L^p norm. The result
    is a value of the functional at an actual trial function, hence an upper
    bound for the Yamabe constant.
    """
    options = options or YamabeOptions()
    if isinstance(metric, ProductSphereMetric):
        raise DomainError("radial minimization is only available for warped metrics")
    _require_dim(metric)
    if options.grid_size is not None and options.grid_size != metric.grid_size:
        metric = metric.with_grid(options.grid_size)

    F = _DiscreteFunctional(metric)
    v = F.normalize(np.ones(metric.grid_size))
    y = F.value(v)
    history = [y]
    step = 1.0
    converged = False
    it = 0
    while it < options.max_iters:
        it += 1
        direction = F.precondition(F.gradient(v))
        accepted = False
        while step > 1e-14:
            trial = F.normalize(v - step * direction)
            y_trial = F.value(trial)
            if y_trial < y:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        decrease = (y - y_trial) / abs(y)
        v, y = trial, y_trial
        history.append(y)
        step = min(2.0 * step, 1e3)
        if decrease < options.tol:
            converged = True
            break
    return MinimizationResult(
        value=float(y),
        f=RadialFunction(metric.nodes, v),
        converged=converged,
        iterations=it,
        history=history,
    )


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------


@dataclass
class YamabeReport:
    n: int
    V0: float
    rho: float
    inf_scal: float
    d_interval: tuple
    lb_ricci: float | None
    lb_kobayashi: float
    kobayashi_informational: bool
    const_fn_value: float
    ub_numeric: float
    ub_label: str
    ub_converged: bool
    Y_n: float
    margin: float | None
    consistent: bool | None
    bishop_ok: bool | None
    applicable: bool

    def to_dict(self):
        d = asdict(self)
        lo, hi = self.d_interval
        d["d_interval"] = [lo, hi if math.isfinite(hi) else None]
        return d


def theorem_a_report(metric, options=None):
    """Collect all bounds for one metric.

    ``applicable`` is False when the Ricci lower bound is not positive; the
    remaining fields are still filled in.
    """
    options = options or YamabeOptions()
    if options.grid_size is not None and options.grid_size != metric.grid_size:
        metric = metric.with_grid(options.grid_size)
    const = _require_dim(metric)
    rho = metric.ricci_lower_bound
    const_value = constant_function_value(metric)

    try:
        lb = ricci_yamabe_lower_bound(metric)
        applicable = True
    except NotApplicable:
        lb = None
        applicable = False

    ub, converged = const_value, True
    if options.with_minimizer and not isinstance(metric, ProductSphereMetric):
        result = minimize_yamabe_radial(metric, options)
        ub, converged = min(result.value, const_value), result.converged

    inf_scal = float(np.min(metric.scal_nodes))
    margin = ub - lb if applicable else None
    return YamabeReport(
        n=metric.n,
        V0=metric.volume,
        rho=rho,
        inf_scal=inf_scal,
        d_interval=metric.diameter_bounds,
        lb_ricci=lb,
        lb_kobayashi=kobayashi_lower_bound(metric),
        kobayashi_informational=inf_scal > 0,
        const_fn_value=const_value,
        ub_numeric=ub,
        ub_label=UB_LABEL,
        ub_converged=converged,
        Y_n=const.Y_n,
        margin=margin,
        consistent=(margin >= -1e-6 * const.Y_n) if applicable else None,
        bishop_ok=(lb <= const.Y_n * (1 + 1e-9)) if applicable else None,
        applicable=applicable,
    )
