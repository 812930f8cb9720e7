"""Acceptance criteria 1-9.

Run ``pytest tests/test_acceptance.py -s`` to see the per-check detail; the
PASS/FAIL summary per criterion is printed at the end of every pytest run.
"""

import math

import numpy as np
import pytest

from yamabe_ricci.battery import battery_function, load_battery, random_radial_function
from yamabe_ricci.functions import RadialFunction, integral_power
from yamabe_ricci.geom_models import (
    ProductSphereMetric,
    normalized,
    round_metric,
    sin_eps_metric,
)
from yamabe_ricci.isoperimetry import (
    bbg_lower_profile,
    coordinate_ball_profile,
    diameter_factor_A,
    sphere_profile_h0,
)
from yamabe_ricci.rearrange import (
    coarea_derivative_check,
    gradient_comparison,
    spherical_rearrangement,
)
from yamabe_ricci.yamabe_core import (
    YamabeOptions,
    constant_function_value,
    minimize_yamabe_radial,
    ricci_yamabe_lower_bound,
    theorem_a_report,
    yamabe_constants,
)

SEED = 20061
N_RANDOM = 20
REARRANGE_GRID = 2048


def product(delta, grid_size=1024):
    return ProductSphereMetric(2, 2, math.sqrt(delta), 1.0, grid_size=grid_size)


def rearrangement_metrics():
    return {
        "round n=3": round_metric(3, REARRANGE_GRID),
        "eps=0.1 n=4": sin_eps_metric(4, 0.1, REARRANGE_GRID),
        "product delta=2": product(2.0, REARRANGE_GRID),
    }


def random_functions(metric):
    rng = np.random.default_rng(SEED)
    return [random_radial_function(metric, rng) for _ in range(N_RANDOM)]


def show(label, value, limit):
    print(f"    {label}: {value:.3e} (limit {limit:g})")


@pytest.mark.criterion(1, "Einstein equality on round S^3, S^4, S^5")
@pytest.mark.parametrize("n", [3, 4, 5])
def test_einstein_equality(n):
    metric = round_metric(n)
    y_n = yamabe_constants(n).Y_n
    lb_err = abs(ricci_yamabe_lower_bound(metric) / y_n - 1)
    ub_err = abs(minimize_yamabe_radial(metric).value / y_n - 1)
    show(f"n={n} |lb_ricci/Y_n - 1|", lb_err, 1e-6)
    show(f"n={n} |ub/Y_n - 1|", ub_err, 1e-2)
    assert lb_err <= 1e-6
    assert ub_err <= 1e-2


@pytest.mark.criterion(2, "Ricci bound margin on the eps-warp family, n=4")
@pytest.mark.parametrize("eps", [0.0, 0.05, 0.1])
def test_margin_eps_family(eps):
    rep = theorem_a_report(sin_eps_metric(4, eps), YamabeOptions())
    print(f"    eps={eps}: rho={rep.rho:.6f} lb={rep.lb_ricci:.6f} ub={rep.ub_numeric:.6f}")
    assert rep.rho > 0
    assert rep.applicable
    assert rep.margin >= -1e-6 * rep.Y_n


@pytest.mark.criterion(3, "Product equality at delta=1 and strict gap at delta=2")
def test_product_equality_and_gap():
    m1 = product(1.0)
    lb1, c1 = ricci_yamabe_lower_bound(m1), constant_function_value(m1)
    show("delta=1 |lb - 16 pi|", abs(lb1 - 16 * math.pi), 1e-9)
    show("delta=1 |const - 16 pi|", abs(c1 - 16 * math.pi), 1e-9)
    assert lb1 == pytest.approx(16 * math.pi, abs=1e-9)
    assert c1 == pytest.approx(16 * math.pi, abs=1e-9)

    m2 = product(2.0)
    lb2, c2 = ricci_yamabe_lower_bound(m2), constant_function_value(m2)
    show("delta=2 |lb - 8 pi sqrt2|", abs(lb2 - 8 * math.pi * math.sqrt(2)), 1e-9)
    show("delta=2 |const - 12 pi sqrt2|", abs(c2 - 12 * math.pi * math.sqrt(2)), 1e-9)
    assert lb2 == pytest.approx(8 * math.pi * math.sqrt(2), abs=1e-9)
    assert c2 == pytest.approx(12 * math.pi * math.sqrt(2), abs=1e-9)
    assert c2 - lb2 == pytest.approx(4 * math.pi * math.sqrt(2), abs=1e-9)


@pytest.mark.criterion(4, "Rearrangement preserves L^2 and L^p norms")
@pytest.mark.parametrize("name", ["round n=3", "eps=0.1 n=4", "product delta=2"])
def test_rearrangement_norms(name):
    metric = rearrangement_metrics()[name]
    p = float(yamabe_constants(metric.n).p_n)
    worst = 0.0
    for f in random_functions(metric):
        target, f_star = spherical_rearrangement(metric, f)
        for q in (2.0, p):
            a = integral_power(metric, f, q)
            b = integral_power(target, f_star, q)
            worst = max(worst, abs(b / a - 1))
    show(f"{name} worst relative norm error", worst, 1e-6)
    assert worst <= 1e-6


@pytest.mark.criterion(5, "Gradient comparison holds on the battery; ratio 1 for monotone f")
@pytest.mark.parametrize("name", ["round n=3", "eps=0.1 n=4", "product delta=2"])
def test_gradient_comparison_battery(name):
    metric = rearrangement_metrics()[name]
    funcs = random_functions(metric) + [battery_function(e, metric) for e in load_battery()]
    ratios = []
    for f in funcs:
        g = gradient_comparison(metric, f, "myers")
        assert g.ok, (name, g)
        ratios.append(g.ratio)
    print(f"    {name}: {len(funcs)} functions, min ratio {min(ratios):.6f}")


@pytest.mark.criterion(5, "Gradient comparison holds on the battery; ratio 1 for monotone f")
@pytest.mark.parametrize("n", [3, 4])
def test_gradient_comparison_monotone_round(n):
    metric = round_metric(n)
    for f in (RadialFunction.sample(metric, lambda r: 2 + np.cos(r)),
              RadialFunction.sample(metric, lambda r: np.exp(-r))):
        g = gradient_comparison(metric, f, "myers")
        show(f"n={n} |ratio - 1|", abs(g.ratio - 1), 1e-6)
        assert abs(g.ratio - 1) <= 1e-6


@pytest.mark.criterion(6, "A(d): A(pi)=1, monotone and >= 1, A(pi/2)=2^(1/4) at n=2")
def test_diameter_factor():
    for n in range(2, 9):
        assert abs(diameter_factor_A(n, math.pi) - 1) <= 1e-12
    ds = np.linspace(0.1, math.pi, 100)
    for n in range(2, 9):
        a = np.array([diameter_factor_A(n, d) for d in ds])
        assert np.all(np.diff(a) <= 0)
        assert np.all(a >= 1)
    err = abs(diameter_factor_A(2, math.pi / 2) - 2 ** 0.25)
    show("|A(pi/2) - 2^(1/4)|", err, 1e-9)
    assert err <= 1e-9


BETAS = np.linspace(0.02, 0.98, 50)


@pytest.mark.criterion(7, "Isoperimetric squeeze, round-sphere match, scaling law")
@pytest.mark.parametrize("eps", [0.0, 0.05, 0.1])
def test_isoperimetric_squeeze(eps):
    metric, _ = normalized(sin_eps_metric(4, eps))
    assert metric.ricci_lower_bound >= 3 * (1 - 1e-12)
    slack = coordinate_ball_profile(metric, BETAS) - bbg_lower_profile(metric, BETAS)
    show(f"eps={eps} min slack", slack.min(), -1e-6)
    assert slack.min() >= -1e-6


@pytest.mark.criterion(7, "Isoperimetric squeeze, round-sphere match, scaling law")
@pytest.mark.parametrize("n", [2, 3, 4])
def test_round_candidate_matches_h0(n):
    err = np.max(np.abs(coordinate_ball_profile(round_metric(n), BETAS) - sphere_profile_h0(n, BETAS)))
    show(f"n={n} max |candidate - h0|", err, 1e-8)
    assert err <= 1e-8


@pytest.mark.criterion(7, "Isoperimetric squeeze, round-sphere match, scaling law")
@pytest.mark.parametrize("lam", [0.25, 4.0])
def test_profile_scaling_law(lam):
    metric = sin_eps_metric(4, 0.05)
    base_low = bbg_lower_profile(metric, BETAS)
    base_cand = coordinate_ball_profile(metric, BETAS)
    scaled = metric.scaled(lam)
    low = bbg_lower_profile(scaled, BETAS)
    cand = coordinate_ball_profile(scaled, BETAS)
    err = max(np.max(np.abs(low * math.sqrt(lam) / base_low - 1)),
              np.max(np.abs(cand * math.sqrt(lam) / base_cand - 1)))
    show(f"lambda={lam} relative scaling error", err, 1e-9)
    assert err <= 1e-9


def scale_test_metrics():
    return [round_metric(n) for n in (3, 4, 5)] + [
        sin_eps_metric(4, 0.05),
        sin_eps_metric(4, 0.1),
        sin_eps_metric(3, 0.1),
        product(1.0),
        product(2.0),
        product(4.0),
        ProductSphereMetric(2, 3, 1.3, 0.7),
    ]


@pytest.mark.criterion(8, "lb_ricci invariant under metric scaling")
@pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
def test_scale_invariance(c):
    worst = 0.0
    for metric in scale_test_metrics():
        base = ricci_yamabe_lower_bound(metric)
        worst = max(worst, abs(ricci_yamabe_lower_bound(metric.scaled(c)) / base - 1))
    show(f"c={c} worst relative change", worst, 1e-9)
    assert worst <= 1e-9


@pytest.mark.criterion(9, "Coarea: -d mu/dt matches the level-crossing integral")
@pytest.mark.parametrize("n", [2, 3])
def test_coarea_consistency(n):
    metric = round_metric(n)
    f = RadialFunction.sample(metric, lambda r: 2 + np.cos(r))
    check = coarea_derivative_check(metric, f)
    assert len(check.levels) > 100
    show(f"S^{n} max relative error over {len(check.levels)} levels", check.rel_err.max(), 1e-3)
    assert check.rel_err.max() <= 1e-3
