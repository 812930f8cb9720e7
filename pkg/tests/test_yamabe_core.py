import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yamabe_ricci.errors import DomainError, NotApplicable
from yamabe_ricci.functions import RadialFunction
from yamabe_ricci.geom_models import ProductSphereMetric, round_metric, sin_eps_metric
from yamabe_ricci.yamabe_core import (
    UB_LABEL,
    YamabeOptions,
    _DiscreteFunctional,
    constant_function_value,
    einstein_volume_bound,
    kobayashi_lower_bound,
    minimize_yamabe_radial,
    ricci_yamabe_lower_bound,
    theorem_a_report,
    yamabe_constants,
    yamabe_functional,
)


def delta_product(delta, **kw):
    return ProductSphereMetric(2, 2, math.sqrt(delta), 1.0, **kw)


@pytest.mark.parametrize("n,a,p", [(3, 8, 6), (4, 6, 4), (5, Fraction(16, 3), Fraction(10, 3)), (6, 5, 3)])
def test_constants_exact(n, a, p):
    c = yamabe_constants(n)
    assert c.a_n == a and c.p_n == p


def test_yamabe_sphere_constants():
    assert yamabe_constants(4).Y_n == pytest.approx(12 * math.sqrt(8 * math.pi**2 / 3), rel=1e-12)
    assert yamabe_constants(4).Y_n == pytest.approx(61.562, abs=5e-4)
    assert yamabe_constants(5).Y_n == pytest.approx(20 * math.pi ** 1.2, rel=1e-12)
    assert yamabe_constants(3).Y_n == pytest.approx(6 * (2 * math.pi**2) ** (2 / 3), rel=1e-12)


@pytest.mark.parametrize("n", [2, 1, 3.5])
def test_constants_domain(n):
    with pytest.raises(DomainError):
        yamabe_constants(n)


def test_functional_needs_n_at_least_3():
    m = round_metric(2)
    with pytest.raises(DomainError):
        yamabe_functional(m, RadialFunction.constant(m))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_constant_function_on_round_sphere(n):
    assert constant_function_value(round_metric(n)) == pytest.approx(yamabe_constants(n).Y_n, rel=1e-9)


def test_constant_function_on_product():
    assert constant_function_value(delta_product(2.0)) == pytest.approx(12 * math.pi * math.sqrt(2), rel=1e-12)


def test_kobayashi_examples():
    assert kobayashi_lower_bound(round_metric(3)) == pytest.approx(yamabe_constants(3).Y_n, rel=1e-9)
    assert kobayashi_lower_bound(delta_product(2.0)) == pytest.approx(12 * math.pi * math.sqrt(2), rel=1e-12)
    m = sin_eps_metric(4, 0.1)
    assert kobayashi_lower_bound(m.scaled(7.0)) == pytest.approx(kobayashi_lower_bound(m), rel=1e-9)


def test_ricci_bound_examples():
    assert ricci_yamabe_lower_bound(delta_product(2.0)) == pytest.approx(8 * math.pi * math.sqrt(2), rel=1e-12)
    with pytest.raises(NotApplicable):
        ricci_yamabe_lower_bound(sin_eps_metric(4, 0.3))


def test_ricci_bound_equals_round_value_of_normalized_volume():
    # n rho V^(2/n) = n (n-1) (V of the rho-normalized metric)^(2/n)
    m = sin_eps_metric(4, 0.1)
    c = m.ricci_lower_bound / 3
    v_norm = m.scaled(c).volume
    assert ricci_yamabe_lower_bound(m) == pytest.approx(12 * v_norm**0.5, rel=1e-12)


def test_einstein_volume_bound_examples():
    for n in (3, 4, 5):
        c = yamabe_constants(n)
        assert einstein_volume_bound(c.Y_n, n, n - 1) == pytest.approx(c.V_n, rel=1e-9)
    assert einstein_volume_bound(16 * math.pi, 4, 1) == pytest.approx(16 * math.pi**2, rel=1e-12)
    assert einstein_volume_bound(8 * math.pi, 4, 1) == pytest.approx(16 * math.pi**2 / 4, rel=1e-12)
    with pytest.raises(DomainError):
        einstein_volume_bound(-1.0, 4, 1)
    with pytest.raises(DomainError):
        einstein_volume_bound(1.0, 4, 0)


@settings(max_examples=25, deadline=None)
@given(lam=st.floats(1e-3, 1e3), eps=st.floats(0.0, 0.15), seed=st.integers(0, 2**32 - 1))
def test_functional_homogeneous_of_degree_zero(lam, eps, seed):
    m = sin_eps_metric(4, eps, grid_size=256)
    rng = np.random.default_rng(seed)
    f = RadialFunction(m.nodes, 1 + rng.random(m.grid_size))
    assert yamabe_functional(m, lam * f) == pytest.approx(yamabe_functional(m, f), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(0.05, 50.0), seed=st.integers(0, 2**32 - 1))
def test_functional_scale_invariant(c, seed):
    m = sin_eps_metric(3, 0.1, grid_size=256)
    rng = np.random.default_rng(seed)
    f = RadialFunction(m.nodes, 1 + rng.random(m.grid_size))
    assert yamabe_functional(m.scaled(c), f) == pytest.approx(yamabe_functional(m, f), rel=1e-10)


def test_functional_gradient_matches_finite_differences():
    m = sin_eps_metric(4, 0.1, grid_size=64)
    F = _DiscreteFunctional(m)
    rng = np.random.default_rng(3)
    v = 1 + 0.5 * rng.random(m.grid_size)
    g = F.gradient(v)
    h = 1e-5
    fd = np.array([(F.value(v + h * e) - F.value(v - h * e)) / (2 * h) for e in np.eye(m.grid_size)])
    np.testing.assert_allclose(g, fd, rtol=0, atol=1e-9 * np.abs(g).max())


def test_functional_matches_public_evaluation():
    m = sin_eps_metric(4, 0.05, grid_size=128)
    v = 2 + np.cos(m.nodes)
    assert _DiscreteFunctional(m).value(v) == pytest.approx(yamabe_functional(m, RadialFunction(m.nodes, v)), rel=1e-13)


@pytest.mark.parametrize("n", [3, 4])
def test_minimizer_round_sphere(n):
    res = minimize_yamabe_radial(round_metric(n))
    assert res.converged
    assert res.value == pytest.approx(yamabe_constants(n).Y_n, rel=1e-2)
    # constants are the minimizers: the descent cannot go below Y_n
    assert res.value >= yamabe_constants(n).Y_n * (1 - 1e-9)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.3])
def test_minimizer_reaches_round_value_on_conformally_flat_warps(eps):
    # every warped metric on S^n is conformally round, so Y = Y_n
    m = sin_eps_metric(4, eps)
    res = minimize_yamabe_radial(m)
    y4 = yamabe_constants(4).Y_n
    assert res.value <= constant_function_value(m)
    assert res.value >= y4 * (1 - 1e-6)
    assert res.value == pytest.approx(y4, rel=1e-4)
    assert all(b <= a for a, b in zip(res.history, res.history[1:]))


def test_minimizer_scale_independent():
    m = sin_eps_metric(4, 0.1)
    a = minimize_yamabe_radial(m).value
    b = minimize_yamabe_radial(m.scaled(4.0)).value
    assert a == pytest.approx(b, rel=1e-6)


def test_minimizer_respects_grid_option_and_rejects_products():
    res = minimize_yamabe_radial(round_metric(3), YamabeOptions(grid_size=256))
    assert len(res.f.values) == 256
    with pytest.raises(DomainError):
        minimize_yamabe_radial(delta_product(1.0))


def test_report_round():
    rep = theorem_a_report(round_metric(4))
    assert rep.applicable and rep.consistent and rep.bishop_ok
    assert rep.lb_ricci == pytest.approx(rep.Y_n, rel=1e-6)
    assert rep.ub_numeric == pytest.approx(rep.Y_n, rel=1e-2)
    assert abs(rep.margin) <= 1e-6 * rep.Y_n
    assert rep.ub_label == UB_LABEL
    assert rep.kobayashi_informational


def test_report_perturbed():
    rep = theorem_a_report(sin_eps_metric(4, 0.1))
    assert rep.applicable and rep.margin >= 0 and rep.consistent
    assert rep.lb_ricci < rep.Y_n


def test_report_product_quarter():
    rep = theorem_a_report(delta_product(4.0))
    assert rep.rho == pytest.approx(0.25)
    assert rep.applicable
    assert rep.lb_ricci < rep.lb_kobayashi
    assert rep.lb_ricci < rep.const_fn_value
    assert rep.ub_numeric == rep.const_fn_value


def test_report_not_applicable_still_filled():
    rep = theorem_a_report(sin_eps_metric(4, 0.3), YamabeOptions(with_minimizer=False))
    assert not rep.applicable
    assert rep.lb_ricci is None and rep.margin is None
    assert rep.lb_kobayashi < 0 and not rep.kobayashi_informational
    d = rep.to_dict()
    assert d["d_interval"][1] is None
