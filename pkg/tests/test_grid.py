import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardy_lab.errors import IntegrationError, ParameterError
from hardy_lab.grid import (geometric, integrate, integrate_radial, make_graded_grid, sphere_area,
                            tensor_integrate_2d)


def test_uniform_nodes():
    g = make_graded_grid(0, 1, 4)
    assert np.allclose(g.nodes, [0, 0.25, 0.5, 0.75, 1], atol=0, rtol=0)
    g = make_graded_grid(1, 2, 3, "uniform")
    assert np.allclose(g.nodes, [1, 4 / 3, 5 / 3, 2], rtol=1e-15)


def test_geometric_doubling_toward_left():
    g = make_graded_grid(0, 1, 20, geometric("a", 0.5))
    h = g.panel_weights
    assert np.argmin(h) == 0
    assert np.allclose(h[1:] / h[:-1], 2.0, rtol=1e-12)


@pytest.mark.parametrize("toward", ["a", "b", "both"])
@pytest.mark.parametrize("m", [2, 3, 17, 200, 4096])
def test_grid_invariants(toward, m):
    g = make_graded_grid(0.0, 3.0, m, geometric(toward, 0.85))
    assert len(g.nodes) == m + 1 and g.nodes[0] == 0.0 and g.nodes[-1] == 3.0
    assert np.all(np.diff(g.nodes) > 0)
    assert abs(g.panel_weights.sum() - 3.0) <= 1e-12 * 3.0
    assert g.panel_weights.min() >= 1e-14 * 3.0 * (1 - 1e-9)


def test_geometric_ratio_away_from_transition():
    g = make_graded_grid(0, 1, 4096, geometric("a", 0.85))
    h = g.panel_weights
    ratios = h[:-1] / h[1:]
    geometric_part = ratios[:100]
    assert np.allclose(geometric_part, 0.85, rtol=1e-12)
    assert h[0] >= 1e-14


def test_bad_parameters():
    with pytest.raises(ParameterError):
        make_graded_grid(0, 1, 1)
    with pytest.raises(ParameterError):
        make_graded_grid(1, 0, 4)
    with pytest.raises(ParameterError):
        make_graded_grid(0, 1, 4, geometric("a", 1.0))
    with pytest.raises(ParameterError):
        make_graded_grid(0, 1, 4, geometric("a", 0.0))


def test_integrate_examples():
    assert abs(integrate(make_graded_grid(0, 1, 100), lambda x: x) - 0.5) <= 1e-12
    g = make_graded_grid(0, 1, 200, geometric("a", 0.8))
    assert abs(integrate(g, lambda r: r ** -0.5) - 2.0) <= 1e-4
    assert abs(integrate(make_graded_grid(0, math.pi, 1000), np.sin) - 2.0) <= 1e-5


def test_midpoint_rule_option():
    g = make_graded_grid(0, math.pi, 1000)
    assert abs(integrate(g, np.sin, rule="midpoint") - 2.0) <= 1e-5
    with pytest.raises(ParameterError):
        integrate(g, np.sin, rule="simpson")


def test_integration_error_carries_abscissa():
    g = make_graded_grid(0, 1, 10)
    with pytest.raises(IntegrationError) as info:
        integrate(g, lambda x: np.where(x > 0.5, np.inf, x))
    assert info.value.abscissa > 0.5


def test_radial_examples():
    g = make_graded_grid(0, 1, 64)
    assert abs(integrate_radial(g, lambda r: np.ones_like(r), 3) - 4 * math.pi / 3) <= 1e-10
    assert abs(integrate_radial(g, lambda r: np.ones_like(r), 2) - math.pi) <= 1e-10
    g = make_graded_grid(0.5, 1, 400)
    assert abs(integrate_radial(g, lambda r: r ** -2.0, 3) - 4 * math.pi * 0.5) <= 1e-8


def test_sphere_area_against_known_values():
    assert sphere_area(1) == pytest.approx(2.0, rel=1e-15)
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)
    # unit ball volume in R^10 is pi^5/120 and equals area/10
    assert sphere_area(10) / 10 == pytest.approx(math.pi ** 5 / 120, rel=1e-14)


def test_radial_is_scaled_integrate():
    g = make_graded_grid(0, 2, 50)
    f = lambda r: np.exp(-r)
    for n in (1, 2, 5, 10):
        lhs = integrate_radial(g, f, n)
        rhs = sphere_area(n) * integrate(g, lambda r: f(r) * r ** (n - 1))
        assert lhs == pytest.approx(rhs, rel=1e-14)


def test_tensor_examples():
    g = make_graded_grid(0, 1, 16)
    assert abs(tensor_integrate_2d(g, g, lambda x, y: np.ones_like(x)) - 1) <= 1e-12
    assert abs(tensor_integrate_2d(g, g, lambda x, y: x * y) - 0.25) <= 1e-12
    g = make_graded_grid(0, 1, 200)
    assert abs(tensor_integrate_2d(g, g, np.minimum) - 1 / 3) <= 1e-6


def test_tensor_min_against_brute_force():
    # fine midpoint sum, computed independently of the Gauss rule
    k = 3000
    s = (np.arange(k) + 0.5) / k
    brute = np.minimum.outer(s, s).mean()
    g = make_graded_grid(0, 1, 200)
    assert abs(tensor_integrate_2d(g, g, np.minimum) - brute) <= 1e-6


def test_tensor_nonfinite_raises():
    g = make_graded_grid(0, 1, 4)
    with pytest.raises(IntegrationError):
        tensor_integrate_2d(g, g, lambda x, y: 1 / (x - y))


def test_second_order_convergence():
    f = lambda x: np.exp(x) * np.cos(3 * x)
    exact = (math.exp(1) * (math.cos(3) + 3 * math.sin(3)) - 1) / 10
    for rule, ms in (("gauss4", (2, 4, 8)), ("gauss2", (16, 32, 64)), ("midpoint", (16, 32, 64))):
        errs = [abs(integrate(make_graded_grid(0, 1, m), f, rule) - exact) for m in ms]
        assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_coarsened_grid():
    g = make_graded_grid(0, 1, 64, geometric("a"))
    c = g.coarsened()
    assert c.m == 32 and np.array_equal(c.nodes, g.nodes[::2])
    assert c.panel_weights.sum() == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ParameterError):
        make_graded_grid(0, 1, 3).coarsened()


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(-10, 10), beta=st.floats(-10, 10), m=st.integers(2, 300))
def test_integrate_is_linear(alpha, beta, m):
    g = make_graded_grid(0, 1, m, geometric("both", 0.9))
    f1 = np.cos
    f2 = lambda x: x ** 3
    lhs = integrate(g, lambda x: alpha * f1(x) + beta * f2(x))
    rhs = alpha * integrate(g, f1) + beta * integrate(g, f2)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(alpha) + abs(beta))


def test_distances_from_right_end_are_exact():
    g = make_graded_grid(0, 1, 512, geometric("b", 0.85))
    assert g.dist_b[-2] == pytest.approx(1e-14, rel=1e-12)
    x, _ = g.abscissae()
    s = g.gauss_dist_b
    assert np.all(s > 0) and np.allclose(x + s, 1.0, rtol=0, atol=1e-15)
    # widths near b agree with the distances
    assert np.allclose(g.panel_weights[-50:], -np.diff(g.dist_b)[-50:], rtol=1e-15)


@pytest.mark.parametrize("rule", ["midpoint", "gauss1", "gauss3", "gauss10"])
def test_rule_options_integrate_constants(rule):
    g = make_graded_grid(-1, 2, 37, geometric("both"))
    assert integrate(g, lambda x: np.ones_like(x), rule) == pytest.approx(3.0, rel=1e-14)
