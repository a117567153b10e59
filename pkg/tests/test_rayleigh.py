import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardy_lab.errors import AdmissibilityError, DegenerateInputError, DomainError, ParameterError
from hardy_lab.rayleigh import (TestFamily, blowup_diagnostic, custom_member, fit_limit, log_quotient_closed_form,
                                quotient_base, quotient_improvement, quotient_log_improvement, quotient_neumann,
                                quotient_region, quotient_weighted, region_frontier, sweep_family,
                                verify_moment_identity, weighted_identity)
from hardy_lab.weights import catalog, default_grid

IV = catalog("interval_boundary")
NEWTON = catalog("newton", n=3)
NEUMANN = catalog("neumann_ball3")
EXTERIOR = catalog("exterior_newton", n=3)


def power(t):
    return TestFamily("power", t=t)


def as_custom(w, fam):
    m = fam.member(w)
    return custom_member(w, m.u, m.du)


# closed forms on E^t

def test_base_interval_power():
    assert abs(quotient_base(IV, power(0.75)) - 0.5625) <= 1e-6


def test_improvement_interval_power():
    assert abs(quotient_improvement(IV, power(0.75)) - 0.625) <= 1e-6


def test_improvement_exterior_boundary_term():
    for t in (0.6, 0.75, 0.9):
        assert abs(quotient_improvement(EXTERIOR, power(t)) - (t / 2 + 0.25)) <= 1e-4


def test_newton_shifted_power_near_critical():
    q = quotient_base(NEWTON, TestFamily("power_minus_gamma", t=0.49))
    assert abs(q - 0.25) <= 0.05 * 0.25


def test_slab_first_mode():
    q = quotient_base(catalog("slab_sine"), (np.sin, np.cos))
    assert math.isfinite(q) and q >= 0.25
    assert abs(q - 1.0) <= 1e-8  # cos^2 over cos^2


@pytest.mark.parametrize("t, want, tol", [(0.3, 0.29, 1e-4), (0.49, 0.2501, 1e-3)])
def test_neumann_quotient(t, want, tol):
    assert abs(quotient_neumann(NEUMANN, power(t)) - want) <= tol


def test_neumann_constant_function():
    one = (lambda r: np.ones_like(np.asarray(r, dtype=float)), lambda r: np.zeros_like(np.asarray(r, dtype=float)))
    q = quotient_neumann(NEUMANN, one)
    assert math.isfinite(q) and q > 0


def test_neumann_needs_neumann_weight():
    with pytest.raises(ParameterError):
        quotient_neumann(IV, power(0.75))


def test_weighted_t_zero_is_base():
    for s in (0.6, 0.75, 1.3):
        assert quotient_weighted(IV, 0.0, power(s)) == pytest.approx(quotient_base(IV, power(s)), rel=1e-14)


def test_weighted_rejects_half():
    with pytest.raises(ParameterError):
        quotient_weighted(IV, 0.5, power(0.75))


def test_weighted_power_closed_form():
    # u = E^{s-t}: quotient (s - t)^2 >= (t - 1/2)^2
    for t, s in ((0.25, 0.6), (0.25, 0.9), (-0.3, 0.7)):
        q = quotient_weighted(IV, t, power(s - t), check=False)
        assert abs(q - (s - t) ** 2) <= 1e-6
        assert q >= (t - 0.5) ** 2 - 1e-6


def test_weighted_sweep_limit():
    sw = sweep_family(IV, power(0.6), [0.52, 0.51, 0.505, 0.5025], quotient="weighted", weight_t=0.25)
    assert abs(sw.limit_estimate - 0.0625) <= 1e-3


# E^{-t} v identity

@pytest.mark.parametrize("t, s", [(0.25, 0.75), (0.4, 0.6), (-0.5, 1.2)])
def test_weighted_identity_interval(t, s):
    res = weighted_identity(IV, t, power(s))
    assert abs(res.residual) <= 1e-4
    assert abs(res.pairing_ratio - (2 * s - 1)) <= 1e-6
    assert abs(res.phi - (s - t) ** 2) <= 1e-6


@pytest.mark.parametrize("t", [0.1, 0.25, 0.4])
def test_weighted_identity_interior_has_no_measure_term(t):
    res = weighted_identity(NEWTON, t, TestFamily("power_minus_gamma", t=0.3))
    assert res.pairing_ratio == 0.0
    assert abs(res.phi - (res.D + t * t - t)) <= 1e-8


# second route: plain quadrature on the same functions

@pytest.mark.parametrize("name, params, fam", [
    ("interval_boundary", {}, power(0.8)),
    ("ball_boundary", {"n": 3}, power(1.2)),
    ("exp_phi", {"n": 2, "t": 2.0}, power(0.9)),
    ("annulus_log", {}, power(0.7)),
    ("newton", {"n": 3}, TestFamily("power_minus_gamma", t=0.3)),
    ("distance_power", {"k": 4}, TestFamily("power_minus_gamma", t=0.2)),
    ("interval_boundary", {}, TestFamily("power_cutoff", tau=0.6, eps=1e-3)),
])
def test_closure_matches_plain_quadrature(name, params, fam):
    w = catalog(name, params)
    a = quotient_base(w, fam, default_grid(w))
    b = quotient_base(w, as_custom(w, fam), default_grid(w))
    assert a == pytest.approx(b, rel=2e-5)


def test_improvement_second_route():
    w = catalog("ball_boundary", n=3)
    a = quotient_improvement(w, power(0.9))
    b = quotient_improvement(w, as_custom(w, power(0.9)))
    assert a == pytest.approx(b, rel=1e-5)


def test_log_quotient_three_routes():
    fam = TestFamily("power_log", t=0.25, tau=0.6)
    grid = default_grid(NEWTON, extra_ends="ab")
    a = quotient_log_improvement(NEWTON, fam, grid)
    b = log_quotient_closed_form(NEWTON, 0.25, 0.6, grid)
    c = quotient_log_improvement(NEWTON, as_custom(NEWTON, fam), default_grid(NEWTON, m=16384, extra_ends="ab"))
    assert a == pytest.approx(b, rel=1e-9)
    assert a == pytest.approx(c, rel=1e-3)


# sweeps

def test_sweep_power_values_and_limit():
    sw = sweep_family(IV, power(0.6), [0.6, 0.7, 0.8])
    assert np.allclose(sw.values, [0.36, 0.49, 0.64], atol=1e-6)
    assert abs(sw.limit_estimate - 0.25) <= 1e-3
    assert sw.fit["rms_residual"] <= 1e-9


def test_sweep_newton_shifted_power():
    sw = sweep_family(NEWTON, TestFamily("power_minus_gamma"), [0.40, 0.45, 0.49])
    assert abs(sw.limit_estimate - 0.25) <= 1e-2


def test_sweep_log_family():
    sw = sweep_family(NEWTON, TestFamily("power_log", t=0.25), [0.6, 0.55, 0.51], quotient="log", param="tau")
    assert abs(sw.limit_estimate - 0.25) <= 2e-2


def test_sweep_improvement_limit():
    sw = sweep_family(IV, power(0.6), [0.52, 0.51, 0.505, 0.5025], quotient="improvement")
    assert abs(sw.limit_estimate - 0.5) <= 1e-3


def test_sweep_needs_three_points():
    with pytest.raises(ParameterError):
        sweep_family(IV, power(0.6), [0.6, 0.7])


def test_sweep_annotates_failing_parameter():
    with pytest.raises(DegenerateInputError, match=r"\[at t=0\.5\]"):
        sweep_family(IV, power(0.6), [0.6, 0.5, 0.4])


def test_linear_model_option():
    fit = fit_limit([0.6, 0.7, 0.8], [0.36, 0.49, 0.64], degree=1)
    assert fit["degree"] == 1 and abs(fit["C"] - 0.25) > 1e-2  # too crude for t^2


# identities

def test_boundary_moment_identity():
    assert verify_moment_identity(IV, 0.75, "boundary").relative_residual <= 1e-4


def test_neumann_moment_identity():
    assert verify_moment_identity(NEUMANN, 0.3, "neumann").relative_residual <= 1e-3


def test_exterior_moment_identity():
    res = verify_moment_identity(EXTERIOR, 0.75, "exterior")
    assert res.relative_residual <= 1e-3
    assert res.tail_bound <= 1e-4


def test_annular_moment_identity():
    w = catalog("annulus_log")
    res = verify_moment_identity(w, 0.75, "annular")
    assert res.relative_residual <= 1e-6
    assert res.rhs == pytest.approx(2 * math.pi * math.log(2) ** 0.5, rel=1e-12)


def test_annular_refuses_outward_gradient():
    w = catalog("annulus_log")
    bad = replace(w, boundary_flux=replace(w.boundary_flux, normal_derivative=1.0))
    with pytest.raises(DomainError):
        verify_moment_identity(bad, 0.75, "annular")


@pytest.mark.parametrize("w, t, kind", [(IV, 0.5, "boundary"), (NEUMANN, 0.6, "neumann"),
                                        (EXTERIOR, 1.0, "exterior"), (IV, 0.75, "bogus")])
def test_identity_ranges(w, t, kind):
    with pytest.raises(ParameterError):
        verify_moment_identity(w, t, kind)


# blow-up

def test_blowup_newton_mass():
    res = blowup_diagnostic(NEWTON, [0.4, 0.45, 0.49, 0.499])
    assert abs(res.mass_estimate - 4 * math.pi) <= 0.02 * 4 * math.pi
    coarse = blowup_diagnostic(NEWTON, [0.4, 0.45, 0.49, 0.499], default_grid(NEWTON, m=1024))
    assert coarse.mass_estimate == pytest.approx(res.mass_estimate, rel=1e-6)


def test_blowup_log2d_mass():
    res = blowup_diagnostic(catalog("log2d"), [0.4, 0.45, 0.49, 0.499])
    assert res.shift == 1.0
    assert abs(res.mass_estimate - 2 * math.pi) <= 0.02 * 2 * math.pi


def test_blowup_grows_and_converges():
    w = catalog("newton", n=3, R=2.0)
    res = blowup_diagnostic(w, [0.4, 0.45, 0.49, 0.499])
    I = dict(zip(res.t_values, res.I_values))
    S = dict(zip(res.t_values, res.scaled))
    assert I[0.499] > 10 * I[0.4]
    mass = w.measure.total_mass
    assert abs(S[0.499] - mass) <= abs(S[0.49] - mass)
    assert all(np.diff(res.scaled) < 0)


def test_blowup_needs_interior():
    with pytest.raises(ParameterError):
        blowup_diagnostic(IV, [0.4, 0.45, 0.49])


# region

def test_region_frontier_values():
    out = {r["beta"]: r["alpha_max_estimate"] for r in region_frontier(IV, [1.0, 0.75, 0.0])}
    assert abs(out[1.0]) <= 1e-6
    assert abs(out[0.75] - 0.1875) <= 1e-4
    assert abs(out[0.0] - 0.25) <= 1e-3


def test_region_frontier_below_theory():
    for r in region_frontier(IV, [0.6, 0.9, 1.5, 0.5, 0.2, -1.0]):
        assert r["alpha_max_estimate"] <= r["theory"] + 1e-3


def test_region_needs_bounded_weight():
    with pytest.raises(ParameterError):
        region_frontier(replace(IV, sup_E=math.inf), [1.0])


def test_region_quotient_closed_form():
    for beta, s in ((0.3, 0.8), (1.2, 0.9)):
        assert abs(quotient_region(IV, beta, power(s)) - (s * s - beta * (2 * s - 1))) <= 1e-6


# errors and invariances

def test_degenerate_denominator():
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    with pytest.raises(DegenerateInputError):
        quotient_base(IV, (zero, zero))


def test_inadmissible_member():
    with pytest.raises(AdmissibilityError):
        quotient_base(NEWTON, power(0.3))


def test_shift_family_needs_positive_gamma():
    with pytest.raises(DomainError):
        TestFamily("power_minus_gamma", t=0.3).member(catalog("log2d"))


def test_unknown_family():
    with pytest.raises(ParameterError):
        TestFamily("gaussian")


@pytest.mark.parametrize("op", [
    lambda w, u: quotient_base(w, u),
    lambda w, u: quotient_improvement(w, u),
    lambda w, u: quotient_weighted(w, 0.2, u),
    lambda w, u: quotient_region(w, 0.3, u),
])
def test_scale_invariance(op):
    m = power(0.8).member(IV)
    assert op(IV, m.scaled(2.0)) == pytest.approx(op(IV, m), rel=1e-12)
    c = as_custom(IV, power(0.8))
    assert op(IV, c.scaled(2.0)) == pytest.approx(op(IV, c), rel=1e-12)


BOUNDARY_WEIGHTS = [catalog("interval_boundary"), catalog("ball_boundary", n=3), catalog("ball_boundary", n=2),
                    catalog("slab_sine"), catalog("exp_phi", n=3, t=1.0), catalog("annulus_log")]
INTERIOR_WEIGHTS = [catalog("newton", n=3), catalog("newton", n=5, R=2.0), catalog("distance_power", k=3, n=4)]


@settings(max_examples=25, deadline=None)
@given(i=st.integers(0, len(BOUNDARY_WEIGHTS) - 1), t=st.floats(0.52, 2.0))
def test_base_and_improvement_bounds_boundary(i, t):
    w = BOUNDARY_WEIGHTS[i]
    assert quotient_base(w, power(t)) >= 0.25 - 1e-6
    if w.kind == "boundary":
        assert quotient_improvement(w, power(t)) >= 0.5 - 1e-6


@settings(max_examples=25, deadline=None)
@given(i=st.integers(0, len(INTERIOR_WEIGHTS) - 1), t=st.floats(0.02, 0.49))
def test_base_bound_interior(i, t):
    assert quotient_base(INTERIOR_WEIGHTS[i], TestFamily("power_minus_gamma", t=t)) >= 0.25 - 1e-6


@settings(max_examples=20, deadline=None)
@given(t=st.floats(-1.0, 0.45), s=st.floats(0.55, 1.5))
def test_weighted_bound(t, s):
    assert quotient_weighted(IV, t, power(s - t), check=False) >= (t - 0.5) ** 2 - 1e-6
