import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import beta

from hardy_lab.errors import DomainError, ParameterError
from hardy_lab.plaplace import (binomial_tail, p_boundary_quotients, p_boundary_sweep, p_boundary_weight, p_quotient,
                                p_sweep, p_weight, verify_p_moment, young_constants)
from hardy_lab.rayleigh import TestFamily, quotient_base, verify_moment_identity
from hardy_lab.weights import catalog


def q_closed(p, t):
    """Q_t for u = E^t - gamma^t on the p-fundamental weight: y B(y, p+1) / t^p, y = (p-1-tp)/t."""
    y = (p - 1 - t * p) / t
    return y * beta(y, p + 1) / t ** p


# -- weights ------------------------------------------------------------------

def test_p_weight_reduces_to_newton():
    w, nw = p_weight(3, 2.0), catalog("newton")
    r = np.linspace(0.05, 1, 9)
    assert np.allclose(w.E(r), nw.E(r)) and np.allclose(w.gradE(r), nw.gradE(r))
    assert w.measure.mass == pytest.approx(nw.measure.mass)


def test_p_weight_exponent_and_density():
    w = p_weight(3, 1.5)
    assert w.E(np.array([2.0]))[0] == pytest.approx(2.0 ** -3)
    assert w.hardy_density(np.array([1.0]))[0] == pytest.approx(1.0)


@pytest.mark.parametrize("n,p", [(3, 3.0), (3, 1.0), (3, 4.0), (2.5, 1.5)])
def test_p_weight_range(n, p):
    with pytest.raises(ParameterError):
        p_weight(n, p)


def test_boundary_profile_solves_torsion():
    for p in (1.5, 2.0, 3.0):
        w = p_boundary_weight(p)
        x = np.linspace(0.01, 0.99, 99)
        h = 1e-5
        flux = lambda y: np.abs(w.dE(y)) ** (p - 2) * w.dE(y)
        lap = -(flux(x + h) - flux(x - h)) / (2 * h)
        assert np.allclose(lap, 1.0, atol=1e-6)
        dnum = (w.E(x + h) - w.E(x - h)) / (2 * h)
        assert np.allclose(dnum, w.dE(x), atol=1e-7)
        assert w.E(np.array([0.0, 1.0])) == pytest.approx([0.0, 0.0], abs=1e-300)


# -- quotients against the Beta closed form -----------------------------------

@pytest.mark.parametrize("p,n", [(2.0, 3), (1.5, 3), (3.0, 5), (2.0, 5)])
def test_p_quotient_closed_form(p, n):
    w = p_weight(n, p)
    crit = (p - 1) / p
    for t in (0.3 * crit, 0.9 * crit, 0.999 * crit):
        assert p_quotient(w, p, t).Q_t == pytest.approx(q_closed(p, t), rel=1e-7)


def test_quadratic_case_matches_rayleigh():
    w, nw = p_weight(3, 2.0), catalog("newton")
    for t in (0.2, 0.35, 0.49):
        mem = TestFamily("power_minus_gamma", t=t).member(nw)
        assert p_quotient(w, 2.0, t).Q_t == pytest.approx(1.0 / quotient_base(nw, mem), rel=1e-6)


def test_quadratic_case_near_critical():
    # 1/t^2 = 4.16 at t = 0.49 while the quotient itself is 3.92, about 5.8% below
    r = p_quotient(p_weight(3, 2.0), 2.0, 0.49)
    assert r.Q_t == pytest.approx(q_closed(2.0, 0.49), rel=1e-7)
    assert r.Q_t == pytest.approx(2.0 / (1.0408163265306123 * 2.0408163265306123) / 0.49 ** 2, rel=1e-7)


@pytest.mark.parametrize("p,n", [(1.5, 3), (3.0, 5)])
def test_p_sweep_limit(p, n):
    crit = (p - 1) / p
    ts = [crit - d for d in (0.02, 0.01, 0.005, 0.0025)]
    s = p_sweep(p_weight(n, p), p, ts)
    assert s["limit"] == pytest.approx((p / (p - 1)) ** p, rel=0.02)
    assert s["bound_holds_all"] and s["monotone"]


@pytest.mark.parametrize("p,n", [(1.5, 3), (2.0, 3), (1.5, 5), (2.0, 5), (3.0, 5)])
def test_bound_invariant_every_sweep(p, n):
    crit = (p - 1) / p
    for t in np.linspace(0.05, 0.99, 12) * crit:
        assert p_quotient(p_weight(n, p), p, t).bound_holds


def test_bound_example():
    r = p_quotient(p_weight(5, 3.0), 3.0, 0.5)
    assert abs(r.Q_t - 1 / 0.5 ** 3) <= r.bound_rhs
    assert r.limit_target == pytest.approx(1.5 ** 3)


def test_p_quotient_range():
    with pytest.raises(ParameterError):
        p_quotient(p_weight(3, 1.5), 1.5, 0.34)
    with pytest.raises(DomainError):
        p_quotient(p_boundary_weight(2.0), 2.0, 0.3)


# -- boundary case ------------------------------------------------------------

def test_boundary_quadratic_reduces():
    r = p_boundary_quotients(2.0, 0.75)
    assert r["improvement"] == pytest.approx(0.625, rel=1e-8)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_boundary_quotients_closed_form(p):
    crit = (p - 1) / p
    for t in (crit + 0.1, crit + 0.01, 0.9):
        r = p_boundary_quotients(p, t)
        assert r["plain"] == pytest.approx(t ** -p, rel=1e-8)
        assert r["improvement"] == pytest.approx((t ** p - crit ** p) / (t * p - p + 1), rel=1e-6)


def test_boundary_improvement_limit_p3():
    s = p_boundary_sweep(3.0, [2 / 3 + d for d in (0.02, 0.01, 0.005, 0.0025)])
    assert s["improvement_limit"] == pytest.approx(4 / 9, rel=0.02)
    assert s["plain_limit"] == pytest.approx(1.5 ** 3, rel=0.02)


def test_p_moment_identity():
    w = p_boundary_weight(3.0)
    chk = verify_moment_identity(w, 0.8, "p-case", p=3.0)
    assert chk.relative_residual <= 1e-3
    assert verify_p_moment(w, 0.8, 3.0).relative_residual <= 1e-8
    with pytest.raises(ParameterError):
        verify_p_moment(w, 0.6, 3.0)
    with pytest.raises(DomainError):
        verify_p_moment(p_weight(3, 1.5), 0.5, 1.5)
    # only the p-torsion profile carries the p-identity; p = 2 reduces to the quadratic one
    with pytest.raises(DomainError):
        verify_p_moment(catalog("interval_boundary"), 0.8, 3.0)
    assert verify_p_moment(catalog("interval_boundary"), 0.8, 2.0).relative_residual <= 1e-8


# -- binomial tail and Young split --------------------------------------------

def test_binomial_tail_finite_cases():
    assert binomial_tail(2.0) == pytest.approx(2.5, abs=1e-15)
    assert binomial_tail(3.0) == pytest.approx(29 / 6, abs=1e-15)


def test_binomial_tail_long_sum_oracle():
    with mpmath.workdps(30):
        oracle = mpmath.nsum(lambda m: abs(mpmath.binomial(1.5, m)) / m, [1, mpmath.inf])
    assert binomial_tail(1.5) == pytest.approx(float(oracle), abs=1e-10)
    # plain million-term partial sum agrees too
    m = np.arange(1, 1_000_001, dtype=float)
    logc = np.cumsum(np.log(np.abs((1.5 - (m - 1)) / m)))
    partial = math.fsum(np.exp(logc) / m)
    assert binomial_tail(1.5) == pytest.approx(partial, abs=1e-10)


def test_young_split_optimum():
    for p in (1.5, 2.0, 3.0):
        c = young_constants(p)
        crit = (p - 1) / p
        assert c["hardy_coefficient"] == pytest.approx(crit ** p, rel=1e-12)
        assert c["measure_coefficient"] == pytest.approx(crit ** (p - 1), rel=1e-12)
        s = np.linspace(0.05, 0.95, 181) * crit
        vals = [young_constants(p, x)["hardy_coefficient"] for x in s]
        assert max(vals) <= c["hardy_coefficient"] + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=1.05, max_value=4.0), st.floats(min_value=0.05, max_value=0.98))
def test_bound_invariant_property(p, frac):
    n = 5
    t = frac * (p - 1) / p
    r = p_quotient(p_weight(n, p), p, t)
    assert r.bound_holds
    assert r.Q_t == pytest.approx(q_closed(p, t), rel=1e-6)
