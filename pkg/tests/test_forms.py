import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardy_lab.errors import AdmissibilityError, AssemblyError, ParameterError
from hardy_lab.forms import (assemble_stiffness, assemble_weighted_mass, form_value, identity_residual,
                             nodal_values)
from hardy_lab.grid import geometric, integrate_radial, make_graded_grid
from hardy_lab.weights import catalog, default_grid

ONE = lambda r: np.ones_like(np.asarray(r, dtype=float))


def test_stiffness_stencil():
    m = 8
    g = make_graded_grid(0, math.pi, m)
    K = assemble_stiffness(g, ONE, 1).dense()
    h = math.pi / m
    assert np.allclose(np.diag(K), 2 / h) and np.allclose(np.diag(K, 1), -1 / h)


def test_stiffness_energy_of_linear():
    g = make_graded_grid(0, 1, 50, geometric("a", 0.9))
    K = assemble_stiffness(g, ONE, 1, bc="free")
    x = nodal_values(K, lambda r: r)
    assert abs(form_value(K, x) - 1.0) <= 1e-12


def test_stiffness_weighted_coefficient():
    g = make_graded_grid(0, 1, 64)
    K = assemble_stiffness(g, lambda r: r ** 2, 1, bc="free")
    assert abs(form_value(K, nodal_values(K, lambda r: r)) - 1 / 3) <= 1e-4


def test_stiffness_rejects_negative_coeff():
    with pytest.raises(AssemblyError):
        assemble_stiffness(make_graded_grid(0, 1, 4), lambda r: r - 0.5, 1)
    with pytest.raises(ParameterError):
        assemble_stiffness(make_graded_grid(0, 1, 4), ONE, 1, bc="robin")


def test_mass_examples():
    g = make_graded_grid(0, 1, 20)
    M = assemble_weighted_mass(g, ONE, 1, bc="free")
    assert abs(form_value(M, np.ones(M.size)) - 1.0) <= 1e-10
    # row of an interior hat: half of each neighbouring panel
    assert M.diag[5] == pytest.approx(g.panel_weights[4] / 2 + g.panel_weights[5] / 2, rel=1e-14)
    assert np.all(M.offdiag == 0)


def test_mass_matches_radial_oracle():
    eps = 0.01
    g = make_graded_grid(eps, 1, 4096)
    q = lambda r: 1 / (4 * r ** 2)
    M = assemble_weighted_mass(g, q, 3, bc="free")
    got = form_value(M, nodal_values(M, lambda r: r ** 0.4))
    oracle = integrate_radial(g, lambda r: q(r) * r ** 0.8, 3)
    assert got == pytest.approx(oracle, rel=1e-6)


def test_form_value_basics():
    g = make_graded_grid(0, 1, 10)
    K = assemble_stiffness(g, ONE, 2)
    assert form_value(K, np.zeros(K.size)) == 0.0
    e = np.zeros(K.size)
    e[3] = 1
    assert form_value(K, e) == pytest.approx(K.diag[3], rel=1e-15)
    M = assemble_weighted_mass(g, ONE, 1)
    assert form_value(M, np.ones(M.size)) == pytest.approx(1 - g.panel_weights[0] / 2 - g.panel_weights[-1] / 2)
    with pytest.raises(ParameterError):
        form_value(K, np.zeros(K.size + 1))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), alpha=st.floats(-50, 50))
def test_quadratic_form_properties(seed, alpha):
    rng = np.random.default_rng(seed)
    g = make_graded_grid(0, 1, 40, geometric("both"))
    K = assemble_stiffness(g, lambda r: 1 + r, 3)
    x = rng.normal(size=K.size)
    v = form_value(K, x)
    assert v >= -1e-10 * (x @ x) * np.abs(K.dense()).max()
    assert form_value(K, alpha * x) == pytest.approx(alpha ** 2 * v, rel=1e-12, abs=1e-300)
    M = assemble_weighted_mass(g, lambda r: 1 + r, 3)
    assert form_value(M, x) > 0


def test_identity_interval_power():
    w = catalog("interval_boundary")
    t = 0.75
    u = lambda x: (x * (1 - x)) ** t
    du = lambda x: t * (x * (1 - x)) ** (t - 1) * (1 - 2 * x)
    res = identity_residual(w, u, du, default_grid(w, 4096))
    assert abs(res.residual) <= 1e-6 * max(abs(res.lhs), 1)


def test_identity_square_root_with_cutoff():
    # u = sqrt(E) * c with c == 1 on [0.2, 0.8]: only the cutoff region feeds int E|grad v|^2
    w = catalog("interval_boundary")

    def c(x):
        s = np.clip((np.minimum(x, 1 - x) - 0.05) / 0.15, 0, 1)
        return s * s * (3 - 2 * s)

    def dc(x):
        s = np.clip((np.minimum(x, 1 - x) - 0.05) / 0.15, 0, 1)
        ds = np.where((s > 0) & (s < 1), np.where(x < 0.5, 1.0, -1.0) / 0.15, 0.0)
        return 6 * s * (1 - s) * ds

    E = lambda x: x * (1 - x)
    u = lambda x: np.sqrt(E(x)) * c(x)
    du = lambda x: 0.5 * (1 - 2 * x) / np.sqrt(E(x)) * c(x) + np.sqrt(E(x)) * dc(x)
    res = identity_residual(w, u, du, make_graded_grid(0, 1, 4000))
    assert abs(res.residual) <= 10 * res.error_estimate
    assert abs(res.residual) <= 1e-8 * res.terms["dirichlet"]


@pytest.mark.parametrize("m", [64, 128])
def test_identity_cone(m):
    w = catalog("cone2d", L=1.0)
    u = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    du = lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y), np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))
    res = identity_residual(w, u, du, make_graded_grid(0, 1, m))
    assert res.relative <= 1e-4
    assert res.line_constant == pytest.approx(math.sqrt(2), rel=1e-4)


def test_interior_rejects_powers_of_E():
    w = catalog("newton")
    t = 0.3
    with pytest.raises(AdmissibilityError):
        identity_residual(w, lambda r: r ** -t * (1 - r), lambda r: -t * r ** (-t - 1), default_grid(w, 64))


def test_boundary_rejects_nonvanishing():
    w = catalog("interval_boundary")
    with pytest.raises(AdmissibilityError):
        identity_residual(w, ONE, lambda x: 0 * x, default_grid(w, 64))


def test_annulus_inner_boundary_term():
    # u free on the inner circle: the endpoint term carries the difference
    w = catalog("annulus_log", r0=0.5, R=1.0)
    u = lambda r: 1 - r
    du = lambda r: -np.ones_like(r)
    res = identity_residual(w, u, du, default_grid(w, 512))
    assert res.terms["boundary"] == pytest.approx(math.pi * 0.25 / math.log(2), rel=1e-14)
    assert abs(res.residual) <= 1e-10


def test_neumann_identity_with_free_outer_value():
    w = catalog("neumann_ball3")
    u = lambda r: np.cos(r)
    du = lambda r: -np.sin(r)
    res = identity_residual(w, u, du, default_grid(w, 2048))
    assert res.terms["pairing"] == 0.0
    assert abs(res.residual) <= 1e-9 * res.terms["dirichlet"] + 1e-9
