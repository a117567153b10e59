"""Tridiagonal quadratic forms on P1 elements and the ground-state identity check.

For u admissible and v = E^{-1/2} u the identity reads

    int |u'|^2 - 1/4 int (E'/E)^2 u^2 + c/2 int u^2  =  int E |v'|^2 + 1/2 int u^2/E dmu + BT

with c the screening coefficient of the weight and BT = [u^2 E' J / (2E)] the
endpoint term, which is zero for admissible u.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AdmissibilityError, AssemblyError, IntegrationError, ParameterError
from .grid import Grid1D, make_graded_grid, sphere_area, tensor_integrate_2d
from .weights import WeightSpec, dirichlet_ends, measure_pairing

BCS = ("dirichlet-both", "dirichlet-outer-only", "neumann-outer", "free")

ADMISSIBILITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class TridiagForm:
    diag: np.ndarray
    offdiag: np.ndarray
    grid: Grid1D
    dof_map: np.ndarray  # node indices carrying unknowns

    @property
    def size(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.offdiag * x[1:]
        y[1:] += self.offdiag * x[:-1]
        return y


def _dofs(m: int, bc: str) -> np.ndarray:
    if bc == "dirichlet-both":
        return np.arange(1, m)
    if bc == "dirichlet-outer-only":
        return np.arange(0, m)
    if bc == "neumann-outer":
        return np.arange(1, m + 1)
    if bc == "free":
        return np.arange(0, m + 1)
    raise ParameterError(f"unknown boundary condition {bc!r}; choose from {BCS}")


def _radial_factor(r: np.ndarray, n: int) -> np.ndarray:
    # n = 1 is the axial geometry: no sphere-area factor
    if n == 1:
        return np.ones_like(r)
    return sphere_area(n) * r ** (n - 1)


def _checked(values, x, what):
    values = np.asarray(values, dtype=float)
    if values.shape != x.shape:
        values = np.broadcast_to(values, x.shape).astype(float)
    bad = ~np.isfinite(values)
    if bad.any():
        raise AssemblyError(f"{what} is not finite at r={x[np.argmax(bad)]!r}")
    neg = values < 0
    if neg.any():
        raise AssemblyError(f"{what} is negative at r={x[np.argmax(neg)]!r}")
    return values


def _restrict(full_diag, full_off, dofs, grid) -> TridiagForm:
    lo, hi = dofs[0], dofs[-1]
    d = np.array(full_diag[lo:hi + 1])
    o = np.array(full_off[lo:hi])
    for arr in (d, o):
        arr.setflags(write=False)
    dofs = np.array(dofs)
    dofs.setflags(write=False)
    return TridiagForm(d, o, grid, dofs)


def assemble_stiffness(grid: Grid1D, coeff: Callable, n: int, bc: str = "dirichlet-both") -> TridiagForm:
    """P1 stiffness for int coeff(r) u'(r)^2 J(r) dr; coeff*J is sampled at panel midpoints."""
    dofs = _dofs(grid.m, bc)
    mid = grid.midpoints
    with np.errstate(all="ignore"):
        c = _checked(coeff(mid), mid, "stiffness coefficient") * _radial_factor(mid, n)
    k = c / grid.panel_weights
    diag = np.zeros(grid.m + 1)
    diag[:-1] += k
    diag[1:] += k
    return _restrict(diag, -k, dofs, grid)


def assemble_weighted_mass(grid: Grid1D, q: Callable, n: int, bc: str = "dirichlet-both",
                           rule: str = "gauss4") -> TridiagForm:
    """Lumped mass for int q(r) u^2 J(r) dr: node i gets int q J phi_i."""
    dofs = _dofs(grid.m, bc)
    x, wts = grid.abscissae(rule)
    with np.errstate(all="ignore"):
        qv = _checked(q(x), x, "mass weight")
    vals = wts * qv * _radial_factor(x, n)
    k = len(x) // grid.m
    panel = np.repeat(np.arange(grid.m), k)
    left = grid.nodes[panel]
    lam = (x - left) / grid.panel_weights[panel]  # hat coordinate of each abscissa
    diag = np.zeros(grid.m + 1)
    np.add.at(diag, panel, vals * (1.0 - lam))
    np.add.at(diag, panel + 1, vals * lam)
    return _restrict(diag, np.zeros(grid.m), dofs, grid)


def form_value(form: TridiagForm, coeffs) -> float:
    x = np.asarray(coeffs, dtype=float)
    if x.shape != (form.size,):
        raise ParameterError(f"need {form.size} coefficients, got shape {x.shape}")
    return float(x @ form.matvec(x))


def nodal_values(form: TridiagForm, u: Callable) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.asarray(u(form.grid.nodes[form.dof_map]), dtype=float)


@dataclass(frozen=True)
class IdentityResult:
    lhs: float
    rhs: float
    residual: float
    relative: float
    error_estimate: float
    terms: dict = field(default_factory=dict)
    line_constant: Optional[float] = None

    def as_dict(self) -> dict:
        out = {"lhs": self.lhs, "rhs": self.rhs, "residual": self.residual, "relative": self.relative,
               "error_estimate": self.error_estimate, "terms": dict(self.terms)}
        if self.line_constant is not None:
            out["line_constant"] = self.line_constant
        return out


def check_admissible(w: WeightSpec, u: Callable) -> None:
    """Reject u that does not vanish at Dirichlet ends or near the singular set."""
    span = w.b - w.a
    probes = {"a": [w.a], "b": [w.b]}
    for end in dirichlet_ends(w):
        with np.errstate(all="ignore"):
            val = np.asarray(u(np.array(probes[end], dtype=float)), dtype=float)
        if not np.all(np.abs(val) <= ADMISSIBILITY_TOL):
            raise AdmissibilityError(f"test function must vanish at r={probes[end][0]} (got {float(val[0])!r})")
    if w.kind == "interior":
        near = w.a + span * np.array([1e-12, 1e-9, 1e-6])
        with np.errstate(all="ignore"):
            val = np.asarray(u(near), dtype=float)
        if not np.all(np.abs(val) <= ADMISSIBILITY_TOL):
            raise AdmissibilityError("test function must vanish near the singular set of E")


def _end_term(w: WeightSpec, u: Callable, r: float, sign: float) -> float:
    # sign * u^2 E' J / (2E) at an end where E is finite and nonzero
    with np.errstate(all="ignore"):
        x = np.array([r])
        val = sign * 0.5 * u(x) ** 2 * w.dE(x) * w.jacobian(x) / w.E(x)
    v = float(np.asarray(val).ravel()[0])
    return v if math.isfinite(v) else 0.0


def _radial_terms(w: WeightSpec, u: Callable, du: Callable, grid: Grid1D) -> dict:
    x, wts = grid.abscissae()
    with np.errstate(all="ignore"):
        E, _ = w.values(x, grid.gauss_dist_b)
        dE = w.dE(x)
        J = w.jacobian(x)
        uv, duv = np.asarray(u(x), dtype=float), np.asarray(du(x), dtype=float)
        rho = dE / E
        parts = {
            "dirichlet": duv ** 2 * J,
            "hardy": rho ** 2 * uv ** 2 * J,
            "ground_state": (duv - 0.5 * rho * uv) ** 2 * J,
            "l2": uv ** 2 * J,
        }
    out = {}
    for key, vals in parts.items():
        bad = ~np.isfinite(vals)
        if bad.any():
            at = float(x[np.argmax(bad)])
            raise IntegrationError(f"{key} integrand not finite at r={at!r}", abscissa=at)
        out[key] = float(wts @ vals)
    out["pairing"] = measure_pairing(w, lambda r: np.where(np.isfinite(w.E(r)), u(r) ** 2 / w.E(r), 0.0), grid)
    bt = 0.0
    if w.ends[0] not in ("inf", "zero") and not (w.geometry == "ball-radial" and w.a == 0.0):
        bt += _end_term(w, u, w.a, -1.0)
    if w.ends[1] not in ("inf", "zero"):
        bt += _end_term(w, u, w.b, 1.0)
    out["boundary"] = bt
    return out


def _combine(t: dict, screening: float) -> tuple[float, float, float]:
    lhs = t["dirichlet"] - 0.25 * t["hardy"] + 0.5 * screening * t["l2"]
    rhs = t["ground_state"] + 0.5 * t["pairing"] + t["boundary"]
    scale = t["dirichlet"] + 0.25 * t["hardy"] + 0.5 * abs(screening) * t["l2"]
    return lhs, rhs, scale


def _coarse(grid: Grid1D) -> Grid1D:
    if grid.m % 2 == 0 and grid.m >= 4:
        return grid.coarsened()
    return make_graded_grid(grid.a, grid.b, max(2, grid.m // 2), grid.grading)


def identity_residual(w: WeightSpec, u: Callable, du, grid: Grid1D, check: bool = True) -> IdentityResult:
    """Both sides of the ground-state identity for one test function.

    For the cone geometry u takes (x, y) and du returns the pair (u_x, u_y);
    the same grid is used on both axes.  The error estimate is the change of
    the residual against the grid with half the panels.
    """
    if w.tensor:
        return _cone_identity(w, u, du, grid)
    if check:
        check_admissible(w, u)
    t = _radial_terms(w, u, du, grid)
    lhs, rhs, scale = _combine(t, w.screening)
    res = lhs - rhs
    tc = _radial_terms(w, u, du, _coarse(grid))
    lc, rc, _ = _combine(tc, w.screening)
    est = max(abs((lc - rc) - res), 16 * np.finfo(float).eps * scale)
    rel = abs(res) / scale if scale > 0 else 0.0
    return IdentityResult(lhs, rhs, res, rel, est, t)


def _cone_terms(w: WeightSpec, u, du, grid: Grid1D) -> dict:
    def grad2(x, y):
        ux, uy = du(x, y)
        return ux ** 2 + uy ** 2

    def hardy(x, y):
        return u(x, y) ** 2 / np.minimum(x, y) ** 2

    def ground(x, y):
        # v = E^{-1/2} u;  E |grad v|^2 = |grad u - u grad E / (2E)|^2
        ux, uy = du(x, y)
        E = np.minimum(x, y)
        gx = np.where(x < y, 1.0, 0.0)
        gy = 1.0 - gx
        return (ux - 0.5 * u(x, y) * gx / E) ** 2 + (uy - 0.5 * u(x, y) * gy / E) ** 2

    out = {
        "dirichlet": tensor_integrate_2d(grid, grid, grad2),
        "hardy": tensor_integrate_2d(grid, grid, hardy),
        "ground_state": tensor_integrate_2d(grid, grid, ground),
    }
    # arclength integral of u^2/E along the diagonal
    out["diagonal"] = measure_pairing(w, lambda x, y: u(x, y) ** 2 / np.minimum(x, y), grid) / w.measure.density(1.0)
    out["pairing"] = out["diagonal"] * math.sqrt(2.0)
    return out


def _cone_identity(w: WeightSpec, u, du, grid: Grid1D) -> IdentityResult:
    t = _cone_terms(w, u, du, grid)
    lhs = t["dirichlet"] - 0.25 * t["hardy"]
    rhs = t["ground_state"] + 0.5 * t["pairing"]
    scale = t["dirichlet"] + 0.25 * t["hardy"]
    res = lhs - rhs
    # constant c with  lhs - ground = c/2 * int_diag u^2/E dl ; sqrt(2) expected
    measured = 2.0 * (lhs - t["ground_state"]) / t["diagonal"]
    tc = _cone_terms(w, u, du, _coarse(grid))
    est = max(abs((tc["dirichlet"] - 0.25 * tc["hardy"]) - (tc["ground_state"] + 0.5 * tc["pairing"]) - res),
              16 * np.finfo(float).eps * scale)
    return IdentityResult(lhs, rhs, res, abs(res) / scale, est, t, line_constant=measured)
