"""Rayleigh quotients along explicit minimizing families, and the integral identities behind them.

Family members are functions of E.  Writing u = phi(E), every quotient is a
ratio of integrals  int |grad E|^k G(E)  with G built from phi^2 and phi'^2,
so the singular-end closures of ``weights.weighted_moment`` apply directly.
Members built from arbitrary callables go through plain quadrature instead;
tests use that second route to cross-check the first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AdmissibilityError, DegenerateInputError, DomainError, IntegrationError, NumericalError, ParameterError
from .grid import Grid1D
from .powersum import PowerSum
from .weights import (WeightSpec, default_grid, dirichlet_ends, measure_pairing, pair_density, shift,
                      weighted_moment)

FAMILIES = ("power", "power_minus_gamma", "power_log", "power_cutoff")
DEGENERATE_RATIO = 1e-14
ADMISSIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class TestFamily:
    """A one- or two-parameter family of test functions u = phi(E)."""
    __test__ = False  # not a pytest class

    name: str
    t: float = 0.0
    tau: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise ParameterError(f"unknown family {self.name!r}; choose from {FAMILIES}")

    def with_param(self, key: str, value: float) -> "TestFamily":
        return TestFamily(self.name, **{**self.params(), key: value})

    def params(self) -> dict:
        return {"t": self.t, "tau": self.tau, "eps": self.eps}

    def describe(self) -> dict:
        keep = {"power": ("t",), "power_minus_gamma": ("t",), "power_log": ("t", "tau"),
                "power_cutoff": ("tau", "eps")}[self.name]
        return {"name": self.name, **{k: getattr(self, k) for k in keep}}

    def member(self, w: WeightSpec) -> "Member":
        return _build(self, w)


@dataclass(frozen=True, eq=False)
class Member:
    """u = phi(E) with phi^2 and phi'^2 as power sums in z = E.

    ``powers`` lists (c, a) with phi = sum c z^a when phi has no log factor.
    """
    w: WeightSpec
    u: Callable
    du: Callable
    phi2: Optional[PowerSum] = None
    dphi2: Optional[PowerSum] = None
    label: str = ""
    powers: Optional[tuple] = None

    def scaled(self, c: float) -> "Member":
        c2 = c * c
        ps = lambda s: None if s is None else PowerSum.of(((c2 * k, a, b) for k, a, b in s.terms), s.gamma, s.zmin)
        pw = None if self.powers is None else tuple((c * k, a) for k, a in self.powers)
        return Member(self.w, lambda r: c * self.u(r), lambda r: c * self.du(r), ps(self.phi2), ps(self.dphi2),
                      self.label, pw)


def custom_member(w: WeightSpec, u: Callable, du: Callable, label: str = "custom") -> Member:
    """A test function given by value and derivative in r; integrated by plain quadrature."""
    return Member(w, u, du, None, None, label)


def power_member(w: WeightSpec, powers, label: str = "", zmin: float = 0.0) -> Member:
    """u = sum c E^a where E > zmin, and 0 elsewhere."""
    powers = tuple((float(c), float(a)) for c, a in powers)
    E, dE = w.E, w.dE

    def u(r):
        z = E(r)
        with np.errstate(all="ignore"):
            val = sum(c * z ** a for c, a in powers)
        return np.where(z > zmin, val, 0.0) if zmin > 0 else val

    def du(r):
        z = E(r)
        with np.errstate(all="ignore"):
            val = sum(c * a * z ** (a - 1) for c, a in powers if a != 0) * dE(r)
        return np.where(z > zmin, val, 0.0) if zmin > 0 else val

    lin = [(c * a, a - 1) for c, a in powers if a != 0]
    phi2 = PowerSum.of([(c1 * c2, a1 + a2, 0) for c1, a1 in powers for c2, a2 in powers], zmin=zmin)
    dphi2 = PowerSum.of([(c1 * c2, a1 + a2, 0) for c1, a1 in lin for c2, a2 in lin], zmin=zmin)
    return Member(w, u, du, phi2, dphi2, label, powers)


def _build(f: TestFamily, w: WeightSpec) -> Member:
    if w.tensor:
        raise ParameterError("families are defined for radial and axial weights")
    if f.name == "power":
        return power_member(w, [(1.0, f.t)], f"E^{f.t:g}")
    if f.name == "power_minus_gamma":
        t, g = f.t, w.gamma
        if not g > 0:
            raise DomainError("E^t - gamma^t needs gamma > 0; shift the weight first")
        return power_member(w, [(1.0, t), (-(g ** t), 0.0)], f"E^{t:g}-gamma^{t:g}")
    if f.name == "power_cutoff":
        tau, eps = f.tau, f.eps
        if not eps > 0:
            raise ParameterError("power_cutoff needs eps > 0")
        return power_member(w, [(1.0, tau), (-(eps ** tau), 0.0)], f"(E^{tau:g}-{eps:g}^{tau:g})+", zmin=eps)
    t, tau, g = f.t, f.tau, w.gamma
    if not g > 0:
        raise DomainError("E^t log^tau(E/gamma) needs gamma > 0")
    E, dE = w.E, w.dE
    L = lambda r: np.log(E(r) / g)
    return Member(w, lambda r: E(r) ** t * L(r) ** tau,
                  lambda r: E(r) ** (t - 1) * dE(r) * L(r) ** (tau - 1) * (t * L(r) + tau),
                  PowerSum.of([(1.0, 2 * t, 2 * tau)], gamma=g),
                  PowerSum.of([(t * t, 2 * t - 2, 2 * tau), (2 * t * tau, 2 * t - 2, 2 * tau - 1),
                               (tau * tau, 2 * t - 2, 2 * tau - 2)], gamma=g),
                  f"E^{t:g} log^{tau:g}")


def check_member(m: Member) -> None:
    """Reject members that do not vanish where admissible functions must."""
    w = m.w
    for end in sorted(dirichlet_ends(w)):
        side = 0 if end == "a" else 1
        if w.ends[side] == "tail":
            continue  # decays at infinity, not at the truncation radius
        r = np.array([w.a if end == "a" else w.b])
        with np.errstate(all="ignore"):
            val = float(np.asarray(m.u(r), dtype=float).ravel()[0])
        if not abs(val) <= ADMISSIBILITY_TOL:
            raise AdmissibilityError(f"{m.label or 'u'} must vanish at r={r[0]:g} (got {val!r})")


# -- integrals ---------------------------------------------------------------

def _quad(w: WeightSpec, grid: Grid1D, f: Callable) -> float:
    x, wts = grid.abscissae()
    with np.errstate(all="ignore"):
        vals = np.asarray(f(x), dtype=float) * w.jacobian(x)
    bad = ~np.isfinite(vals)
    if bad.any():
        at = float(x[np.argmax(bad)])
        raise IntegrationError(f"non-finite integrand at r={at!r}", abscissa=at)
    return float(wts @ vals)


def plain_moment(w: WeightSpec, G: Callable, grid: Grid1D, k: float = 0.0) -> float:
    """int |grad E|^k G(E) by open quadrature alone, for integrands with no end closure."""
    x, wts = grid.gauss
    Ev, gv = w.values(x, grid.gauss_dist_b)
    with np.errstate(all="ignore"):
        vals = gv ** k * G(Ev) * w.jacobian(x)
    bad = ~np.isfinite(vals)
    if bad.any():
        at = float(x[np.argmax(bad)])
        raise IntegrationError(f"non-finite integrand at r={at!r}", abscissa=at)
    return float(wts @ vals)


def _extra_ends(m: Member) -> str:
    # log densities are singular where E = gamma
    if m.dphi2 is not None and any(b < 0 for _, _, b in m.dphi2.terms):
        return "ab"
    return ""


class Integrals:
    """Lazily computed integrals of one member on one grid."""

    def __init__(self, m: Member, grid: Grid1D):
        self.m, self.grid, self.w = m, grid, m.w
        self.tails = {}

    def _moment(self, key: str, G: PowerSum, k: float) -> float:
        res = weighted_moment(self.w, G, self.grid, k)
        self.tails[key] = (res.tail, res.tail_bound)
        return res.value

    def dirichlet(self) -> float:
        if self.m.dphi2 is not None:
            return self._moment("dirichlet", self.m.dphi2, 2)
        return _quad(self.w, self.grid, lambda r: self.m.du(r) ** 2)

    def hardy(self) -> float:
        """int |grad E|^2/E^2 u^2."""
        if self.m.phi2 is not None:
            return self._moment("hardy", self.m.phi2.times_power(-2.0), 2)
        w = self.w
        return _quad(w, self.grid, lambda r: 4.0 * w.hardy_density(r) * self.m.u(r) ** 2)

    def weighted_dirichlet(self, t: float) -> float:
        """int E^{2t} |grad u|^2."""
        if self.m.dphi2 is not None:
            return self._moment("wdirichlet", self.m.dphi2.times_power(2 * t), 2)
        return _quad(self.w, self.grid, lambda r: self.w.E(r) ** (2 * t) * self.m.du(r) ** 2)

    def weighted_hardy(self, t: float) -> float:
        """int |grad E|^2 E^{2t-2} u^2."""
        if self.m.phi2 is not None:
            return self._moment("whardy", self.m.phi2.times_power(2 * t - 2), 2)
        w = self.w
        return _quad(w, self.grid, lambda r: w.gradE(r) ** 2 * w.E(r) ** (2 * t - 2) * self.m.u(r) ** 2)

    def log_hardy(self) -> float:
        """int |grad E|^2/(E^2 log^2(E/gamma)) u^2."""
        if self.m.phi2 is None:
            g = self.w.gamma
            return _quad(self.w, self.grid,
                         lambda r: 4 * self.w.hardy_density(r) * self.m.u(r) ** 2 / np.log(self.w.E(r) / g) ** 2)
        G = PowerSum.of(((c, a - 2, b - 2) for c, a, b in self.m.phi2.terms), self.m.phi2.gamma, self.m.phi2.zmin)
        return self._moment("log_hardy", G, 2)

    def l2(self) -> float:
        if self.m.phi2 is not None:
            return plain_moment(self.w, self.m.phi2, self.grid)
        return _quad(self.w, self.grid, lambda r: self.m.u(r) ** 2)

    def pairing(self) -> float:
        """int u^2/E dmu."""
        if self.m.phi2 is not None:
            return pair_density(self.w, self.m.phi2.times_power(-1.0), self.grid)
        E = self.w.E
        return measure_pairing(self.w, lambda r: np.where(np.isfinite(E(r)), self.m.u(r) ** 2 / E(r), 0.0), self.grid)

    def boundary_pairing(self) -> float:
        """int over the inner sphere of u^2 d_nu E / E (exterior domains)."""
        bf = self.w.boundary_flux
        if bf is None:
            raise ParameterError("weight has no boundary flux data")
        r = np.array([bf.radius])
        return float(bf.area * bf.normal_derivative * self.m.u(r)[0] ** 2 / self.w.E(r)[0])


def _ratio(num: float, den: float) -> float:
    if not math.isfinite(num) or not math.isfinite(den):
        raise NumericalError("quotient integrals are not finite")
    if abs(den) <= DEGENERATE_RATIO * max(abs(num), 1e-300):
        raise DegenerateInputError("denominator vanishes relative to the numerator")
    return num / den


def _grid(m: Member, grid: Optional[Grid1D]) -> Grid1D:
    return grid if grid is not None else default_grid(m.w, extra_ends=_extra_ends(m))


def _member(w: WeightSpec, u, check: bool = True) -> Member:
    if isinstance(u, TestFamily):
        m = u.member(w)
    elif isinstance(u, Member):
        m = u
    elif isinstance(u, tuple) and len(u) == 2:
        m = custom_member(w, *u)
    else:
        raise ParameterError("u must be a TestFamily, a Member or a (u, du) pair")
    if m.w is not w:
        raise ParameterError("member was built for a different weight")
    if check:
        check_member(m)
    return m


# -- quotients ---------------------------------------------------------------

def quotient_base(w: WeightSpec, u, grid: Optional[Grid1D] = None) -> float:
    """int |grad u|^2 / int (|grad E|^2/E^2) u^2."""
    m = _member(w, u)
    I = Integrals(m, _grid(m, grid))
    return _ratio(I.dirichlet(), I.hardy())


def quotient_improvement(w: WeightSpec, u, grid: Optional[Grid1D] = None) -> float:
    """(int |grad u|^2 - 1/4 int (|grad E|^2/E^2) u^2) / int u^2/E dmu.

    For exterior weights the denominator is the boundary term over the inner sphere.
    """
    m = _member(w, u)
    I = Integrals(m, _grid(m, grid))
    num = I.dirichlet() - 0.25 * I.hardy()
    den = I.boundary_pairing() if w.kind == "exterior" else I.pairing()
    return _ratio(num, den)


def quotient_weighted(w: WeightSpec, t: float, u, grid: Optional[Grid1D] = None, check: bool = True) -> float:
    """int E^{2t} |grad u|^2 / int |grad E|^2 E^{2t-2} u^2."""
    if t == 0.5:
        raise ParameterError("the weighted quotient needs t != 1/2")
    m = _member(w, u, check)
    I = Integrals(m, _grid(m, grid))
    return _ratio(I.weighted_dirichlet(t), I.weighted_hardy(t))


def quotient_neumann(w: WeightSpec, u, grid: Optional[Grid1D] = None) -> float:
    """(int |grad u|^2 + 1/2 int u^2) / int (|grad E|^2/E^2) u^2."""
    if w.kind != "neumann":
        raise ParameterError(f"quotient_neumann needs a neumann weight, got {w.kind}")
    m = _member(w, u)
    I = Integrals(m, _grid(m, grid))
    return _ratio(I.dirichlet() + 0.5 * I.l2(), I.hardy())


def quotient_log_improvement(w: WeightSpec, u, grid: Optional[Grid1D] = None) -> float:
    """(int |grad u|^2 - 1/4 int (|grad E|^2/E^2) u^2) / int |grad E|^2 u^2 / (E^2 log^2(E/gamma))."""
    m = _member(w, u)
    I = Integrals(m, _grid(m, grid))
    return _ratio(I.dirichlet() - 0.25 * I.hardy(), I.log_hardy())


def quotient_region(w: WeightSpec, beta: float, u, grid: Optional[Grid1D] = None) -> float:
    """(int |grad u|^2 - beta int u^2/E dmu) / int (|grad E|^2/E^2) u^2."""
    m = _member(w, u)
    I = Integrals(m, _grid(m, grid))
    return _ratio(I.dirichlet() - beta * I.pairing(), I.hardy())


def log_quotient_closed_form(w: WeightSpec, t: float, tau: float, grid: Optional[Grid1D] = None) -> float:
    """(t^2 - 1/4) J(tau+1)/J(tau) + tau^2 + 2 t tau J(tau+1/2)/J(tau) with J(s) = int E^{2t-2}|grad E|^2 log^{2s-2}."""
    g = w.gamma
    grid = grid if grid is not None else default_grid(w, extra_ends="ab")
    J = lambda s: weighted_moment(w, PowerSum.of([(1.0, 2 * t - 2, 2 * s - 2)], gamma=g), grid).value
    j0 = J(tau)
    return (t * t - 0.25) * J(tau + 1) / j0 + tau * tau + 2 * t * tau * J(tau + 0.5) / j0


@dataclass(frozen=True)
class WeightedIdentity:
    phi: float  # weighted quotient of u = E^{-t} v
    D: float  # base quotient of v
    pairing_ratio: float  # int v^2/E dmu / int (|grad E|^2/E^2) v^2
    predicted: float  # D + t^2 - t - t * pairing_ratio
    residual: float


def weighted_identity(w: WeightSpec, t: float, v: TestFamily, grid: Optional[Grid1D] = None) -> WeightedIdentity:
    """Check  Phi(E^{-t} v) = D(v) + t^2 - t - t * (pairing ratio)  for v = phi(E)."""
    mv = v.member(w)
    grid = _grid(mv, grid)
    Iv = Integrals(mv, grid)
    D = _ratio(Iv.dirichlet(), Iv.hardy())
    ratio = Iv.pairing() / Iv.hardy()
    # u = E^{-t} v: u^2 = z^{-2t} phi^2,  u'^2 = (z^{-t} phi' - t z^{-t-1} phi)^2
    mu = _shifted_member(mv, t)
    Iu = Integrals(mu, grid)
    phi = _ratio(Iu.weighted_dirichlet(t), Iu.weighted_hardy(t))
    pred = D + t * t - t - t * ratio
    return WeightedIdentity(phi, D, ratio, pred, phi - pred)


def _shifted_member(mv: Member, t: float) -> Member:
    """E^{-t} v for a log-free member v."""
    if mv.powers is None:
        raise ParameterError("the weighted quotient on E^{-t} v needs a log-free family")
    zmin = mv.phi2.zmin if mv.phi2 is not None else 0.0
    return power_member(mv.w, [(c, a - t) for c, a in mv.powers], f"E^-{t:g}*{mv.label}", zmin)


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class QuotientSweep:
    family: dict
    quotient: str
    param: str
    param_list: tuple
    values: tuple
    limit_estimate: float
    fit: dict
    truncation: Optional[float] = None
    grid: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"family": self.family, "quotient": self.quotient, "param": self.param,
                "param_list": list(self.param_list), "values": list(self.values),
                "limit_estimate": self.limit_estimate, "fit": dict(self.fit),
                "truncation": self.truncation, "grid": dict(self.grid)}


def fit_limit(params: Sequence[float], values: Sequence[float], at: float = 0.5, degree: int = 2) -> dict:
    """Least-squares C + a d + b d^2 in d = |param - at|; C is the limit."""
    d = np.abs(np.asarray(params, dtype=float) - at)
    v = np.asarray(values, dtype=float)
    if len(d) < 3:
        raise ParameterError("a sweep needs at least 3 parameter values")
    deg = min(degree, len(d) - 1)
    A = np.vander(d, deg + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - v) ** 2)))
    names = ["C", "a", "b"][: deg + 1]
    out = {"model": " + ".join(["C", "a*d", "b*d^2"][: deg + 1]) + f" with d = |param - {at:g}|",
           **{k: float(c) for k, c in zip(names, coef)}, "degree": deg, "rms_residual": resid}
    return out


QUOTIENTS = ("base", "improvement", "weighted", "neumann", "log", "region")


def sweep_family(w: WeightSpec, family: TestFamily, param_list: Sequence[float], grid: Optional[Grid1D] = None,
                 quotient: str = "base", param: str = "t", weight_t: float = 0.0, beta: float = 0.0,
                 limit_at: float = 0.5, truncation: Optional[float] = None) -> QuotientSweep:
    """Evaluate one quotient along a family and extrapolate to param -> limit_at."""
    if len(param_list) < 3:
        raise ParameterError("a sweep needs at least 3 parameter values")
    if quotient not in QUOTIENTS:
        raise ParameterError(f"unknown quotient {quotient!r}; choose from {QUOTIENTS}")
    values = []
    used_grid = None
    for p in param_list:
        fam = family.with_param(param, float(p))
        try:
            m = fam.member(w)
            g = _grid(m, grid)
            used_grid = g
            if quotient == "base":
                q = quotient_base(w, m, g)
            elif quotient == "improvement":
                q = quotient_improvement(w, m, g)
            elif quotient == "weighted":
                # the family supplies v; the quotient is taken on E^{-t} v
                q = quotient_weighted(w, weight_t, _shifted_member(m, weight_t), g, check=False)
            elif quotient == "neumann":
                q = quotient_neumann(w, m, g)
            elif quotient == "log":
                q = quotient_log_improvement(w, m, g)
            else:
                q = quotient_region(w, beta, m, g)
        except Exception as exc:
            raise type(exc)(f"{exc} [at {param}={p}]") from exc
        if not math.isfinite(q):
            raise NumericalError(f"quotient not finite at {param}={p}")
        values.append(q)
    fit = fit_limit(param_list, values, at=limit_at)
    return QuotientSweep(family.describe(), quotient, param, tuple(float(p) for p in param_list), tuple(values),
                         fit["C"], fit, truncation, used_grid.describe() if used_grid is not None else {})


# -- identities and diagnostics ---------------------------------------------

@dataclass(frozen=True)
class MomentCheck:
    identity: str
    t: float
    lhs: float
    rhs: float
    relative_residual: float
    tail: float = 0.0
    tail_bound: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


IDENTITIES = ("boundary", "neumann", "exterior", "annular", "p-case")


def verify_moment_identity(w: WeightSpec, t: float, kind: str, grid: Optional[Grid1D] = None,
                           p: Optional[float] = None) -> MomentCheck:
    """Moment identities obtained by testing the weight's equation with a power of E."""
    if kind not in IDENTITIES:
        raise ParameterError(f"unknown identity {kind!r}; choose from {IDENTITIES}")
    if kind == "p-case":
        from .plaplace import verify_p_moment
        if p is None:
            raise ParameterError("the p-case identity needs p")
        return verify_p_moment(w, t, p, grid)
    grid = grid if grid is not None else default_grid(w)
    I = lambda s: weighted_moment(w, PowerSum.of([(1.0, 2 * s - 2, 0)]), grid)
    tail = bound = 0.0
    if kind == "boundary":
        if not t > 0.5:
            raise ParameterError("the boundary identity needs t > 1/2")
        lhs = (2 * t - 1) * I(t).value
        rhs = pair_density(w, PowerSum.of([(1.0, 2 * t - 1, 0)]), grid)
    elif kind == "neumann":
        if not 0 < t < 0.5:
            raise ParameterError("the neumann identity needs 0 < t < 1/2")
        if w.kind != "neumann":
            raise ParameterError("the neumann identity needs a neumann weight")
        lhs = plain_moment(w, PowerSum.of([(1.0, 2 * t, 0)]), grid)
        rhs = (1 - 2 * t) * I(t).value
    elif kind in ("exterior", "annular"):
        bf = w.boundary_flux
        if bf is None:
            raise ParameterError(f"the {kind} identity needs a weight with boundary flux data")
        if kind == "exterior" and not 0.5 < t < 1:
            raise ParameterError("the exterior identity needs 1/2 < t < 1")
        if kind == "annular":
            if not t > 0.5:
                raise ParameterError("the annular identity needs t > 1/2")
            if bf.normal_derivative > 0:
                raise DomainError("annular identity requires d_nu E <= 0 on the inner boundary")
        res = I(t)
        lhs = (2 * t - 1) * res.value
        Er = float(w.E(np.array([bf.radius]))[0])
        sign = 1.0 if kind == "exterior" else -1.0
        rhs = sign * bf.area * bf.normal_derivative * Er ** (2 * t - 1)
        tail, bound = (2 * t - 1) * res.tail, (2 * t - 1) * res.tail_bound
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    return MomentCheck(kind, t, lhs, rhs, rel, tail, bound)


@dataclass(frozen=True)
class BlowupResult:
    t_values: tuple
    I_values: tuple
    scaled: tuple
    mass_estimate: float
    expected: float
    shift: float
    fit: dict

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def blowup_diagnostic(w: WeightSpec, t_list: Sequence[float], grid: Optional[Grid1D] = None,
                      shift_by: float = 1.0) -> BlowupResult:
    """(1-2t) I(t) with I(t) = int E^{2t-2}|grad E|^2; tends to gamma^{2t-1} mu(Omega).

    When gamma = 0 the weight is shifted to E + shift_by first, which leaves the
    measure unchanged; the expected limit is then mu(Omega) exactly.
    """
    if w.kind != "interior":
        raise ParameterError("the blow-up diagnostic is defined for interior weights")
    c = 0.0
    if not w.gamma > 0:
        w = shift(w, shift_by)
        c = shift_by
    grid = grid if grid is not None else default_grid(w)
    I_vals, scaled = [], []
    for t in t_list:
        if not 0 < t < 0.5:
            raise ParameterError("blow-up parameters must lie in (0, 1/2)")
        val = weighted_moment(w, PowerSum.of([(1.0, 2 * t - 2, 0)]), grid).value
        I_vals.append(val)
        scaled.append((1 - 2 * t) * val)
    fit = fit_limit(t_list, scaled, degree=1)
    return BlowupResult(tuple(float(t) for t in t_list), tuple(I_vals), tuple(scaled), fit["C"],
                        w.measure.total_mass, c, fit)


def region_frontier(w: WeightSpec, beta_list: Sequence[float], grid: Optional[Grid1D] = None,
                    offsets: Sequence[float] = (0.02, 0.01, 0.005, 0.0025)) -> list:
    """Largest alpha for each beta, from u = E^beta (beta > 1/2) or a sweep s -> 1/2+ (beta <= 1/2)."""
    if w.kind != "boundary" or not math.isfinite(w.sup_E):
        raise ParameterError("the region frontier needs a bounded boundary weight")
    out = []
    for beta in beta_list:
        if beta > 0.5:
            fam = TestFamily("power", t=beta)
            m = fam.member(w)
            alpha = quotient_region(w, beta, m, _grid(m, grid))
            nearby = [quotient_region(w, beta, TestFamily("power", t=s).member(w), grid)
                      for s in (max(beta - 0.05, 0.5 + 1e-3), beta + 0.05)]
            out.append({"beta": beta, "alpha_max_estimate": alpha, "theory": beta - beta * beta,
                        "method": "u = E^beta", "neighbours": nearby})
        else:
            sw = sweep_family(w, TestFamily("power"), [0.5 + d for d in offsets], grid, quotient="region", beta=beta)
            out.append({"beta": beta, "alpha_max_estimate": sw.limit_estimate, "theory": 0.25,
                        "method": "sweep s -> 1/2+", "sweep": sw.as_dict()})
    return out
