"""p-Laplacian Hardy quotients: radial fundamental weights, boundary torsion profile, binomial tail."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateInputError, DomainError, ParameterError
from .grid import Grid1D, _freeze
from .powersum import PowerSum, binomial_power_sum
from .rayleigh import MomentCheck, fit_limit
from .weights import MeasureDescriptor, WeightSpec, default_grid, pair_density, sphere_area, weighted_moment

DEGENERATE = 1e-300
TAIL_TOL = 1e-14


def _check_p(p: float, n: Optional[float] = None) -> float:
    p = float(p)
    if not (math.isfinite(p) and p > 1):
        raise ParameterError(f"p must exceed 1, got {p}")
    if n is not None and not p < n:
        raise ParameterError(f"need 1 < p < n, got p={p}, n={n}")
    return p


def p_weight(n: int, p: float, R: float = 1.0) -> WeightSpec:
    """E = r^((p-n)/(p-1)) on the ball of radius R, the radial p-fundamental profile."""
    if int(n) != n or n < 2:
        raise ParameterError(f"n must be an integer >= 2, got {n}")
    n = int(n)
    p = _check_p(p, n)
    if not R > 0:
        raise ParameterError(f"R must be positive, got {R}")
    a = (n - p) / (p - 1)
    E = lambda r: np.asarray(r, dtype=float) ** (-a)
    dE = lambda r: -a * np.asarray(r, dtype=float) ** (-a - 1)
    gradE = lambda r: a * np.asarray(r, dtype=float) ** (-a - 1)
    density = lambda r: ((n - p) / p) ** p / np.asarray(r, dtype=float) ** p
    # -div(|grad E|^(p-2) grad E) is a point mass: constant flux a^(p-1) through every sphere
    mass = a ** (p - 1) * sphere_area(n)
    measure = MeasureDescriptor("dirac", mass, point=0.0, mass=mass)
    return WeightSpec("p_fundamental", "interior", n, 0.0, float(R), "ball-radial", E, dE, gradE, density, measure,
                      gamma=float(R) ** (-a), sup_E=math.inf, ends=("inf", None), params={"n": n, "p": p, "R": R},
                      jacobian_dim=n)


def p_boundary_weight(p: float) -> WeightSpec:
    """E on (0, 1) with -(|E'|^(p-2) E')' = 1 and E(0) = E(1) = 0.

    One integration gives |E'|^(p-2) E' = 1/2 - x, so E' = sign(1-2x) |(1-2x)/2|^(1/(p-1));
    a second gives E in closed form.
    """
    p = _check_p(p)
    e = 1.0 / (p - 1)
    top = 0.5 ** (e + 1) / (e + 1)

    def E_b(s):
        # distance form: 2^-(e+1) (1 - (1-2s)^(e+1)) / (e+1), no cancellation near s = 0
        s = np.asarray(s, dtype=float)
        return top * -np.expm1((e + 1) * np.log1p(-2.0 * np.minimum(s, 0.5)))

    def E(x):
        x = np.asarray(x, dtype=float)
        return E_b(np.minimum(x, 1.0 - x))

    def dE(x):
        v = 0.5 - np.asarray(x, dtype=float)
        return np.sign(v) * np.abs(v) ** e

    gradE = lambda x: np.abs(0.5 - np.asarray(x, dtype=float)) ** e
    gradE_b = lambda s: np.abs(0.5 - np.asarray(s, dtype=float)) ** e
    density = lambda x: ((p - 1) / p) ** p * gradE(x) ** p / E(x) ** p
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    measure = MeasureDescriptor("volume", 1.0, density=one, density_b=one)
    return WeightSpec("p_torsion", "boundary", 1, 0.0, 1.0, "interval-axial", E, dE, gradE, density, measure,
                      gamma=0.0, sup_E=top, ends=("zero", "zero"), params={"p": p}, E_b=E_b, gradE_b=gradE_b)


def p_grid(w: WeightSpec, m: int = 4096) -> Grid1D:
    """Default grid with nodes removed where |grad E|^p would overflow.

    The first panel then reaches from 0 to a radius where the integrand is finite;
    the end closure covers it exactly because the p-flux r^(n-1) |E'|^(p-1) is constant.
    """
    g = default_grid(w, m)
    if "p" not in w.params or "n" not in w.params:
        return g
    p, a = w.params["p"], (w.params["n"] - w.params["p"]) / (w.params["p"] - 1)
    r_min = w.b * 10.0 ** (-250.0 / ((a + 1) * max(p, 1.0)))
    keep = (g.nodes == 0.0) | (g.nodes >= r_min)
    if keep.all():
        return g
    return _freeze(g.a, g.b, g.nodes[keep], g.grading, g.dist_b[keep])


class _SplitDensity:
    """Exact density in the bulk; binomial expansion for closure panels where z >> gamma."""

    def __init__(self, exact, p: float, t: float, gamma: float, exponent: float):
        self.exact, self.p, self.t, self.gamma, self.exponent = exact, p, t, gamma, exponent

    def __call__(self, z):
        return self.exact(np.asarray(z, dtype=float))

    def integral(self, z0: float, z1: float) -> float:
        lo = min(z0, z1)
        if not lo > 2.0 * self.gamma:
            raise DegenerateInputError("closure panel too close to E = gamma for the binomial expansion")
        ps = binomial_power_sum(self.p, self.t, self.gamma, self.exponent, zmin=lo)
        return ps.integral(z0, z1)


def binomial_tail(p: float) -> float:
    """C_p = sum_{m>=1} |binom(p, m)| / m, summed until the term drops below 1e-14."""
    p = _check_p(p)
    coef = 1.0
    terms = []
    m = 0
    while True:
        coef *= (p - m) / (m + 1)
        m += 1
        term = abs(coef) / m
        terms.append(term)
        if term < TAIL_TOL or coef == 0.0:
            break
    return math.fsum(terms)


@dataclass(frozen=True)
class PQuotientReport:
    p: float
    t: float
    Q_t: float
    bound_rhs: float
    C_p: float
    limit_target: float
    bound_holds: bool
    numerator: float
    denominator: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def p_quotient(w: WeightSpec, p: float, t: float, grid: Optional[Grid1D] = None) -> PQuotientReport:
    """Q_t = int (|grad E|/E)^p |u_t|^p / int |grad u_t|^p with u_t = E^t - gamma^t."""
    p = _check_p(p)
    crit = (p - 1) / p
    if not 0 < t < crit:
        raise ParameterError(f"t must lie in (0, {crit:g}), got {t}")
    if w.kind != "interior" or w.ends[0] != "inf":
        raise DomainError("p_quotient needs an interior weight singular at the origin")
    grid = grid if grid is not None else p_grid(w)
    g = w.gamma
    exact = lambda z: z ** (-p) * np.abs(z ** t - g ** t) ** p
    num = weighted_moment(w, _SplitDensity(exact, p, t, g, t * p - p), grid, k=p).value
    den = weighted_moment(w, PowerSum.of([(t ** p, (t - 1) * p, 0)]), grid, k=p).value
    if not abs(den) > DEGENERATE:
        raise DegenerateInputError("degenerate denominator in the p-quotient")
    Q = num / den
    C = binomial_tail(p)
    rhs = (p - t * p - 1) * C / t ** (p + 1)
    ok = abs(Q - 1.0 / t ** p) <= rhs + 1e-6
    return PQuotientReport(p, float(t), Q, rhs, C, (p / (p - 1)) ** p, ok, num, den)


def p_sweep(w: WeightSpec, p: float, t_list: Sequence[float], grid: Optional[Grid1D] = None) -> dict:
    """Q_t along t -> (p-1)/p with the extrapolated limit."""
    p = _check_p(p)
    grid = grid if grid is not None else p_grid(w)
    reports = [p_quotient(w, p, t, grid) for t in t_list]
    values = [r.Q_t for r in reports]
    crit = (p - 1) / p
    fit = fit_limit(t_list, values, at=crit)
    steps = np.diff(values) * np.sign(np.diff(np.abs(np.asarray(t_list) - crit)))
    return {"p": p, "t": list(map(float, t_list)), "values": values, "limit": fit["C"], "fit": fit,
            "limit_target": (p / (p - 1)) ** p, "bound_holds_all": all(r.bound_holds for r in reports),
            "monotone": bool(np.all(steps <= 0) or np.all(steps >= 0)),
            "bounds": [r.bound_rhs for r in reports]}


def _boundary_terms(w: WeightSpec, p: float, t: float, grid: Grid1D):
    J = weighted_moment(w, PowerSum.of([(1.0, t * p - p, 0)]), grid, k=p).value
    pair = pair_density(w, PowerSum.of([(1.0, t * p - p + 1, 0)]), grid)
    return J, pair


def p_boundary_quotients(p: float, t: float, grid: Optional[Grid1D] = None, w: Optional[WeightSpec] = None) -> dict:
    """Quotients of u = E^t on the boundary p-weight, t > (p-1)/p.

    plain:       int (|E'|/E)^p |u|^p / int |u'|^p  ->  (p/(p-1))^p
    improvement: (int |u'|^p - ((p-1)/p)^p int (|E'|/E)^p |u|^p) / int |u|^p E^(1-p) dmu  ->  ((p-1)/p)^(p-1)
    """
    p = _check_p(p)
    crit = (p - 1) / p
    if not t > crit:
        raise ParameterError(f"t must exceed {crit:g}, got {t}")
    w = w if w is not None else p_boundary_weight(p)
    grid = grid if grid is not None else default_grid(w)
    J, pair = _boundary_terms(w, p, t, grid)
    dirichlet = t ** p * J
    if not (J > DEGENERATE and pair > DEGENERATE):
        raise DegenerateInputError("degenerate boundary p-quotient")
    return {"p": p, "t": float(t), "plain": J / dirichlet, "improvement": (dirichlet - crit ** p * J) / pair,
            "plain_target": crit ** -p, "improvement_target": crit ** (p - 1), "J": J, "pairing": pair}


def p_boundary_sweep(p: float, t_list: Sequence[float], grid: Optional[Grid1D] = None) -> dict:
    p = _check_p(p)
    w = p_boundary_weight(p)
    grid = grid if grid is not None else default_grid(w)
    rows = [p_boundary_quotients(p, t, grid, w) for t in t_list]
    crit = (p - 1) / p
    plain = fit_limit(t_list, [r["plain"] for r in rows], at=crit)
    imp = fit_limit(t_list, [r["improvement"] for r in rows], at=crit)
    return {"p": p, "t": list(map(float, t_list)), "plain": [r["plain"] for r in rows],
            "improvement": [r["improvement"] for r in rows], "plain_limit": plain["C"],
            "improvement_limit": imp["C"], "plain_target": crit ** -p, "improvement_target": crit ** (p - 1)}


def verify_p_moment(w: WeightSpec, t: float, p: float, grid: Optional[Grid1D] = None) -> MomentCheck:
    """int E^(tp-p+1) dmu = (tp-p+1) int |grad E|^p E^(tp-p) for a boundary p-weight."""
    p = _check_p(p)
    if not t > (p - 1) / p:
        raise ParameterError(f"the p-case identity needs t > {(p - 1) / p:g}")
    if w.kind != "boundary":
        raise DomainError("the p-case identity is shipped for boundary p-weights only")
    wp = w.params.get("p")
    if wp is None and p != 2.0:
        raise DomainError("the p-case identity needs a p-torsion weight (p_boundary_weight) unless p = 2")
    if wp is not None and abs(wp - p) > 1e-12:
        raise ParameterError(f"weight was built for p={wp}, identity asked for p={p}")
    grid = grid if grid is not None else default_grid(w)
    J, pair = _boundary_terms(w, p, t, grid)
    lhs = (t * p - p + 1) * J
    return MomentCheck("p-case", float(t), lhs, pair, abs(lhs - pair) / max(abs(pair), DEGENERATE))


def young_constants(p: float, s: Optional[float] = None) -> dict:
    """Coefficients after Young's inequality with split s.

    From (p-1)/p B + C/p <= s B + C(s) D with C(s) = q^(-p/q) s^(-p/q) / p, q = p/(p-1):
    B gets ((p-1)/p - s)/C(s), C gets 1/(p C(s)).  The B coefficient peaks at s = 1/q^2,
    where the pair equals (((p-1)/p)^p, ((p-1)/p)^(p-1)).
    """
    p = _check_p(p)
    q = p / (p - 1)
    s = 1.0 / q ** 2 if s is None else float(s)
    if not s > 0:
        raise ParameterError("the Young split must be positive")
    Cs = q ** (-p / q) * s ** (-p / q) / p
    return {"p": p, "q": q, "split": s, "hardy_coefficient": ((p - 1) / p - s) / Cs,
            "measure_coefficient": 1.0 / (p * Cs), "optimal_split": 1.0 / q ** 2}
