"""Smallest generalized eigenvalues of tridiagonal pencils and truncated best-constant studies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import HardyLabError, NumericalError, ParameterError
from .forms import TridiagForm, assemble_stiffness, assemble_weighted_mass, form_value
from .grid import geometric, make_graded_grid
from .weights import WeightSpec

RESIDUAL_TOL = 1e-8
REL_TOL = 1e-12


@dataclass(frozen=True)
class EigenResult:
    lambda_min: float
    iterations: int
    residual: float  # ||K x - lambda M x|| / ||M x||
    truncation: Optional[float] = None
    vector: Optional[np.ndarray] = None

    def as_dict(self) -> dict:
        return {"lambda_min": self.lambda_min, "iterations": self.iterations, "residual": self.residual,
                "truncation": self.truncation}


def sturm_count(d: np.ndarray, off: np.ndarray, m: np.ndarray, x: float) -> int:
    """Number of eigenvalues of K v = lambda M v below x (K = tridiag(off, d, off), M = diag(m)).

    Counts negative pivots of the LDL^T factorization of K - x M; by Sylvester's
    law this equals the count for the scaled matrix M^{-1/2} K M^{-1/2}.
    """
    count = 0
    tiny = np.finfo(float).tiny
    q = d[0] - x * m[0]
    if q < 0:
        count += 1
    off2 = off * off
    for i in range(1, len(d)):
        if q == 0.0:
            q = tiny
        q = d[i] - x * m[i] - off2[i - 1] / q
        if q < 0:
            count += 1
    return count


def _inverse_iteration(d, off, m, lam, iters=4):
    # (K - sigma M) y = M x, solved on the unscaled pencil
    n = len(d)
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[2, :-1] = off
    sigma = lam - max(abs(lam), 1.0) * 1e-13
    ab[1] = d - sigma * m
    x = np.ones(n) / math.sqrt(n)
    for _ in range(iters):
        x = solve_banded((1, 1), ab, m * x, check_finite=False)
        x /= np.linalg.norm(x)
    return x


def smallest_eigenvalue(K: TridiagForm, M: TridiagForm, truncation: Optional[float] = None) -> EigenResult:
    """Smallest lambda of K x = lambda M x with M diagonal and positive.

    Bisection with Sturm counts, then inverse iteration for the vector and a
    residual check on the pencil.
    """
    if K.size != M.size:
        raise ParameterError(f"K and M sizes differ ({K.size} vs {M.size})")
    if np.any(M.offdiag != 0):
        raise ParameterError("M must be diagonal")
    m = np.asarray(M.diag, dtype=float)
    if not np.all(m > 0):
        raise ParameterError(f"M must be positive; entry {int(np.argmin(m))} is {m.min()!r}")
    d, off = np.asarray(K.diag, dtype=float), np.asarray(K.offdiag, dtype=float)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(off))):
        raise NumericalError("stiffness entries are not finite")
    if len(d) == 1:
        lam, iters = float(d[0] / m[0]), 0
    else:
        # Gershgorin discs of M^{-1/2} K M^{-1/2}
        s = 1.0 / np.sqrt(m)
        e = np.abs(off) * s[:-1] * s[1:]
        rad = np.zeros_like(d)
        rad[:-1] += e
        rad[1:] += e
        lo, hi = float(np.min(d / m - rad)), float(np.max(d / m + rad))
        if sturm_count(d, off, m, lo) != 0 or sturm_count(d, off, m, hi) == 0:
            raise NumericalError("Gershgorin bracket does not enclose the smallest eigenvalue")
        # the smallest eigenvalue is usually far below hi; walk the upper end down first
        up = max(abs(lo), 1.0)
        while up < hi and sturm_count(d, off, m, up) == 0:
            up *= 8.0
        hi = min(hi, up)
        iters = 0
        while hi - lo > REL_TOL * max(abs(lo), abs(hi), 1e-300) and iters < 400:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if sturm_count(d, off, m, mid) >= 1:
                hi = mid
            else:
                lo = mid
            iters += 1
        if iters >= 400:
            raise NumericalError("bisection did not converge")
        lam = 0.5 * (lo + hi)
    x = _inverse_iteration(d, off, m, lam) if len(d) > 1 else np.ones(1)
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    Mx = m * x
    res = float(np.linalg.norm(K.matvec(x) - lam * Mx) / np.linalg.norm(Mx))
    if not res <= RESIDUAL_TOL * max(1.0, abs(lam)):
        raise NumericalError(f"eigen residual {res:.3e} above tolerance")
    return EigenResult(lam, iters, res, truncation, x)


def rayleigh_ratio(K: TridiagForm, M: TridiagForm, x: np.ndarray) -> float:
    return form_value(K, x) / form_value(M, x)


# -- truncated best constant ---------------------------------------------------

def _singular_ends(w: WeightSpec) -> str:
    return "".join(e for e, tag in zip("ab", w.ends) if tag in ("inf", "zero"))


def _truncated_ends(w: WeightSpec, eps: float) -> tuple[float, float]:
    span = w.b - w.a
    ends = _singular_ends(w)
    return (w.a + eps * span if "a" in ends else w.a), (w.b - eps * span if "b" in ends else w.b)


def truncated_pencil(w: WeightSpec, eps: float, m: int):
    """Stiffness and Hardy-weight mass on the domain with eps removed at each singular end.

    Dirichlet conditions are imposed at both ends of the truncated interval.  The
    mesh is log-uniform in the distance to each removed end.
    """
    if w.tensor or w.kind not in ("interior", "boundary"):
        raise ParameterError(f"best-constant studies need an interior or boundary radial weight, got {w.kind}")
    if not 0 < eps < 0.25:
        raise ParameterError(f"truncation must lie in (0, 1/4), got {eps}")
    ends = _singular_ends(w)
    a, b = _truncated_ends(w, eps)
    if not ends:
        grid = make_graded_grid(a, b, m)
    elif len(ends) == 2:
        grid = make_graded_grid(a, b, m, geometric("both", (eps / 0.5) ** (2.0 / m)))
    else:
        grid = make_graded_grid(a, b, m, geometric(ends, eps ** (1.0 / m)))
    n = w.jacobian_dim or 1
    one = lambda r: np.ones_like(np.asarray(r, dtype=float))
    K = assemble_stiffness(grid, one, n)
    M = assemble_weighted_mass(grid, lambda r: 4.0 * w.hardy_density(r), n)
    return K, M


def log_range(w: WeightSpec, eps: float) -> float:
    """log(max E / min E) over the truncated domain: its length in the variable log E."""
    a, b = _truncated_ends(w, eps)
    E, _ = w.values(np.array([a, b]), np.array([w.b - a, w.b - b]))
    hi = max(float(E.max()), w.sup_E if math.isfinite(w.sup_E) else 0.0)
    lo = float(E.min())
    if not lo > 0:
        return math.log(1.0 / eps)
    return math.log(hi / lo)


def _three_point(L: np.ndarray, v: np.ndarray, basis, cs: np.ndarray) -> Optional[tuple]:
    """Solve v = C + a basis(L, c) through three points for (C, a, c), scanning c over cs."""
    d1, d2 = v[0] - v[1], v[1] - v[2]

    def gap(c):
        f = basis(L, c)
        return (f[0] - f[1]) / (f[1] - f[2]) - d1 / d2

    gs = np.array([gap(c) for c in cs])
    roots = []
    for i in np.nonzero(np.sign(gs[:-1]) * np.sign(gs[1:]) < 0)[0]:
        roots.append(brentq(gap, cs[i], cs[i + 1], xtol=1e-15, rtol=1e-15))
    if not roots:
        return None
    c = min(roots, key=abs)
    f = basis(L, c)
    a = d1 / (f[0] - f[1])
    return float(v[2] - a * f[2]), float(a), float(c)


FIT_MODELS = ("shifted", "power")


def fit_log_rate(L: Sequence[float], values: Sequence[float], model: str = "shifted") -> dict:
    """Extrapolate C from the last three points as the log-length L grows.

    "shifted":  C + a (L + c)^-2   (Dirichlet ends in the variable log E)
    "power":    C + a L^-k
    """
    if model not in FIT_MODELS:
        raise ParameterError(f"unknown fit model {model!r}; choose from {FIT_MODELS}")
    L = np.asarray(L[-3:], dtype=float)
    v = np.asarray(values[-3:], dtype=float)
    name = {"shifted": "C + a*(L + c)^-2", "power": "C + a*L^-k"}[model]
    fallback = {"model": name, "C": float(v[-1]), "a": 0.0, "c": math.nan, "k": math.nan}
    if not (v[0] > v[1] > v[2]):
        return {**fallback, "note": "values not strictly decreasing; last value reported"}
    if model == "shifted":
        cs = np.concatenate((np.linspace(-0.95 * L.min(), 0.0, 400)[:-1], np.geomspace(1e-6, 100 * L.max(), 400)))
        sol = _three_point(L, v, lambda x, c: (x + c) ** -2.0, cs)
        if sol is None:
            return {**fallback, "note": "no shift fits; last value reported"}
        return {"model": name, "C": sol[0], "a": sol[1], "c": sol[2], "k": 2.0}
    sol = _three_point(L, v, lambda x, k: x ** -k, np.geomspace(1e-3, 20.0, 800))
    if sol is None:
        return {**fallback, "note": "no exponent fits; last value reported"}
    return {"model": name, "C": sol[0], "a": sol[1], "c": 0.0, "k": sol[2]}


@dataclass(frozen=True)
class BestConstant:
    eps: tuple
    C_eps: tuple
    extrapolated: float
    fit: dict
    m: int

    def as_dict(self) -> dict:
        return {"eps": list(self.eps), "C_eps": list(self.C_eps), "extrapolated": self.extrapolated,
                "fit": dict(self.fit), "m": self.m}


def best_constant_estimate(w: WeightSpec, eps_list: Sequence[float], m: int = 4096,
                           model: str = "shifted") -> BestConstant:
    """Smallest Hardy eigenvalue on truncated domains, extrapolated to eps -> 0.

    The rate is logarithmic in eps, so the fit runs in L = log(max E / min E).
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ParameterError("need at least three truncation values")
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ParameterError("truncation values must be strictly decreasing")
    vals = []
    for eps in eps_list:
        try:
            K, M = truncated_pencil(w, eps, m)
            vals.append(smallest_eigenvalue(K, M, truncation=eps).lambda_min)
        except HardyLabError as exc:
            raise type(exc)(f"{exc} [at eps={eps:g}]") from exc
    L = [log_range(w, eps) for eps in eps_list]
    fit = {**fit_log_rate(L, vals, model), "L": L}
    return BestConstant(tuple(eps_list), tuple(vals), fit["C"], fit, m)


# -- eigenvalue bound on subdomains -------------------------------------------

@dataclass(frozen=True)
class EigenWeight:
    """A first Dirichlet eigenpair (E, lambda) on an axial interval."""
    name: str
    E: Callable
    dE: Callable
    lam: float
    a: float
    b: float
    n: int = 1

    def ratio(self, x):
        """|grad E|^2 / E^2."""
        with np.errstate(all="ignore"):
            return self.dE(x) ** 2 / self.E(x) ** 2


def sine_eigenpair() -> EigenWeight:
    return EigenWeight("sine", np.sin, np.cos, 1.0, 0.0, math.pi)


def _ratio_range(ew: EigenWeight, lo: float, hi: float, samples: int = 20001) -> tuple[float, float]:
    x = np.linspace(lo, hi, samples)
    v = ew.ratio(x)
    v = np.where(np.isnan(v), np.inf, v)
    return float(np.min(v)), float(np.max(v))


def eigenvalue_bound_check(ew: EigenWeight, B: tuple, m: int = 2000) -> dict:
    """Compare 4 lambda(B) with (alpha + lambda)^2 / alpha, alpha the inf or sup of |grad E|^2/E^2 on B."""
    lo, hi = float(B[0]), float(B[1])
    if not ew.a <= lo < hi <= ew.b:
        raise ParameterError(f"subinterval {B} must lie inside ({ew.a}, {ew.b})")
    a_low, a_high = _ratio_range(ew, lo, hi)
    lam = ew.lam
    if a_low > lam:
        case, alpha = "i", a_low
    elif lam > a_high:
        case, alpha = "ii", a_high
    else:
        raise ParameterError(f"neither case applies on {B}: inf ratio {a_low:.6g}, sup ratio {a_high:.6g}, "
                             f"lambda {lam:g}")
    if not alpha > 0:
        raise ParameterError(f"ratio bound {alpha} must be positive")
    grid = make_graded_grid(lo, hi, m)
    one = lambda r: np.ones_like(np.asarray(r, dtype=float))
    res = smallest_eigenvalue(assemble_stiffness(grid, one, ew.n), assemble_weighted_mass(grid, one, ew.n))
    lhs = 4.0 * res.lambda_min
    rhs = (alpha + lam) ** 2 / alpha
    return {"B": [lo, hi], "case": case, "alpha_low": a_low, "alpha_high": a_high, "lambda_B": res.lambda_min,
            "lhs": lhs, "rhs": rhs, "satisfied": bool(lhs >= rhs - 1e-6)}
