"""Disconjugacy of h'' + (f + 1/(4t^2)) h = 0, best multipliers, Bessel J0/J1 and the Lamb constant.

Zeros are tracked with the Prufer angle theta (tan theta = h/h'), which
increases through every zero of h, so a zero is exactly a crossing of k*pi.

On (gamma, inf) the classifier integrates in log variables where the critical
1/(4t^2) part becomes constant:

    gamma = 0:  s = log t,          h = e^{s/2} w,   w'' + t^2 f(t) w = 0
    gamma > 0:  sigma = log log(t/gamma),  w = e^{sigma/2} W,
                W'' + (u^2 t^2 f(t) - 1/4) W = 0   with u = log(t/gamma)

Because f >= 0, w is concave beyond the horizon; once w' < 0 while w > 0 a
zero must follow, which certifies a conjugate point past the truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError, ParameterError

RTOL = 1e-10
ATOL = 1e-12
MIN_STEP = 1e-13
DEFAULT_HORIZON = 100.0
DEFAULT_SHRINK = 1e-100
DEFAULT_LEVELS = 6
C_FLOOR = 1e-8
U_FLOOR = 1e-6


# -- Prufer integration --------------------------------------------------------

def _prufer(coef: Callable[[float], float], x0: float, x1: float, theta0: float = 0.0, stop_at: Optional[float] = math.pi):
    """Integrate theta' = cos^2 theta + coef(x) sin^2 theta on [x0, x1]."""

    def rhs(x, th):
        c, s = math.cos(th[0]), math.sin(th[0])
        return [c * c + coef(x) * s * s]

    events = None
    if stop_at is not None:
        def hit(x, th):
            return th[0] - stop_at
        hit.terminal = True
        hit.direction = 1
        events = hit
    span = abs(x1 - x0)
    sol = solve_ivp(rhs, (x0, x1), [theta0], method="DOP853", rtol=RTOL, atol=ATOL, events=events,
                    first_step=min(1e-6 * max(span, 1e-300), max(span, 1e-300)) if span > 0 else None)
    if sol.status == -1:
        at = float(sol.t[-1]) if len(sol.t) else x0
        raise NumericalError(f"phase integration failed near x={at!r}: {sol.message}")
    zero = None
    if stop_at is not None and len(sol.t_events[0]):
        zero = float(sol.t_events[0][0])
    return float(sol.y[0, -1]), zero, int(sol.nfev)


def disconjugate(q: Callable, a: float, b: float, variable: str = "t") -> dict:
    """Is h'' + q h = 0 disconjugate on (a, b]?  Starts from h(a) = 0, h'(a) = 1.

    With variable="log" the phase is integrated in s = log t (needs a > 0),
    which keeps Euler-type coefficients bounded.
    """
    if not a < b:
        raise ParameterError(f"need a < b, got ({a}, {b})")
    probe = np.linspace(a, b, 65)[1:-1]
    with np.errstate(all="ignore"):
        vals = np.asarray([q(float(t)) for t in probe], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ParameterError("q is not finite on (a, b)")
    if variable == "t":
        theta, zero, nfev = _prufer(lambda t: float(q(t)), a, b)
        where = zero
    elif variable == "log":
        if not a > 0:
            raise ParameterError("the log variable needs a > 0")
        theta, zero, nfev = _prufer(lambda s: math.exp(2 * s) * float(q(math.exp(s))) - 0.25, math.log(a), math.log(b))
        where = math.exp(zero) if zero is not None else None
    else:
        raise ParameterError(f"unknown variable {variable!r}")
    return {"disconjugate": zero is None, "first_zero_after_a": where, "theta_end": theta, "nfev": nfev}


def zero_count(q: Callable, a: float, b: float) -> int:
    """Zeros of the solution with h(a) = 0, h'(a) = 1 in (a, b], from the final Prufer angle."""
    theta, _, _ = _prufer(lambda t: float(q(t)), a, b, stop_at=None)
    return int(math.floor(theta / math.pi + 1e-12))


# -- potential profiles --------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """A nonnegative f on (gamma, inf) with t^2 f(t) also available from u = log(t/gamma)."""
    name: str
    c: float
    f: Callable[[float], float]
    t2f: Optional[Callable[[float, float], float]] = None  # (u, gamma) -> t^2 f(t)
    u2t2f: Optional[Callable[[float, float], float]] = None  # (u, gamma) -> u^2 t^2 f(t)

    def __call__(self, t: float) -> float:
        return self.c * self.f(t)

    def t2f_log(self, u: float, gamma: float) -> float:
        if self.c == 0.0:
            return 0.0
        if self.t2f is not None:
            return self.c * self.t2f(u, gamma)
        t = gamma * math.exp(u) if gamma > 0 else math.exp(u)
        if t == 0.0:
            return 0.0
        if math.isinf(t):
            return self.c * _limit_t2f(self.f)
        return self.c * t * t * self.f(t)

    def weighted_log(self, u: float, gamma: float) -> float:
        """u^2 t^2 f(t), the sigma-variable coefficient before the -1/4."""
        if self.c == 0.0:
            return 0.0
        if self.u2t2f is not None:
            return self.c * self.u2t2f(u, gamma)
        if gamma > 0 and self.t2f is None:
            # t = gamma e^u loses digits of t - gamma as u -> 0; hold the coefficient below U_FLOOR
            u = max(u, U_FLOOR)
        return 0.0 if u == 0.0 else u * u * self.t2f_log(u, gamma)

    def scaled(self, k: float) -> "Profile":
        return Profile(self.name, self.c * k, self.f, self.t2f, self.u2t2f)

    def describe(self) -> dict:
        return {"name": self.name, "c": self.c}


def _limit_t2f(f) -> float:
    val = 1e300 ** 2 * f(1e300)
    return val if math.isfinite(val) else math.inf


def _exp_neg(t):
    return math.exp(-t) if t < 800 else 0.0


def _inv_sq_log_t2f(u, gamma):
    lt = u + math.log(gamma) if gamma > 0 else u
    return 1.0 / (lt * lt)


def _inv_sq_log_u2t2f(u, gamma):
    lg = math.log(gamma) if gamma > 0 else 0.0
    return 1.0 if lg == 0.0 else (u / (u + lg)) ** 2


PROFILES = {
    "zero": (lambda t: 0.0, lambda u, g: 0.0, None),
    "const": (lambda t: 1.0, None, None),
    "inv_sq": (lambda t: 1.0 / (t * t), lambda u, g: 1.0, None),
    "inv_sq_log": (lambda t: 1.0 / (t * t * math.log(t) ** 2), _inv_sq_log_t2f, _inv_sq_log_u2t2f),
    "inv_one_plus": (lambda t: 1.0 / (1.0 + t), None, None),
    "exp_decay": (_exp_neg, None, None),
}


def profile(name: str, c: float = 1.0) -> Profile:
    if name not in PROFILES:
        raise ParameterError(f"unknown potential profile {name!r}; choose from {sorted(PROFILES)}")
    if not (math.isfinite(c) and c >= 0):
        raise ParameterError(f"profile multiplier must be finite and >= 0, got {c}")
    f, t2f, u2t2f = PROFILES[name]
    return Profile(name, float(c), f, t2f, u2t2f)


def as_profile(f) -> Profile:
    if isinstance(f, Profile):
        return f
    if callable(f):
        return Profile("callable", 1.0, lambda t: float(f(t)))
    raise ParameterError("f must be a Profile or a callable")


# -- classification ------------------------------------------------------------

@dataclass(frozen=True)
class PotentialVerdict:
    admissible: bool
    gamma: float
    truncations: list
    first_conjugate_point: list
    c_star: Optional[float] = None
    phase_steps: dict = field(default_factory=dict)
    profile: dict = field(default_factory=dict)
    scope: str = "up to horizon"

    def as_dict(self) -> dict:
        return {"admissible": self.admissible, "gamma": self.gamma, "scope": self.scope,
                "truncations": self.truncations, "first_conjugate_point": self.first_conjugate_point,
                "c_star": self.c_star, "phase_steps": self.phase_steps, "profile": self.profile}


def _level(f: Profile, gamma: float, log_delta: float, T: float) -> dict:
    """One truncation (gamma + delta, T); delta = exp(log_delta)."""
    if gamma == 0.0:
        x0, x1 = log_delta, math.log(T)
        coef = lambda s: f.t2f_log(s, 0.0)
        to_t = lambda s: math.exp(s) if s < 709 else math.inf
        critical = 0.5 * math.pi  # w' < 0
    else:
        ratio = math.exp(log_delta) / gamma if log_delta < 700 else math.inf
        u0 = math.log1p(ratio) if ratio > 1e-8 else math.exp(log_delta - math.log(gamma))
        x0 = math.log(u0) if u0 > 0 else log_delta - math.log(gamma)
        x1 = math.log(math.log(T / gamma))

        def coef(sig):
            return f.weighted_log(math.exp(sig), gamma) - 0.25

        def to_t(sig):
            u = math.exp(sig)
            return gamma * math.exp(u) if u < 709 else math.inf
        critical = math.pi - math.atan(2.0)  # W'/W < -1/2, i.e. w' < 0
    if not x0 < x1:
        raise ParameterError("truncation is empty: horizon must exceed gamma + delta")
    theta, zero, nfev = _prufer(coef, x0, x1)
    a_t = gamma + math.exp(log_delta) if log_delta > -745 else gamma
    out = {"a": a_t, "log_delta": log_delta, "b": T, "theta_end": theta, "nfev": nfev, "variable_range": [x0, x1]}
    if zero is not None:
        out.update(conjugate=True, evidence="zero", location=to_t(zero), location_variable=zero)
    elif theta > critical:
        # concave beyond T with negative slope: a zero exists past the horizon
        out.update(conjugate=True, evidence="tail", location=T, location_variable=x1)
    else:
        out.update(conjugate=False, evidence=None, location=None, location_variable=None)
    return out


def classify_potential(f, gamma: float = 0.0, horizon: float = DEFAULT_HORIZON, shrink: float = DEFAULT_SHRINK,
                       levels: int = DEFAULT_LEVELS, stop_early: bool = False) -> PotentialVerdict:
    """Test h'' + (f + 1/(4t^2)) h = 0 on (gamma + shrink^m, horizon 2^m), m = 0..levels."""
    f = as_profile(f)
    if not gamma >= 0 or not math.isfinite(gamma):
        raise ParameterError(f"gamma must be finite and >= 0, got {gamma}")
    if not horizon > gamma:
        raise ParameterError(f"horizon {horizon} must exceed gamma {gamma}")
    if not 0 < shrink < 1:
        raise ParameterError(f"shrink must lie in (0, 1), got {shrink}")
    if int(levels) != levels or levels < 0:
        raise ParameterError("levels must be a nonnegative integer")
    for t in np.geomspace(max(gamma, 1e-6) + 1e-3, horizon, 17):
        v = f(float(t))
        if not (math.isfinite(v) and v >= 0):
            raise ParameterError(f"f must be finite and >= 0; f({t:g}) = {v!r}")
    rows, points, nfev = [], [], 0
    for m in range(int(levels) + 1):
        row = _level(f, gamma, m * math.log(shrink), horizon * 2.0 ** m)
        nfev += row["nfev"]
        rows.append({k: row[k] for k in ("a", "log_delta", "b")})
        points.append({k: row[k] for k in ("conjugate", "evidence", "location", "location_variable", "theta_end")})
        if row["conjugate"] and stop_early:
            break
    admissible = not any(p["conjugate"] for p in points)
    return PotentialVerdict(admissible, gamma, rows, points, None, {"nfev": nfev, "levels": len(rows)},
                            f.describe())


def best_constant_c(f, gamma: float = 0.0, rel_tol: float = 1e-4, c_max: float = 1e8, **kw) -> float:
    """sup{c : c f admissible}, by bisection; 0 when no c >= 1e-8 is admissible."""
    f = as_profile(f)
    if f.c == 0.0 or all(f(float(t)) == 0.0 for t in np.geomspace(gamma + 1e-3, gamma + 1e3, 25)):
        return 0.0
    ok = lambda c: classify_potential(f.scaled(c), gamma, stop_early=True, **kw).admissible
    if not ok(C_FLOOR):
        return 0.0
    hi = 1.0
    while ok(hi):
        hi *= 4.0
        if hi > c_max:
            return math.inf
    lo = C_FLOOR if hi == 1.0 else hi / 4.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def euler_threshold(a: float = 1e-150, b: float = 1e150, tol: float = 1e-10) -> dict:
    """Smallest c with c/t^2 not disconjugate on (a, b), by bisection, next to 1/4 + (pi/log(b/a))^2."""
    oracle = 0.25 + (math.pi / math.log(b / a)) ** 2
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if disconjugate(lambda t, c=mid: c / (t * t), a, b, variable="log")["disconjugate"]:
            lo = mid
        else:
            hi = mid
    return {"threshold": hi, "oracle": oracle, "a": a, "b": b}


def maz_ja_gap_check(cs: Sequence[float] = (1e-3, 1e-2), **kw) -> dict:
    """Positive half-space candidates f(t) of distance to the boundary; none should be admissible."""
    rows = []
    for name in ("const", "inv_one_plus", "exp_decay"):
        for c in cs:
            v = classify_potential(profile(name, c), 0.0, **kw)
            where = next((p for p in v.first_conjugate_point if p["conjugate"]), None)
            rows.append({"profile": name, "c": c, "admissible": v.admissible,
                         "evidence": where["evidence"] if where else None,
                         "location": where["location"] if where else None})
    control = classify_potential(profile("zero"), 0.0, **kw).admissible
    return {"candidates": rows, "all_not_admissible": not any(r["admissible"] for r in rows),
            "zero_admissible": control}


# -- Bessel functions and the Lamb constant -----------------------------------

SERIES_LIMIT = 20.0
X_MAX = 50.0


def _series(order: int, x: float) -> float:
    with localcontext() as ctx:
        ctx.prec = 60
        h = Decimal(x) / 2
        h2 = h * h
        term = Decimal(1) if order == 0 else h
        total = term
        k = 0
        tiny = Decimal("1e-40")
        while True:
            k += 1
            term = -term * h2 / (k * (k + order))
            total += term
            if abs(term) < tiny and k > 2:
                break
        return float(total)


def _hankel(order: int, x: float) -> float:
    mu = 4.0 * order * order
    P, Q = 1.0, 0.0
    term = 1.0
    z = 8.0 * x
    best = math.inf
    k = 1
    while True:
        term *= (mu - (2 * k - 1) ** 2) / (k * z)
        if abs(term) >= best:
            break
        best = abs(term)
        if k % 2:
            Q += term if (k // 2) % 2 == 0 else -term
        else:
            P += -term if (k // 2) % 2 else term
        if best < 1e-18:
            break
        k += 1
    chi = x - (0.5 * order + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (P * math.cos(chi) - Q * math.sin(chi))


def bessel_j(order: int, x: float) -> float:
    """J_0 or J_1 at 0 <= x <= 50: power series up to 20, Hankel expansion beyond."""
    if order not in (0, 1):
        raise ParameterError(f"order must be 0 or 1, got {order}")
    x = float(x)
    if not 0 <= x <= X_MAX:
        raise ParameterError(f"x must lie in [0, {X_MAX:g}], got {x}")
    if x <= SERIES_LIMIT:
        return _series(order, x)
    return _hankel(order, x)


def lamb_function(t: float) -> float:
    return bessel_j(0, t) - 2.0 * t * bessel_j(1, t)


def lamb_constant(tol: float = 1e-12) -> float:
    """First positive zero of J0(t) - 2t J1(t), by bisection on (0.1, 2)."""
    lo, hi = 0.1, 2.0
    glo = lamb_function(lo)
    if not (glo > 0 and lamb_function(hi) < 0):
        raise NumericalError("Lamb bracket lost its sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = lamb_function(mid)
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def aw_profile_check(M: float, samples: int = 1000) -> dict:
    """f(t) = J0(sqrt(lam) t) with lam = lamb^2/M^2 on (0, M]: Bessel residual and l = f'/f + 1/(2t)."""
    if not (math.isfinite(M) and M > 0):
        raise ParameterError(f"M must be positive, got {M}")
    lam0 = lamb_constant()
    k = lam0 / M
    lam = k * k
    f = lambda t: bessel_j(0, abs(k * t))
    h = 1e-3 * M
    worst = 0.0
    l_min = math.inf
    for i in range(1, samples + 1):
        t = M * i / samples
        fm2, fm1, f0, fp1, fp2 = (f(t + j * h) for j in (-2, -1, 0, 1, 2))
        d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
        d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
        worst = max(worst, abs((-d2 - d1 / t) / f0 - lam))
        l_min = min(l_min, -k * bessel_j(1, k * t) / f0 + 0.5 / t)
    l_at_M = -k * bessel_j(1, lam0) / bessel_j(0, lam0) + 0.5 / M
    return {"M": M, "lambda": lam, "bessel_residual_max": worst, "l_min": l_min, "l_at_M": l_at_M}
