"""Densities of the form  sum_k c_k z^a_k log^b_k(z/gamma)  with exact range integrals.

Test functions built from powers of E produce integrands that are sums of
such terms.  Their integrals over a range of E-values have closed forms,
which is what lets end panels next to a singular point be closed exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import special

from .errors import DegenerateInputError, ParameterError

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class PowerSum:
    terms: tuple[tuple[float, float, float], ...]
    gamma: float = 1.0
    zmin: float = 0.0  # density vanishes for z < zmin

    @classmethod
    def of(cls, terms: Iterable, gamma: float = 1.0, zmin: float = 0.0) -> "PowerSum":
        clean = tuple((float(c), float(a), float(b)) for c, a, b in terms if c != 0.0)
        if any(b != 0.0 for _, _, b in clean) and not gamma > 0:
            raise ParameterError("log terms need gamma > 0")
        return cls(clean, float(gamma), float(zmin))

    def times_power(self, alpha: float, coef: float = 1.0) -> "PowerSum":
        return PowerSum.of(((coef * c, a + alpha, b) for c, a, b in self.terms), self.gamma, self.zmin)

    def __add__(self, other: "PowerSum") -> "PowerSum":
        return PowerSum.of(self.terms + other.terms, self.gamma, max(self.zmin, other.zmin))

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        with np.errstate(all="ignore"):
            for c, a, b in self.terms:
                term = c * z ** a
                if b:
                    term = term * np.log(z / self.gamma) ** b
                out = out + term
        if self.zmin > 0:
            out = np.where(z > self.zmin, out, 0.0)
        return out

    def at_infinity(self) -> float:
        """Limit of the density as z -> infinity."""
        top = max(((a, b) for _, a, b in self.terms), default=None)
        if top is None:
            return 0.0
        lead = [c for c, a, b in self.terms if (a, b) == top]
        if top[0] < 0 or (top[0] == 0 and top[1] < 0):
            return 0.0
        if top == (0.0, 0.0):
            return float(sum(lead))
        return math.copysign(math.inf, sum(lead))

    def singular_at(self, z: float) -> bool:
        for _, a, b in self.terms:
            if z == 0.0 and a < 0:
                return True
            if b < 0 and z == self.gamma:
                return True
        return False

    def integral(self, z0: float, z1: float) -> float:
        """Integral of the density over z0 <= z <= z1 (z1 may be inf)."""
        if z1 < z0:
            return -self.integral(z1, z0)
        z0 = max(z0, self.zmin)
        if z1 <= z0:
            return 0.0
        return float(sum(c * _term(a, b, z0, z1, self.gamma) for c, a, b in self.terms))


def _power_integral(a: float, z0: float, z1: float) -> float:
    s = a + 1.0
    if s == 0.0:
        if z0 <= 0 or math.isinf(z1):
            raise DegenerateInputError("divergent z^-1 range integral")
        return math.log(z1 / z0)
    if math.isinf(z1):
        if s > 0:
            raise DegenerateInputError(f"z^{a} is not integrable at infinity")
        return -(z0 ** s) / s if z0 > 0 else math.inf
    if z0 == 0.0:
        if s < 0:
            raise DegenerateInputError(f"z^{a} is not integrable at zero")
        return z1 ** s / s
    # expm1 keeps accuracy when s is tiny
    return z0 ** s * math.expm1(s * math.log(z1 / z0)) / s


def _log_integral(a: float, b: float, z0: float, z1: float, gamma: float) -> float:
    # substitute z = gamma e^y:  gamma^(a+1) * int e^{(a+1) y} y^b dy
    y0 = math.log(z0 / gamma)
    y1 = math.log(z1 / gamma) if not math.isinf(z1) else math.inf
    if y0 < 0:
        raise DegenerateInputError("log density used below gamma")
    beta = a + 1.0
    nu = b + 1.0
    if nu <= 0 and y0 == 0.0:
        raise DegenerateInputError("log^b density not integrable at z = gamma")
    scale = gamma ** beta
    if beta < 0 and nu > 0:
        x0, x1 = -beta * y0, -beta * y1
        g = math.gamma(nu) * (-beta) ** (-nu)
        if x1 < nu:
            diff = special.gammainc(nu, x1) - special.gammainc(nu, x0)
        else:
            diff = special.gammaincc(nu, x0) - (special.gammaincc(nu, x1) if not math.isinf(x1) else 0.0)
        return scale * g * float(diff)
    if math.isinf(y1):
        raise DegenerateInputError("log density not integrable at infinity")
    if beta == 0.0 and nu != 0:
        return scale * (y1 ** nu - y0 ** nu) / nu
    # smooth after v = y^nu (nu > 0) or plain Gauss when nu <= 0 and y0 > 0
    if nu > 0:
        v0, v1 = y0 ** nu, y1 ** nu
        v = 0.5 * (v1 - v0) * _NODES + 0.5 * (v1 + v0)
        y = v ** (1.0 / nu)
        vals = np.exp(beta * y) / nu
        return scale * 0.5 * (v1 - v0) * float(_WEIGHTS @ vals)
    y = 0.5 * (y1 - y0) * _NODES + 0.5 * (y1 + y0)
    return scale * 0.5 * (y1 - y0) * float(_WEIGHTS @ (np.exp(beta * y) * y ** b))


def _term(a: float, b: float, z0: float, z1: float, gamma: float) -> float:
    if b == 0.0:
        return _power_integral(a, z0, z1)
    return _log_integral(a, b, z0, z1, gamma)


def binomial_power_sum(p: float, t: float, gamma: float, exponent: float, tol: float = 1e-17,
                       zmin: float = 0.0, max_terms: int = 10000) -> PowerSum:
    """z^exponent * (1 - (gamma/z)^t)^p expanded binomially, valid for z > gamma.

    Terms are kept until |coefficient| * (gamma/zmin)^(t m) drops below tol, so the
    expansion is only used where gamma/z is small.
    """
    ratio = (gamma / zmin) ** t if zmin > 0 else 1.0
    terms = []
    coef = 1.0
    for m in range(max_terms):
        terms.append((coef * (-1) ** m * gamma ** (t * m), exponent - t * m, 0.0))
        if abs(coef) * ratio ** m < tol and m > 0:
            break
        coef = coef * (p - m) / (m + 1)
    return PowerSum.of(terms, 1.0)
