"""Closed-form weights E, their Hardy densities and measures.

A weight lives on a radial or axial interval (a, b).  Each end is tagged with
how E behaves there ("inf", "zero", "tail" for a truncated exterior, or None)
so integrators know where end panels must be closed analytically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import CatalogError, DomainError, IntegrationError, PairingError, ParameterError
from .grid import Grid1D, geometric, integrate, make_graded_grid, sphere_area
from .powersum import PowerSum

Fn = Callable[..., np.ndarray]

KINDS = ("interior", "boundary", "neumann", "exterior", "annular")
GEOMETRIES = ("ball-radial", "interval-axial", "exterior-radial", "annulus-radial", "slab-axial", "cone-tensor")


@dataclass(frozen=True)
class MeasureDescriptor:
    kind: str  # dirac | surface | volume | line | zero | transformed
    total_mass: float
    point: float = 0.0
    mass: float = 0.0
    areal_density: float = 0.0
    density: Optional[Fn] = None
    base: Optional["MeasureDescriptor"] = None
    note: str = ""
    density_b: Optional[Fn] = None  # volume density as a function of s = b - r

    def __post_init__(self):
        if not self.total_mass >= 0:
            raise CatalogError(f"measure total mass must be >= 0, got {self.total_mass}")
        if self.mass < 0 or self.areal_density < 0:
            raise CatalogError("point and surface masses must be nonnegative")

    def describe(self) -> dict:
        out = {"kind": self.kind, "total_mass": self.total_mass}
        if self.kind == "dirac":
            out.update(point=self.point, mass=self.mass)
        if self.kind == "surface":
            out.update(radius=self.point, areal_density=self.areal_density)
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class BoundaryFlux:
    """Normal derivative of E on a spherical boundary piece, outward from the domain."""
    radius: float
    normal_derivative: float
    area: float


@dataclass(frozen=True, eq=False)
class WeightSpec:
    name: str
    kind: str
    n: int
    a: float
    b: float
    geometry: str
    E: Fn
    dE: Optional[Fn]  # signed radial derivative (None for the tensor geometry)
    gradE: Fn
    hardy_density: Fn
    measure: MeasureDescriptor
    gamma: float
    sup_E: float
    ends: tuple = (None, None)
    params: dict = field(default_factory=dict)
    jacobian_dim: int = 0  # dimension whose sphere area weights radial integrals; 0 = axial
    boundary_flux: Optional[BoundaryFlux] = None
    metadata: dict = field(default_factory=dict)
    E_b: Optional[Fn] = None  # E and |E'| as functions of the distance s = b - r
    gradE_b: Optional[Fn] = None
    screening: float = 0.0  # c in  -Lap E + c E = mu  away from the boundary

    def values(self, r, s=None):
        """E and |grad E| at r; where s = b - r is supplied and small, use the distance form."""
        r = np.asarray(r, dtype=float)
        with np.errstate(all="ignore"):
            E, g = self.E(r), self.gradE(r)
            if s is not None and self.E_b is not None:
                near = np.asarray(s) < 0.5 * (self.b - self.a)
                if near.any():
                    E = np.where(near, self.E_b(s), E)
                    g = np.where(near, self.gradE_b(s), g)
        return np.asarray(E, dtype=float), np.asarray(g, dtype=float)

    def jacobian(self, r):
        r = np.asarray(r, dtype=float)
        if self.jacobian_dim == 0:
            return np.ones_like(r)
        d = self.jacobian_dim
        return sphere_area(d) * r ** (d - 1)

    @property
    def tensor(self) -> bool:
        return self.geometry == "cone-tensor"

    def describe(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "n": self.n,
            "domain": [self.a, self.b],
            "geometry": self.geometry,
            "gamma": self.gamma,
            "sup_E": self.sup_E,
            "params": dict(self.params),
            "measure": self.measure.describe(),
        }


def _hardy(E: Fn, g: Fn) -> Fn:
    def h(*x):
        with np.errstate(all="ignore"):
            return g(*x) ** 2 / (4.0 * E(*x) ** 2)
    return h


def _abs(f: Fn) -> Fn:
    return lambda *x: np.abs(f(*x))


def _num(params: dict, key: str, default=None, *, integer=False, lo=None, hi=None, lo_open=False):
    if key not in params:
        if default is None:
            raise CatalogError(f"missing parameter {key!r}")
        value = default
    else:
        value = params[key]
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise CatalogError(f"parameter {key!r} must be numeric, got {params[key]!r}") from None
    if not math.isfinite(value):
        raise CatalogError(f"parameter {key!r} must be finite")
    if integer:
        if value != int(value):
            raise CatalogError(f"parameter {key!r} must be an integer")
        value = int(value)
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise CatalogError(f"parameter {key!r}={value} below allowed range")
    if hi is not None and value > hi:
        raise CatalogError(f"parameter {key!r}={value} above allowed range")
    return value


def _newton_like(name, n_eff, R, n_report, extra=None):
    c = float(n_eff - 2)
    E = lambda r: np.asarray(r, dtype=float) ** (2 - n_eff)
    dE = lambda r: -c * np.asarray(r, dtype=float) ** (1 - n_eff)
    gradE = _abs(dE)
    hardy = lambda r: c * c / (4.0 * np.asarray(r, dtype=float) ** 2)
    mass = c * sphere_area(n_eff)
    measure = MeasureDescriptor("dirac", mass, point=0.0, mass=mass)
    return WeightSpec(name, "interior", n_report, 0.0, R, "ball-radial", E, dE, gradE, hardy, measure,
                      gamma=R ** (2 - n_eff), sup_E=math.inf, ends=("inf", None),
                      params=extra or {}, jacobian_dim=n_eff)


def _newton(p):
    n = _num(p, "n", 3, integer=True, lo=3)
    R = _num(p, "R", 1.0, lo=0, lo_open=True)
    return _newton_like("newton", n, R, n, {"n": n, "R": R})


def _distance_power(p):
    k = _num(p, "k", 3, integer=True, lo=3)
    n = _num(p, "n", k, integer=True, lo=k)
    R = _num(p, "R", 1.0, lo=0, lo_open=True)
    w = _newton_like("distance_power", k, R, n, {"k": k, "n": n, "R": R})
    note = "mass per unit area of the flat submanifold; radial variable is the distance to it"
    return replace(w, measure=replace(w.measure, note=note))


def _log2d(p):
    R = _num(p, "R", 1.0, lo=0, lo_open=True)
    radius = _num(p, "radius", R, lo=0, lo_open=True, hi=R)
    E = lambda r: -np.log1p((np.asarray(r, dtype=float) - R) / R)
    dE = lambda r: -1.0 / np.asarray(r, dtype=float)
    hardy = _hardy(E, dE)
    mass = 2.0 * math.pi
    measure = MeasureDescriptor("dirac", mass, point=0.0, mass=mass)
    end_b = "zero" if radius == R else None
    Eb = lambda s: -np.log1p((radius - R - np.asarray(s, dtype=float)) / R)
    gb = lambda s: 1.0 / (radius - np.asarray(s, dtype=float))
    return WeightSpec("log2d", "interior", 2, 0.0, radius, "ball-radial", E, dE, _abs(dE), hardy, measure,
                      gamma=math.log(R / radius), sup_E=math.inf, ends=("inf", end_b),
                      params={"R": R, "radius": radius}, jacobian_dim=2, E_b=Eb, gradE_b=gb)


def _ball_boundary(p):
    n = _num(p, "n", 3, integer=True, lo=2)
    E = lambda r: 1.0 - np.asarray(r, dtype=float)
    dE = lambda r: -np.ones_like(np.asarray(r, dtype=float))
    dens = lambda r: (n - 1) / np.asarray(r, dtype=float)
    measure = MeasureDescriptor("volume", sphere_area(n), density=dens)
    return WeightSpec("ball_boundary", "boundary", n, 0.0, 1.0, "ball-radial", E, dE, _abs(dE), _hardy(E, dE),
                      measure, gamma=0.0, sup_E=1.0, ends=(None, "zero"), params={"n": n}, jacobian_dim=n,
                      E_b=lambda s: np.asarray(s, dtype=float), gradE_b=lambda s: np.ones_like(np.asarray(s, dtype=float)))


def _interval_boundary(p):
    E = lambda x: np.asarray(x, dtype=float) * (1.0 - np.asarray(x, dtype=float))
    dE = lambda x: 1.0 - 2.0 * np.asarray(x, dtype=float)
    dens = lambda x: 2.0 * np.ones_like(np.asarray(x, dtype=float))
    measure = MeasureDescriptor("volume", 2.0, density=dens)
    return WeightSpec("interval_boundary", "boundary", 1, 0.0, 1.0, "interval-axial", E, dE, _abs(dE),
                      _hardy(E, dE), measure, gamma=0.0, sup_E=0.25, ends=("zero", "zero"),
                      E_b=lambda s: np.asarray(s, dtype=float) * (1.0 - np.asarray(s, dtype=float)),
                      gradE_b=lambda s: np.abs(1.0 - 2.0 * np.asarray(s, dtype=float)))


def _halfspace(p):
    L = _num(p, "L", 1.0, lo=0, lo_open=True)
    E = lambda x: np.asarray(x, dtype=float)
    dE = lambda x: np.ones_like(np.asarray(x, dtype=float))
    measure = MeasureDescriptor("zero", 0.0)
    return WeightSpec("halfspace", "boundary", 1, 0.0, L, "slab-axial", E, dE, _abs(dE), _hardy(E, dE), measure,
                      gamma=0.0, sup_E=L, ends=("zero", None), params={"L": L})


def _neumann_ball3(p):
    E = lambda r: np.exp(np.asarray(r, dtype=float)) / np.asarray(r, dtype=float)
    dE = lambda r: np.exp(np.asarray(r, dtype=float)) * (np.asarray(r, dtype=float) - 1.0) / np.asarray(r, dtype=float) ** 2
    hardy = lambda r: (1.0 - np.asarray(r, dtype=float)) ** 2 / (4.0 * np.asarray(r, dtype=float) ** 2)
    stated = 4.0 * math.pi ** 2
    note = ("stated point mass 4*pi^2; mass balance of -Lap E + E gives 4*pi, "
            "the value never enters a computation and the measured mass is reported")
    measure = MeasureDescriptor("dirac", stated, point=0.0, mass=stated, note=note)
    return WeightSpec("neumann_ball3", "neumann", 3, 0.0, 1.0, "ball-radial", E, dE, _abs(dE), hardy, measure,
                      gamma=math.e, sup_E=math.inf, ends=("inf", None), jacobian_dim=3, screening=1.0,
                      metadata={"stated_mass": stated, "mass_balance": 4.0 * math.pi})


def _slab_sine(p):
    E = lambda x: np.sin(np.asarray(x, dtype=float))
    dE = lambda x: np.cos(np.asarray(x, dtype=float))
    dens = lambda x: np.sin(np.asarray(x, dtype=float))
    measure = MeasureDescriptor("volume", 2.0, density=dens, density_b=dens)
    return WeightSpec("slab_sine", "boundary", 1, 0.0, math.pi, "slab-axial", E, dE, _abs(dE), _hardy(E, dE),
                      measure, gamma=0.0, sup_E=1.0, ends=("zero", "zero"),
                      E_b=lambda s: np.sin(np.asarray(s, dtype=float)), gradE_b=lambda s: np.abs(np.cos(np.asarray(s, dtype=float))))


def _exterior_newton(p):
    n = _num(p, "n", 3, integer=True, lo=3)
    R_out = _num(p, "R_out", 1e3, lo=1.0, lo_open=True)
    w = _newton_like("exterior_newton", n, R_out, n, {"n": n, "R_out": R_out})
    flux = BoundaryFlux(1.0, float(n - 2), sphere_area(n))  # d/dnu with nu = -r_hat
    return replace(w, kind="exterior", a=1.0, geometry="exterior-radial", measure=MeasureDescriptor("zero", 0.0),
                   gamma=0.0, sup_E=1.0, ends=(None, "tail"), boundary_flux=flux)


def _annulus_log(p):
    R = _num(p, "R", 1.0, lo=0, lo_open=True)
    r0 = _num(p, "r0", 0.5 * R, lo=0, lo_open=True)
    if not r0 < R:
        raise CatalogError("annulus needs r0 < R")
    E = lambda r: -np.log1p((np.asarray(r, dtype=float) - R) / R)
    dE = lambda r: -1.0 / np.asarray(r, dtype=float)
    # outward from the removed inner disk: nu = +r_hat
    flux = BoundaryFlux(r0, -1.0 / r0, 2.0 * math.pi * r0)
    return WeightSpec("annulus_log", "annular", 2, r0, R, "annulus-radial", E, dE, _abs(dE), _hardy(E, dE),
                      MeasureDescriptor("zero", 0.0), gamma=0.0, sup_E=math.log(R / r0), ends=(None, "zero"),
                      params={"r0": r0, "R": R}, jacobian_dim=2, boundary_flux=flux,
                      E_b=lambda s: -np.log1p(-np.asarray(s, dtype=float) / R),
                      gradE_b=lambda s: 1.0 / (R - np.asarray(s, dtype=float)))


def _exp_phi(p):
    n = _num(p, "n", 3, integer=True, lo=1)
    t = _num(p, "t", 1.0, lo=0, lo_open=True, hi=float(n * n))
    phi = lambda r: (1.0 - np.asarray(r, dtype=float) ** 2) / (2.0 * n)
    E = lambda r: np.expm1(t * phi(r))
    dE = lambda r: -t * np.exp(t * phi(r)) * np.asarray(r, dtype=float) / n
    dens = lambda r: t * np.exp(t * phi(r)) * (1.0 - t * np.asarray(r, dtype=float) ** 2 / n ** 2)
    geometry = "ball-radial" if n > 1 else "slab-axial"
    total = sphere_area(n) * t / n if n > 1 else t
    measure = MeasureDescriptor("volume", total, density=dens)
    return WeightSpec("exp_phi", "boundary", n, 0.0, 1.0, geometry, E, dE, _abs(dE), _hardy(E, dE), measure,
                      gamma=0.0, sup_E=math.expm1(t / (2.0 * n)), ends=(None, "zero"), params={"n": n, "t": t},
                      jacobian_dim=n if n > 1 else 0,
                      E_b=lambda s: np.expm1(t * np.asarray(s, dtype=float) * (2.0 - np.asarray(s, dtype=float)) / (2.0 * n)),
                      gradE_b=lambda s: np.abs(dE(1.0 - np.asarray(s, dtype=float))))


def _cone2d(p):
    L = _num(p, "L", 1.0, lo=0, lo_open=True)
    E = lambda x, y: np.minimum(x, y)
    gradE = lambda x, y: np.ones_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    dens = lambda s: math.sqrt(2.0) * np.ones_like(np.asarray(s, dtype=float))
    note = "line density sqrt(2) on the diagonal x1 = x2 (arclength), from the jump of the normal derivative"
    measure = MeasureDescriptor("line", 2.0 * L, density=dens, note=note)
    return WeightSpec("cone2d", "boundary", 2, 0.0, L, "cone-tensor", E, None, gradE, _hardy(E, gradE), measure,
                      gamma=0.0, sup_E=L, ends=("zero", None), params={"L": L})


_BUILDERS = {
    "newton": _newton,
    "log2d": _log2d,
    "ball_boundary": _ball_boundary,
    "interval_boundary": _interval_boundary,
    "distance_power": _distance_power,
    "halfspace": _halfspace,
    "neumann_ball3": _neumann_ball3,
    "slab_sine": _slab_sine,
    "exterior_newton": _exterior_newton,
    "annulus_log": _annulus_log,
    "exp_phi": _exp_phi,
    "cone2d": _cone2d,
}

CATALOG_NAMES = tuple(_BUILDERS)

_ALLOWED = {
    "newton": {"n", "R"}, "log2d": {"R", "radius"}, "ball_boundary": {"n"}, "interval_boundary": set(),
    "distance_power": {"k", "n", "R"}, "halfspace": {"L"}, "neumann_ball3": set(), "slab_sine": set(),
    "exterior_newton": {"n", "R_out"}, "annulus_log": {"r0", "R"}, "exp_phi": {"n", "t"}, "cone2d": {"L"},
}


def catalog(name: str, params: Optional[dict] = None, **kw) -> WeightSpec:
    """Build a catalog weight, e.g. ``catalog("newton", n=3, R=1)``."""
    params = {**(params or {}), **kw}
    if name not in _BUILDERS:
        raise CatalogError(f"unknown weight {name!r}; choose from {', '.join(CATALOG_NAMES)}")
    extra = set(params) - _ALLOWED[name]
    if extra:
        raise CatalogError(f"weight {name!r} does not take parameter(s) {sorted(extra)}")
    return _BUILDERS[name](params)


def sample_points(w: WeightSpec, count: int, rng: np.random.Generator):
    """Random interior points, as an argument tuple for the weight's evaluators."""
    hi = w.b if math.isfinite(w.b) else w.a + 10.0
    if w.tensor:
        return (rng.uniform(w.a, hi, count), rng.uniform(w.a, hi, count))
    return (w.a + (hi - w.a) * rng.uniform(1e-6, 1 - 1e-6, count),)


def transform(w: WeightSpec, f: Fn, f1: Fn, f2: Fn, samples: int = 512) -> WeightSpec:
    """Weight f(E) with potential density and measure term kept as metadata."""
    if w.tensor:
        raise ParameterError("transform is only available for radial and axial weights")
    probe = np.linspace(w.a, w.b if math.isfinite(w.b) else w.a + 10.0, samples + 2)[1:-1]
    with np.errstate(all="ignore"):
        fz = np.asarray(f(w.E(probe)), dtype=float)
    bad = ~(fz > 0)
    if bad.any():
        raise DomainError(f"f(E) must be positive; fails at r={probe[np.argmax(bad)]!r}")

    E2 = lambda r: f(w.E(r))
    dE2 = lambda r: f1(w.E(r)) * w.dE(r)
    grad2 = lambda r: np.abs(f1(w.E(r))) * w.gradE(r)

    def potential(r):
        z = w.E(r)
        return w.gradE(r) ** 2 * (f1(z) ** 2 / (4.0 * f(z) ** 2) - f2(z) / (2.0 * f(z)))

    def measure_factor(r):
        z = w.E(r)
        return f1(z) / f(z)

    vol = lambda r: -f2(w.E(r)) * w.gradE(r) ** 2
    measure = MeasureDescriptor("transformed", math.inf, density=vol, base=w.measure,
                                note="-f''(E)|grad E|^2 dx + f'(E) mu")
    meta = {**w.metadata, "potential_density": potential, "measure_factor": measure_factor, "base": w, "f1": f1}
    sup = float(f(w.sup_E)) if math.isfinite(w.sup_E) else math.inf
    Eb = gb = None
    if w.E_b is not None:
        Eb = lambda s: f(w.E_b(s))
        gb = lambda s: np.abs(f1(w.E_b(s))) * w.gradE_b(s)
    out = replace(w, name=f"f({w.name})", E=E2, dE=dE2, gradE=grad2, hardy_density=_hardy(E2, grad2),
                  measure=measure, sup_E=sup, metadata=meta, E_b=Eb, gradE_b=gb)
    try:
        total = measure_pairing(out, lambda r: np.ones_like(np.asarray(r, dtype=float)), default_grid(w, 2048))
    except (PairingError, IntegrationError):
        total = math.inf
    if not total >= 0:
        total = math.inf  # signed measures are allowed here; report the mass as unknown
    return replace(out, measure=replace(measure, total_mass=total))


def default_grid(w: WeightSpec, m: int = 4096, q: float = 0.85, extra_ends: str = "") -> Grid1D:
    """Grid on the weight's interval, graded toward ends where E or a density is singular."""
    want = {e for e, tag in zip("ab", w.ends) if tag in ("inf", "zero")} | set(extra_ends)
    if w.geometry == "exterior-radial":
        want.add("a")
    if w.tensor or not want:
        return make_graded_grid(w.a, w.b, m)
    toward = "both" if want == {"a", "b"} else want.pop()
    return make_graded_grid(w.a, w.b, m, geometric(toward, q))


def measure_pairing(w: WeightSpec, g: Fn, grid: Grid1D) -> float:
    """Integral of g against the weight's measure."""
    return _pair(w.measure, w, g, grid)


def _pair(m: MeasureDescriptor, w: WeightSpec, g: Fn, grid: Grid1D) -> float:
    if m.kind == "zero":
        return 0.0
    if m.kind in ("dirac", "surface"):
        with np.errstate(all="ignore"):
            val = float(np.asarray(g(np.array([m.point])), dtype=float).ravel()[0])
        if not math.isfinite(val):
            raise PairingError(f"test density is not finite on the support r={m.point}")
        if m.kind == "dirac":
            return m.mass * val
        return m.areal_density * sphere_area(w.jacobian_dim or 1) * m.point ** max(w.jacobian_dim - 1, 0) * val
    try:
        if m.kind == "volume":
            return integrate(grid, lambda r: g(r) * m.density(r) * w.jacobian(r))

        if m.kind == "line":
            # arclength sqrt(2) ds along x1 = x2 = s
            return integrate(grid, lambda s: g(s, s) * m.density(s) * math.sqrt(2.0))
        if m.kind == "transformed":
            base_w: WeightSpec = w.metadata["base"]
            f1 = w.metadata["f1"]
            vol = integrate(grid, lambda r: g(r) * m.density(r) * w.jacobian(r))
            return vol + _pair(m.base, base_w, lambda r: g(r) * f1(base_w.E(r)), grid)
    except IntegrationError as exc:
        raise PairingError(f"pairing integrand not finite: {exc}") from exc
    raise PairingError(f"unknown measure kind {m.kind!r}")


def pair_density(w: WeightSpec, G: PowerSum, grid: Grid1D) -> float:
    """Integral of G(E) against the measure; point masses at E = inf use the limit of G."""
    m = w.measure
    if m.kind == "dirac" and w.ends[0] == "inf" and m.point == w.a:
        lim = G.at_infinity()
        if not math.isfinite(lim):
            raise PairingError("density does not vanish where E is infinite")
        return m.mass * lim
    if m.kind == "volume":
        x, wts = grid.gauss
        s = grid.gauss_dist_b
        E, _ = w.values(x, s)
        dens = m.density(x)
        if m.density_b is not None:
            dens = np.where(s < 0.5 * (w.b - w.a), m.density_b(s), dens)
        with np.errstate(all="ignore"):
            vals = G(E) * dens * w.jacobian(x)
        if not np.all(np.isfinite(vals)):
            raise PairingError("pairing integrand not finite")
        return float(wts @ vals)
    return measure_pairing(w, lambda r: G(w.E(r)), grid)


@dataclass(frozen=True)
class MomentResult:
    value: float
    bulk: float
    closure: float
    closure_uncertainty: float
    tail: float = 0.0
    tail_bound: float = 0.0


def _flux(w: WeightSpec, k: float, r: float, s: float) -> float:
    _, g = w.values(np.array([r]), np.array([s]))
    with np.errstate(all="ignore"):
        return float(w.jacobian(np.array([r]))[0] * g[0] ** (k - 1))


def _end_z(w: WeightSpec, G, side: int, r: float) -> Optional[float]:
    """E-value at a domain end if a closure panel is needed there."""
    tag = w.ends[side]
    if tag == "inf":
        return math.inf
    if tag == "zero":
        return 0.0
    if isinstance(G, PowerSum) and any(b < 0 for _, _, b in G.terms):
        with np.errstate(all="ignore"):
            z = float(w.E(np.array([r]))[0])
        if abs(z - G.gamma) <= 1e-12 * max(G.gamma, 1.0):
            return G.gamma
    return None


def weighted_moment(w: WeightSpec, G, grid: Grid1D, k: float = 2.0) -> MomentResult:
    """Integral of |grad E|^k G(E) over the domain (radial Jacobian included).

    Panels touching an end where E is 0 or infinite (or where G is singular)
    are replaced by  flux * int G(z) dz  over the E-range of that panel, with
    flux = jacobian * |E'|^(k-1) frozen at the panel's finite node.  For a
    truncated exterior the range beyond the outer radius is added the same way
    and reported separately with a bound from the flux variation.
    """
    if w.tensor:
        raise ParameterError("use the tensor routines for the cone geometry")
    x, wts = grid.gauss
    keep = np.ones(grid.m, dtype=bool)
    closed = []
    can_close = hasattr(G, "integral")
    if can_close:
        if grid.a == w.a:
            z = _end_z(w, G, 0, w.a)
            if z is not None:
                keep[0] = False
                closed.append((0, z))
        if grid.b == w.b:
            z = _end_z(w, G, 1, w.b)
            if z is not None and w.ends[1] != "tail":
                keep[-1] = False
                closed.append((1, z))

    mask = np.repeat(keep, grid.points_per_panel)
    Ev, gv = w.values(x[mask], grid.gauss_dist_b[mask])
    with np.errstate(all="ignore"):
        vals = w.jacobian(x[mask]) * gv ** k * G(Ev)
    bad = ~np.isfinite(vals)
    if bad.any():
        at = float(x[mask][np.argmax(bad)])
        raise IntegrationError(f"non-finite integrand at r={at!r}", abscissa=at)
    bulk = float(np.dot(wts[mask], vals))

    closure = 0.0
    unc = 0.0
    for side, z_end in closed:
        i_end, i_node, i_next = (0, 1, 2) if side == 0 else (-1, -2, -3)
        at = lambda i: (grid.nodes[i], grid.dist_b[i])
        end_r = grid.nodes[i_end]
        F = _flux(w, k, *at(i_end))
        if not (math.isfinite(F) and F > 0):
            F = _flux(w, k, *at(i_node))
        z_node = float(w.values(np.array([grid.nodes[i_node]]), np.array([grid.dist_b[i_node]]))[0][0])
        part = G.integral(min(z_node, z_end), max(z_node, z_end)) * F
        if not math.isfinite(part):
            raise IntegrationError(f"closure integral diverges at r={end_r!r}", abscissa=float(end_r))
        closure += part
        F1, F2 = _flux(w, k, *at(i_node)), _flux(w, k, *at(i_next))
        unc += abs(F1 - F2) / abs(F1) * abs(part) if F1 else 0.0

    tail = tail_bound = 0.0
    if can_close and w.ends[1] == "tail" and grid.b == w.b:
        zb = float(w.E(np.array([w.b]))[0])
        Fb = _flux(w, k, w.b, 0.0)
        tail = Fb * G.integral(0.0, zb)
        F_prev = _flux(w, k, grid.nodes[-2], grid.dist_b[-2])
        slope = math.log(Fb / F_prev) / math.log(w.b / grid.nodes[-2]) if F_prev > 0 else math.inf
        tail_bound = abs(slope) * abs(tail)
    value = bulk + closure + tail
    return MomentResult(value, bulk, closure, unc, tail, tail_bound)


def dirichlet_ends(w: WeightSpec) -> set:
    """Ends of the interval where admissible functions must vanish."""
    ends = set()
    center = w.geometry == "ball-radial" and w.a == 0.0
    if w.kind == "interior":
        ends.add("b")
    elif w.kind == "boundary":
        ends.add("b")
        if not center:
            ends.add("a")
    elif w.kind == "exterior":
        ends.add("b")  # the inner sphere carries a boundary term instead
    elif w.kind == "annular":
        ends.add("b")
    return ends


def shift(w: WeightSpec, c: float) -> WeightSpec:
    """The weight E + c: same gradient and measure, boundary value gamma + c."""
    if not c > 0:
        raise ParameterError(f"shift must be positive, got {c}")
    if w.tensor or w.measure.kind == "transformed":
        raise ParameterError("shift is only available for catalog radial/axial weights")
    E0, hardy_E = w.E, (lambda r: w.E(r) + c)
    Eb = (lambda s: w.E_b(s) + c) if w.E_b is not None else None
    ends = tuple(None if tag == "zero" else tag for tag in w.ends)
    return replace(w, name=f"{w.name}+{c:g}", E=hardy_E, hardy_density=_hardy(hardy_E, w.gradE),
                   gamma=w.gamma + c, sup_E=w.sup_E + c, ends=ends, E_b=Eb,
                   params={**w.params, "shift": c}, metadata={**w.metadata, "unshifted": E0})
