"""Graded 1-D meshes and open composite quadrature.

Every rule here is open: endpoint values are never sampled, so integrands
that blow up at a or b can be integrated as long as they are integrable.
The default per-panel rule is four-point Gauss-Legendre ("gauss4"); "gaussK"
for K in 1..10 and the midpoint rule are available as options.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import IntegrationError, ParameterError

MIN_PANEL_FRACTION = 1e-14
DEFAULT_RATIO = 0.85

DEFAULT_RULE = "gauss4"


def _rule_points(rule: str) -> tuple[np.ndarray, np.ndarray]:
    """Positions in [0, 1] and weights summing to 1 for one panel."""
    if rule == "midpoint":
        return np.array([0.5]), np.array([1.0])
    if rule.startswith("gauss") and rule[5:].isdigit() and 1 <= int(rule[5:]) <= 10:
        xi, wi = np.polynomial.legendre.leggauss(int(rule[5:]))
        return 0.5 * (xi + 1.0), 0.5 * wi
    raise ParameterError(f"unknown quadrature rule {rule!r}")


@dataclass(frozen=True)
class Grading:
    kind: str = "uniform"  # "uniform" | "geometric"
    toward: str | None = None  # "a" | "b" | "both"
    q: float = DEFAULT_RATIO

    def describe(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform"}
        return {"kind": "geometric", "toward": self.toward, "q": self.q}


UNIFORM = Grading()


def geometric(toward: str = "a", q: float = DEFAULT_RATIO) -> Grading:
    return Grading("geometric", toward, q)


@dataclass(frozen=True, eq=False)
class Grid1D:
    a: float
    b: float
    nodes: np.ndarray
    panel_weights: np.ndarray
    grading: Grading = field(default=UNIFORM)
    dist_b: np.ndarray | None = None  # b - nodes, accumulated from b so small values keep full precision

    @property
    def m(self) -> int:
        return len(self.panel_weights)

    @cached_property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @cached_property
    def _rules(self) -> dict:
        return {}

    def _rule(self, rule: str):
        cache = self._rules
        if rule not in cache:
            pos, wts = _rule_points(rule)
            h = self.panel_weights
            x = (self.nodes[:-1, None] + pos[None, :] * h[:, None]).ravel()
            w = (wts[None, :] * h[:, None]).ravel()
            s = (self.dist_b[1:, None] + (1.0 - pos)[None, :] * h[:, None]).ravel()
            for arr in (x, w, s):
                arr.setflags(write=False)
            cache[rule] = (x, w, s)
        return cache[rule]

    @property
    def gauss(self) -> tuple[np.ndarray, np.ndarray]:
        """Abscissae and weights of the default rule on every panel."""
        return self.abscissae(DEFAULT_RULE)

    @property
    def gauss_dist_b(self) -> np.ndarray:
        """Distance from b of each default-rule abscissa, without cancellation near b."""
        return self.dist_b_for(DEFAULT_RULE)

    @property
    def points_per_panel(self) -> int:
        return len(_rule_points(DEFAULT_RULE)[0])

    def dist_b_for(self, rule: str = DEFAULT_RULE) -> np.ndarray:
        return self._rule(rule)[2]

    def abscissae(self, rule: str = DEFAULT_RULE) -> tuple[np.ndarray, np.ndarray]:
        x, w, _ = self._rule(rule)
        return x, w

    def coarsened(self) -> "Grid1D":
        """Every other node; used for a-posteriori error estimates."""
        if self.m % 2:
            raise ParameterError("coarsening needs an even panel count")
        return _freeze(self.a, self.b, self.nodes[::2].copy(), self.grading, self.dist_b[::2].copy())

    def describe(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "m": self.m,
            "grading": self.grading.describe(),
            "smallest_panel": float(self.panel_weights.min()),
        }


def _freeze(a, b, nodes, grading, dist_b=None) -> Grid1D:
    nodes = np.asarray(nodes, dtype=float)
    nodes[0], nodes[-1] = a, b
    dist_b = (b - nodes) if dist_b is None else np.asarray(dist_b, dtype=float)
    dist_b[-1] = 0.0
    # widths near b come from the distances so they agree with them exactly
    h = np.where(nodes[1:] > 0.5 * (a + b), -np.diff(dist_b), np.diff(nodes))
    for arr in (nodes, h, dist_b):
        arr.setflags(write=False)
    return Grid1D(float(a), float(b), nodes, h, grading, dist_b)


def _capped_sizes(base: np.ndarray, total: float) -> np.ndarray:
    """Return min(base, H) with H chosen so the sizes sum to total."""
    order = np.sort(base)
    m = len(order)
    partial = 0.0
    for k in range(m):
        cap = (total - partial) / (m - k)
        if cap <= order[k]:
            return np.minimum(base, cap)
        partial += order[k]
    return base * (total / partial)


def _as_grading(grading: Union[Grading, str, None]) -> Grading:
    if grading is None or grading == "uniform":
        return UNIFORM
    if isinstance(grading, Grading):
        return grading
    if isinstance(grading, str) and grading.startswith("geometric"):
        # "geometric", "geometric-a", "geometric-both", ...
        parts = grading.split("-", 1)
        return geometric(parts[1] if len(parts) > 1 else "a")
    raise ParameterError(f"unrecognised grading {grading!r}")


def make_graded_grid(a: float, b: float, m: int, grading: Union[Grading, str, None] = None) -> Grid1D:
    g = _as_grading(grading)
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise ParameterError(f"need finite a < b, got ({a}, {b})")
    if int(m) != m or m < 2:
        raise ParameterError(f"need m >= 2 panels, got {m}")
    m = int(m)
    length = b - a
    if g.kind == "uniform":
        nodes = a + length * np.arange(m + 1) / m
        return _freeze(a, b, nodes, g)
    if g.kind != "geometric" or g.toward not in ("a", "b", "both"):
        raise ParameterError(f"bad grading {g}")
    if not (0.0 < g.q < 1.0):
        raise ParameterError(f"geometric ratio must lie in (0,1), got {g.q}")

    growth = 1.0 / g.q
    idx = np.arange(m, dtype=float)
    if g.toward == "both":
        idx = np.minimum(idx, idx[::-1])
    # log-space to avoid overflow of growth**m
    log_rel = idx * math.log(growth)
    rel = np.exp(log_rel - log_rel.max())
    h_pure = length * rel / rel.sum()
    floor = MIN_PANEL_FRACTION * length
    if h_pure.min() >= floor:
        sizes = h_pure
    else:
        base = floor * np.exp(np.minimum(log_rel, 700.0))
        sizes = _capped_sizes(base, length)
    if g.toward == "b":
        sizes = sizes[::-1]
    # accumulate from the refined end(s) so tiny panels keep full precision
    split = {"a": m, "b": 0, "both": m // 2}[g.toward]
    left = a + np.concatenate(([0.0], np.cumsum(sizes[:split])))
    right_dist = np.concatenate((np.cumsum(sizes[split:][::-1])[::-1], [0.0]))
    nodes = np.concatenate((left[:-1], b - right_dist)) if split < m else left
    dist_b = np.concatenate((b - left[:-1], right_dist)) if split < m else b - left
    return _freeze(a, b, nodes, g, dist_b)


Evaluator = Callable[[np.ndarray], np.ndarray]


def _sample(f: Evaluator, x: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        y = f(x)
    y = np.asarray(y, dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape) if y.ndim == 0 else np.vectorize(f, otypes=[float])(x)
    bad = ~np.isfinite(y)
    if bad.any():
        i = int(np.argmax(bad))
        raise IntegrationError(f"non-finite integrand value at x={x.flat[i]!r}", abscissa=float(x.flat[i]))
    return y


def integrate(grid: Grid1D, f: Evaluator, rule: str = DEFAULT_RULE) -> float:
    x, w = grid.abscissae(rule)
    return float(np.dot(w, _sample(f, x)))


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n (two points when n = 1)."""
    if n < 1:
        raise ParameterError(f"dimension must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def integrate_radial(grid: Grid1D, f: Evaluator, n: int, rule: str = DEFAULT_RULE) -> float:
    w_n = sphere_area(n)
    return w_n * integrate(grid, lambda r: f(r) * r ** (n - 1), rule)


def tensor_integrate_2d(gx: Grid1D, gy: Grid1D, f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                        rule: str = DEFAULT_RULE) -> float:
    x, wx = gx.abscissae(rule)
    y, wy = gy.abscissae(rule)
    X, Y = np.meshgrid(x, y, indexing="ij")
    with np.errstate(all="ignore"):
        V = np.asarray(f(X, Y), dtype=float)
    if V.shape != X.shape:
        V = np.broadcast_to(V, X.shape)
    bad = ~np.isfinite(V)
    if bad.any():
        i, j = np.unravel_index(int(np.argmax(bad)), V.shape)
        raise IntegrationError(f"non-finite integrand at ({x[i]!r}, {y[j]!r})", abscissa=(float(x[i]), float(y[j])))
    return float(wx @ V @ wy)
