"""hardy-lab command line: every command prints (and optionally saves) one JSON or CSV report."""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .errors import HardyLabError, NumericalError, ParameterError
from .forms import identity_residual
from .grid import make_graded_grid
from .plaplace import p_boundary_sweep, p_boundary_weight, p_sweep, p_weight
from .potentials import (PROFILES, aw_profile_check, best_constant_c, classify_potential, euler_threshold,
                         lamb_constant, lamb_function, profile)
from .rayleigh import (FAMILIES, TestFamily, blowup_diagnostic, region_frontier, sweep_family, verify_moment_identity,
                       weighted_identity)
from .spectrum import best_constant_estimate
from .weights import _ALLOWED, CATALOG_NAMES, KINDS, catalog, default_grid

SCHEMA = "hardy-lab-report/1"
DEFAULT_M = 4096
DEFAULT_Q = 0.85
DEFAULT_EPS = 1e-6
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


# -- report ---------------------------------------------------------------------

def _clean(x):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        return _clean(x.as_dict() if hasattr(x, "as_dict") else dataclasses.asdict(x))
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if x is None or isinstance(x, str):
        return x
    return repr(x)


@dataclasses.dataclass
class RunReport:
    command: str
    weight: Optional[dict]
    grid: Optional[dict]
    results: dict
    theorem_tag: str
    passed: bool
    tolerances: dict
    timestamp: str = ""
    tool_version: str = __version__
    schema: str = SCHEMA

    def to_dict(self) -> dict:
        return _clean({"schema": self.schema, "command": self.command, "weight": self.weight, "grid": self.grid,
                       "results": self.results, "theorem_tag": self.theorem_tag, "pass": self.passed,
                       "tolerances": self.tolerances, "timestamp": self.timestamp,
                       "tool_version": self.tool_version})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        d = json.loads(text)
        return cls(d["command"], d["weight"], d["grid"], d["results"], d["theorem_tag"], d["pass"],
                   d["tolerances"], d["timestamp"], d["tool_version"], d["schema"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["key", "value"])
        for key, val in _flatten(self.to_dict()):
            wr.writerow([key, _csv_value(val)])
        return buf.getvalue()


def _flatten(x, prefix=""):
    if isinstance(x, dict):
        for k in sorted(x):
            yield from _flatten(x[k], f"{prefix}.{k}" if prefix else k)
    elif isinstance(x, list):
        for i, v in enumerate(x):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, x


def _csv_value(v) -> str:
    # repr is the shortest string that round-trips, i.e. the full double
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".hardy-lab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- parsing helpers ------------------------------------------------------------

def parse_range(text: str) -> list:
    """'start:stop:count' (inclusive, evenly spaced) or a comma list."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError
            return [a] if n == 1 else [float(v) for v in np.linspace(a, b, n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"bad range {text!r}; use start:stop:count or a comma list") from None


def parse_params(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ParameterError(f"weight parameter {item!r} must look like key=value")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ParameterError(f"weight parameter {k!r} must be numeric") from None
    return out


def threads() -> int:
    raw = os.environ.get("HARDY_LAB_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"HARDY_LAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ParameterError(f"HARDY_LAB_THREADS must be a positive integer, got {raw!r}")
    return n


def pmap(fn: Callable, items: Sequence) -> list:
    """Order-preserving map over independent items, capped by HARDY_LAB_THREADS."""
    n = min(threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _weight(args):
    w = catalog(args.weight, parse_params(args.param))
    return w, {"name": w.name, "params": dict(w.params), "kind": w.kind, "n": w.n}


def _grid_info(args, w=None, grading=None) -> dict:
    info = {"m": args.m, "q": args.q, "eps": getattr(args, "eps_default", DEFAULT_EPS)}
    if w is not None:
        g = default_grid(w, args.m, args.q)
        info["grading"] = {"kind": g.grading.kind, "toward": g.grading.toward}
    elif grading:
        info["grading"] = grading
    return info


def _family(args) -> TestFamily:
    eps = args.eps if args.eps is not None else DEFAULT_EPS
    return TestFamily(args.family, t=args.t, tau=args.tau, eps=eps if args.family == "power_cutoff" else 0.0)


# -- commands -------------------------------------------------------------------

def cmd_catalog(args) -> RunReport:
    rows = []
    for name in CATALOG_NAMES:
        w = catalog(name)
        if args.kind and w.kind != args.kind:
            continue
        rows.append({"name": name, "kind": w.kind, "geometry": w.geometry, "params": sorted(_ALLOWED[name]),
                     "defaults": dict(w.params)})
    return RunReport("catalog", None, None, {"weights": rows}, "catalog", True, {})


def _cone_u():
    u = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    du = lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y), np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))
    return u, du


def cmd_verify(args) -> RunReport:
    w, winfo = _weight(args)
    if args.u is not None:
        if args.u != "product-sine" or not w.tensor:
            raise ParameterError("--u product-sine is the test function for the cone weight")
        u, du = _cone_u()
        grid = make_graded_grid(w.a, w.b, min(args.m, 256))
        label = "product-sine"
    else:
        if w.tensor:
            raise ParameterError("the cone weight takes --u product-sine")
        mem = _family(args).member(w)
        u, du, label = mem.u, mem.du, mem.label
        grid = default_grid(w, args.m, args.q)
    res = identity_residual(w, u, du, grid)
    results = {"test_function": label, **res.as_dict()}
    tol = {"relative_residual": args.tol}
    return RunReport("verify", winfo, _grid_info(args, w), results, "ground-state-identity",
                     res.relative <= args.tol, tol)


SWEEP_DEFAULTS = {
    # variant: (family, default range, limit point, target as a function of weight_t)
    "base": ("power", "0.52,0.51,0.505,0.5025", 0.5, lambda wt: 0.25),
    "improvement": ("power", "0.6:0.9:4", 0.5, lambda wt: 0.5),
    "weighted": ("power", "0.52,0.51,0.505,0.5025", 0.5, lambda wt: (wt - 0.5) ** 2),
    "neumann": ("power", "0.48,0.49,0.495,0.4975", 0.5, lambda wt: 0.25),
}
SWEEP_TAGS = {"base": "optimal-constant", "improvement": "improvement-constant", "weighted": "weighted-constant",
              "neumann": "neumann-constant"}


def cmd_sweep(args) -> RunReport:
    w, winfo = _weight(args)
    fam_name, rng, at, target = SWEEP_DEFAULTS[args.variant]
    if args.variant == "base" and w.kind == "interior":
        fam_name, rng = "power_minus_gamma", "0.48,0.49,0.495,0.4975"
    fam = TestFamily(args.family or fam_name)
    ts = parse_range(args.t_range or rng)
    grid = default_grid(w, args.m, args.q)
    sw = sweep_family(w, fam, ts, grid, quotient=args.variant, weight_t=args.weight_t, limit_at=at)
    want = target(args.weight_t)
    results = {"sweep": sw.as_dict(), "limit": sw.limit_estimate, "target": want,
               "error": abs(sw.limit_estimate - want)}
    if args.variant == "weighted":
        ids = [weighted_identity(w, args.weight_t, TestFamily("power", t=s), grid) for s in ts]
        results["identity"] = [dataclasses.asdict(r) for r in ids]
    tol = {"limit": args.tol}
    return RunReport("sweep", winfo, _grid_info(args, w), results, SWEEP_TAGS[args.variant],
                     abs(sw.limit_estimate - want) <= args.tol, tol)


def cmd_best_constant(args) -> RunReport:
    w, winfo = _weight(args)
    eps = parse_range(args.eps_list) if args.eps_list else (
        [1e-3, 3e-4, 1e-4] if w.name == "interval_boundary" else [1e-2, 1e-3, 1e-4])
    bc = best_constant_estimate(w, eps, m=args.m, model=args.model)
    results = {**bc.as_dict(), "target": 0.25, "error": abs(bc.extrapolated - 0.25)}
    grid = {"m": args.m, "grading": {"kind": "log-uniform toward truncated ends"}, "eps": eps}
    return RunReport("best-constant", winfo, grid, results, "optimal-constant",
                     abs(bc.extrapolated - 0.25) <= args.tol, {"extrapolated": args.tol})


def cmd_classify(args) -> RunReport:
    name = args.f.replace("-", "_")
    if name not in PROFILES:
        raise ParameterError(f"unknown profile {args.f!r}; choose from {sorted(k.replace('_', '-') for k in PROFILES)}")
    f = profile(name, args.c)
    v = classify_potential(f, args.gamma, horizon=args.horizon, shrink=args.shrink, levels=args.levels)
    results = {"verdict": v.as_dict()}
    checks, tol = [], {}
    if args.best:
        c_star = best_constant_c(profile(name, 1.0), args.gamma, horizon=args.horizon, shrink=args.shrink,
                                 levels=args.levels)
        results["c_star"] = c_star
        if args.expect_c is not None:
            tol["c_star"] = args.c_tol
            checks.append(abs(c_star - args.expect_c) <= args.c_tol)
    if args.euler:
        results["euler_threshold"] = euler_threshold()
        tol["euler_threshold"] = 1e-4
        checks.append(abs(results["euler_threshold"]["threshold"] - 0.25) <= 1e-4)
    if args.expect:
        tol["expect"] = args.expect
        checks.append(v.admissible == (args.expect == "admissible"))
    info = {"profile": args.f, "c": args.c, "gamma": args.gamma}
    grid = {"horizon": args.horizon, "shrink": args.shrink, "levels": args.levels}
    return RunReport("classify", info, grid, results, "potential-disconjugacy", all(checks), tol)


def cmd_region(args) -> RunReport:
    w, winfo = _weight(args)
    betas = parse_range(args.beta)
    grid = default_grid(w, args.m, args.q)
    rows = pmap(lambda b: region_frontier(w, [b], grid)[0], betas)
    ok = all(abs(r["alpha_max_estimate"] - r["theory"]) <= args.tol for r in rows)
    return RunReport("region", winfo, _grid_info(args, w), {"frontier": rows}, "region-frontier", ok,
                     {"alpha": args.tol})


def cmd_pcase(args) -> RunReport:
    p = args.p
    crit = (p - 1) / p
    if args.boundary:
        ts = parse_range(args.t_range) if args.t_range else [crit + d for d in (0.02, 0.01, 0.005, 0.0025)]
        s = p_boundary_sweep(p, ts)
        err = abs(s["improvement_limit"] / s["improvement_target"] - 1)
        return RunReport("pcase", {"name": "p_torsion", "params": {"p": p}}, {"m": DEFAULT_M}, {**s, "relative_error": err},
                         "p-boundary", err <= args.tol, {"relative": args.tol})
    w = p_weight(args.n, p)
    ts = parse_range(args.t_range) if args.t_range else [crit - d for d in (0.02, 0.01, 0.005, 0.0025)]
    s = p_sweep(w, p, ts)
    err = abs(s["limit"] / s["limit_target"] - 1)
    return RunReport("pcase", {"name": w.name, "params": dict(w.params)}, {"m": DEFAULT_M},
                     {**s, "relative_error": err}, "p-hardy", err <= args.tol and s["bound_holds_all"],
                     {"relative": args.tol, "bound_slack": 1e-6})


LAMB_WINDOW = (0.9395, 0.9405)


def cmd_lamb(args) -> RunReport:
    lam = lamb_constant()
    Ms = parse_range(args.M)
    checks = pmap(aw_profile_check, Ms)
    ok = LAMB_WINDOW[0] < lam < LAMB_WINDOW[1] and all(
        c["bessel_residual_max"] <= 1e-8 and c["l_min"] >= -1e-8 and abs(c["l_at_M"]) <= 1e-8 for c in checks)
    results = {"lamb_constant": lam, "g_at_root": lamb_function(lam), "profiles": checks}
    return RunReport("lamb", None, None, results, "lamb-constant", ok,
                     {"window": list(LAMB_WINDOW), "residual": 1e-8})


def cmd_moment(args) -> RunReport:
    if args.weight == "p_torsion":
        if args.p is None:
            raise ParameterError("the p_torsion weight needs --p")
        w = p_boundary_weight(args.p)
        winfo = {"name": w.name, "params": dict(w.params), "kind": w.kind, "n": w.n}
    else:
        w, winfo = _weight(args)
    grid = default_grid(w, args.m, args.q)
    chk = verify_moment_identity(w, args.t, args.identity, grid, p=args.p)
    return RunReport("moment", winfo, _grid_info(args, w), dataclasses.asdict(chk), "moment-identity",
                     chk.relative_residual <= args.tol, {"relative_residual": args.tol})


def cmd_blowup(args) -> RunReport:
    w, winfo = _weight(args)
    ts = parse_range(args.t_list)
    res = blowup_diagnostic(w, ts, default_grid(w, args.m, args.q) if w.gamma > 0 else None)
    last = res.scaled[-1]
    err = abs(last / res.expected - 1)
    results = {**res.as_dict(), "at_last_t": last, "relative_error": err}
    return RunReport("blowup", winfo, _grid_info(args), results, "blowup-law", err <= args.tol,
                     {"relative": args.tol})


# -- argument parser ------------------------------------------------------------

def _grid_flags(p):
    p.add_argument("--m", type=int, default=DEFAULT_M, help="panels (default %(default)s)")
    p.add_argument("--q", type=float, default=DEFAULT_Q, help="geometric grading ratio (default %(default)s)")


def _weight_flags(p):
    p.add_argument("--weight", required=True, choices=CATALOG_NAMES)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="weight parameter")


def _output_flags(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="also write the report here (atomic replace)")
    p.add_argument("--quiet", action="store_true", help="do not print the report")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardy-lab", description="Numerical checks of generalized Hardy inequalities.")
    ap.add_argument("--version", action="version", version=f"hardy-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list catalog weights")
    p.add_argument("--kind", choices=KINDS)
    _output_flags(p)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("verify", help="ground-state identity residual for one test function")
    _weight_flags(p)
    p.add_argument("--family", choices=FAMILIES, default="power")
    p.add_argument("--t", type=float, default=0.75)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=None, help=f"cutoff level (default {DEFAULT_EPS:g})")
    p.add_argument("--u", help="named test function (cone: product-sine)")
    p.add_argument("--tol", type=float, default=1e-5)
    _grid_flags(p)
    _output_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="quotient sweep with extrapolated limit")
    _weight_flags(p)
    p.add_argument("--variant", choices=tuple(SWEEP_DEFAULTS), default="base")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--t", dest="t_range", help="start:stop:count or comma list")
    p.add_argument("--weight-t", type=float, default=0.25, help="weight exponent for the weighted variant")
    p.add_argument("--tol", type=float, default=1e-3)
    _grid_flags(p)
    _output_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("best-constant", help="truncated eigenvalues extrapolated to the optimal constant")
    _weight_flags(p)
    p.add_argument("--eps", dest="eps_list", help="truncation list, e.g. 1e-2,1e-3,1e-4")
    p.add_argument("--model", choices=("shifted", "power"), default="shifted")
    p.add_argument("--tol", type=float, default=5e-3)
    _grid_flags(p)
    _output_flags(p)
    p.set_defaults(func=cmd_best_constant)

    p = sub.add_parser("classify", help="disconjugacy verdict for a potential profile")
    p.add_argument("--f", required=True, help="profile: " + ", ".join(sorted(k.replace("_", "-") for k in PROFILES)))
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--shrink", type=float, default=1e-100)
    p.add_argument("--levels", type=int, default=6)
    p.add_argument("--best", action="store_true", help="also bisect for the best multiplier")
    p.add_argument("--euler", action="store_true", help="also locate the Euler threshold")
    p.add_argument("--expect", choices=("admissible", "not-admissible"))
    p.add_argument("--expect-c", type=float)
    p.add_argument("--c-tol", type=float, default=1e-3)
    _output_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("region", help="alpha frontier for the (alpha, beta) inequality")
    _weight_flags(p)
    p.add_argument("--beta", required=True, help="comma list or start:stop:count")
    p.add_argument("--tol", type=float, default=1e-3)
    _grid_flags(p)
    _output_flags(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("pcase", help="p-Laplacian quotient sweeps")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--t", dest="t_range")
    p.add_argument("--boundary", action="store_true", help="boundary improvement sweep instead")
    p.add_argument("--tol", type=float, default=0.02)
    _output_flags(p)
    p.set_defaults(func=cmd_pcase)

    p = sub.add_parser("lamb", help="Lamb constant and Bessel profile residuals")
    p.add_argument("--M", default="1,3.7")
    _output_flags(p)
    p.set_defaults(func=cmd_lamb)

    p = sub.add_parser("moment", help="moment identity for a weight")
    p.add_argument("--weight", required=True, choices=CATALOG_NAMES + ("p_torsion",))
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="weight parameter")
    p.add_argument("--identity", required=True, choices=("boundary", "neumann", "exterior", "annular", "p-case"))
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--tol", type=float, default=1e-3)
    _grid_flags(p)
    _output_flags(p)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("blowup", help="(1-2t) I(t) against the measure's mass")
    _weight_flags(p)
    p.add_argument("--t", dest="t_list", default="0.49,0.495,0.499")
    p.add_argument("--tol", type=float, default=0.02)
    _grid_flags(p)
    _output_flags(p)
    p.set_defaults(func=cmd_blowup)
    return ap


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        with contextlib.redirect_stderr(stderr), contextlib.redirect_stdout(stdout):
            args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_PASS
    if args.command == "moment" and args.identity == "p-case" and args.p is None:
        print("hardy-lab: error: the p-case identity needs --p", file=stderr)
        return EXIT_USAGE
    try:
        report = args.func(args)
    except ParameterError as e:
        print(f"hardy-lab: parameter error: {e}", file=stderr)
        return EXIT_USAGE
    except NumericalError as e:
        print(f"hardy-lab: numerical error: {e}", file=stderr)
        return EXIT_NUMERICAL
    except HardyLabError as e:
        print(f"hardy-lab: error: {e}", file=stderr)
        return e.exit_code if hasattr(e, "exit_code") else EXIT_NUMERICAL
    report.timestamp = datetime.now(timezone.utc).isoformat()
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        write_atomic(args.out, text)
    if not args.quiet:
        stdout.write(text)
    return EXIT_PASS if report.passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())
