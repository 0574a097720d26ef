"""Command line interface: ``ginibre-fcs {mean,variance,cumulants,simulate,verify}``.

Every command prints a table with the columns
``quantity,ensemble,scale,x,analytic,mc_value,mc_se`` followed by command
specific meta columns, as CSV (default) or JSON.

Exit codes: 0 success, 2 usage error, 3 quadrature tolerance not met,
4 too many failed Monte Carlo samples, 5 identity check failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import finite_n as fn
from . import origin as og
from . import planar_fcs as pf
from .finite_n import EnsembleKind
from .identities import run_checks
from .quadrature import QuadSpec, ToleranceNotMet
from .sampler import CampaignError, SimConfig, run_campaign_detailed
from .specfun import inject_fault

__all__ = ["OutputRow", "main", "build_parser", "format_rows", "PRESETS"]

HEADER = ("quantity", "ensemble", "scale", "x", "analytic", "mc_value", "mc_se")
SCALES = ("finite_N", "origin", "bulk", "edge")


@dataclass
class OutputRow:
    quantity: str
    ensemble: str
    scale: str
    x: float
    analytic: float | None = None
    mc_value: float | None = None
    mc_se: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.analytic is None and self.mc_value is None:
            raise ValueError("a row needs an analytic or a Monte Carlo value")
        if self.scale not in SCALES:
            raise ValueError(f"unknown scale {self.scale!r}")


class UsageError(Exception):
    pass


# Named parameter sets for recurring sweeps; flags and config entries override them.
PRESETS = {
    "fig2b": {"ensemble": "all", "scale": "finite_N", "ns": "50,100,200,400", "grid": "1:1:1"},
    "fig3": {"ensemble": "all", "scale": "origin", "grid": "0:4:41"},
    "fig4": {"ensemble": "ginoe", "scale": "finite_N", "n": "150", "samples": "4000",
             "radii": ",".join(f"{v:g}" for v in np.round(np.linspace(0.05, 1.5, 30), 4))},
    "fig5": {"ensemble": "all", "scale": "origin", "grid": "0:4:41"},
    "fig7": {"ensemble": "ginse", "scale": "finite_N", "n": "50", "grid": "0:1.2:25",
             "potential": "ginse_gaussian", "p": "3"},
}


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------

def _num(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


def _columns(rows):
    meta = sorted({k for r in rows for k in r.meta})
    return list(HEADER) + meta


def _cell(row, col):
    if col in HEADER:
        return getattr(row, col)
    return row.meta.get(col)


def _csv_text(v):
    s = _num(v) if isinstance(v, (float, int, np.floating, np.integer)) or v is None else str(v)
    if any(c in s for c in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _json_value(v):
    if v is None:
        return "null"
    if isinstance(v, (float, np.floating)):
        return _num(v) if math.isfinite(v) else "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    s = str(v).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{s}"'


def format_rows(rows, fmt="csv") -> str:
    """Render rows as CSV or JSON; floats use 17 significant digits."""
    cols = _columns(rows)
    if fmt == "csv":
        lines = [",".join(cols)]
        lines += [",".join(_csv_text(_cell(r, c)) for c in cols) for r in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        objs = ["{" + ", ".join(f'"{c}": {_json_value(_cell(r, c))}' for c in cols) + "}" for r in rows]
        return "[\n  " + ",\n  ".join(objs) + "\n]\n" if objs else "[]\n"
    raise UsageError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    """``start:stop:steps`` (inclusive, ``steps`` points) or a comma list."""
    try:
        if ":" in text:
            start, stop, steps = text.split(":")
            n = int(steps)
            if n < 1:
                raise ValueError
            return np.linspace(float(start), float(stop), n)
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use start:stop:steps or a comma list") from None


def _ensembles(text):
    if text == "all":
        return list(EnsembleKind)
    try:
        return [EnsembleKind.parse(t) for t in text.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _label(kind):
    return {EnsembleKind.GINOE: "GinOE", EnsembleKind.GINUE: "GinUE", EnsembleKind.GINSE: "GinSE"}[kind]


def _spec(args):
    return QuadSpec(abs_tol=min(1e-12, args.tol), rel_tol=args.tol) if args.tol else None


def _require_n(args):
    if args.n is None:
        raise UsageError("--n is required for this scale")
    if args.n < 1:
        raise UsageError("--n must be positive")
    return args.n


def _potential(args, beta):
    """Potential from ``--potential`` or from ``g``/``g_prime``/``g_second`` config keys."""
    exprs = (args.g, args.g_prime, args.g_second)
    try:
        if any(e is not None for e in exprs):
            if args.potential:
                raise UsageError("give either --potential or g/g_prime/g_second, not both")
            if any(e is None for e in exprs):
                raise UsageError("a custom potential needs g, g_prime and g_second")
            return pf.potential_from_expressions(*exprs)
        if args.potential:
            return pf.parse_potential(args.potential)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return pf.builtin_potential("ginue_gaussian" if beta == 2 else "ginse_gaussian")


def _custom_potential(args):
    return bool(args.potential) or args.g is not None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_mean(args) -> list[OutputRow]:
    rows = []
    if args.ns:
        # deficit outside the unit disc over a list of N
        ns = [int(v) for v in args.ns.split(",")]
        for kind in _ensembles(args.ensemble):
            for N in ns:
                d, asym = fn.deficit_outside(N, kind)
                rows.append(OutputRow("deficit_outside", _label(kind), "finite_N", N, d,
                                      meta={"asymptote": asym}))
        return rows
    grid = parse_grid(args.grid)
    for kind in _ensembles(args.ensemble):
        lab = _label(kind)
        for x in grid:
            if args.scale == "origin":
                res = og.mean_origin(kind, x)
                meta = {}
            elif args.scale == "finite_N":
                N = _require_n(args)
                res = fn.mean_disc(kind, N, x)
                meta = {"N": N}
            else:
                raise UsageError("mean supports --scale finite_N or origin")
            rows.append(OutputRow("mean", lab, args.scale, x, res.value, meta=meta))
            if res.breakdown is not None:
                rows.append(OutputRow("mean_real", lab, args.scale, x, res.real_part, meta=meta))
                rows.append(OutputRow("mean_complex", lab, args.scale, x, res.complex_part, meta=meta))
    return rows


def _bulk_leading_order(a):
    c = 2 * math.sqrt(2)
    if a < 1:
        return {"var_complex": c * a, "var_real": (c - 2) * a, "cov": -(c - 2) * a, "var": 2 * a}
    return {"var_complex": c - 2, "var_real": c - 2, "cov": -(c - 2), "var": 0.0}


def cmd_variance(args) -> list[OutputRow]:
    rows = []
    grid = parse_grid(args.grid)
    spec = _spec(args)
    for kind in _ensembles(args.ensemble):
        lab = _label(kind)
        for x in grid:
            if args.scale == "origin":
                if kind is EnsembleKind.GINOE:
                    b = og.var_origin_ginoe(x, spec)
                    for q, v in (("var_real", b.var_real), ("var_complex", b.var_complex),
                                 ("cov", b.covariance), ("var", b.total)):
                        rows.append(OutputRow(q, lab, "origin", x, v))
                else:
                    rows.append(OutputRow("var", lab, "origin", x, og.variance_origin(kind, x)))
            elif args.scale == "finite_N":
                N = _require_n(args)
                if kind is EnsembleKind.GINOE:
                    raise UsageError("no finite-N GinOE variance formula; use simulate")
                pot = pf.builtin_potential("ginue_gaussian" if kind.beta == 2 else "ginse_gaussian")
                t = pf.moment_table(pot, N, kind.beta, x)
                rows.append(OutputRow("var", lab, "finite_N", x, pf.cumulant_finite(t, 2).value, meta={"N": N}))
            elif args.scale == "bulk":
                # leading order of Var / sqrt(N / pi) for fixed a
                if kind is EnsembleKind.GINOE:
                    for q, v in _bulk_leading_order(x).items():
                        rows.append(OutputRow(q, lab, "bulk", x, v, meta={"normalisation": "sqrt(N/pi)"}))
                else:
                    v = 2 * x / og.universal_slope(kind) if x < 1 else 0.0
                    rows.append(OutputRow("var", lab, "bulk", x, v, meta={"normalisation": "sqrt(N/pi)"}))
            else:
                raise UsageError("variance supports --scale finite_N, origin or bulk")
    return rows


def cmd_cumulants(args) -> list[OutputRow]:
    grid = parse_grid(args.grid)
    p = args.p
    if p is None or p < 1:
        raise UsageError("--p must be a positive integer")
    kinds = _ensembles(args.ensemble)
    if len(kinds) != 1 or kinds[0] is EnsembleKind.GINOE:
        raise UsageError("cumulants need --ensemble ginse or ginue")
    kind = kinds[0]
    beta = kind.beta
    lab = _label(kind)
    pot = _potential(args, beta)
    q = f"kappa_{p}"
    rows = []
    if args.scale == "finite_N":
        N = _require_n(args)
        for t in pf.moment_tables(pot, N, beta, grid):
            rows.append(OutputRow(q, lab, "finite_N", t.a, pf.cumulant_finite(t, p).value,
                                  meta={"N": N, "potential": pot.label}))
    elif args.scale == "origin":
        if beta != 4 or _custom_potential(args):
            raise UsageError("origin cumulants are available for the Gaussian GinSE only")
        for x in grid:
            rows.append(OutputRow(q, lab, "origin", x, pf.cumulant_origin_ginse(x, p)))
    elif args.scale in ("bulk", "edge"):
        if p < 2:
            raise UsageError("bulk and edge limits need --p >= 2")
        for x in grid:
            meta = {"potential": pot.label}
            if args.n is not None:
                r = pf.scaled_cumulant(pot, args.n, x, p, beta,
                                       edge_S=x if args.scale == "edge" else None)
                meta.update(N=args.n, finite_scaled=r.value)
                val = r.predicted
            elif args.scale == "bulk":
                val = x * pf.cumulant_bulk_limit(p)
            else:
                val = pf.cumulant_edge_limit(p, x)
            rows.append(OutputRow(q, lab, args.scale, x, val, meta=meta))
    return rows


def _analytic_for_sim(cfg, pot):
    """Exact finite-N values where they exist, keyed by (quantity, radius index)."""
    out = {}
    N = cfg.N
    a_vals = [r / math.sqrt(N) if cfg.scale == "origin" else r for r in cfg.radii]
    if cfg.kind is EnsembleKind.GINOE:
        for i, a in enumerate(a_vals):
            if math.isinf(a):
                continue
            m = fn.mean_disc(cfg.kind, N, a)
            out[("mean", i)] = m.value
            out[("mean_real", i)] = m.real_part
            out[("mean_complex", i)] = m.complex_part
            if cfg.scale == "origin":
                b = og.var_origin_ginoe(cfg.radii[i])
                out[("var", i)] = b.total
                out[("var_real", i)] = b.var_real
                out[("var_complex", i)] = b.var_complex
                out[("cov", i)] = b.covariance
        return out
    tabs = pf.moment_tables(pot, N, cfg.kind.beta, a_vals)
    for i, t in enumerate(tabs):
        out[("mean", i)] = pf.cumulant_finite(t, 1).value
        out[("var", i)] = pf.cumulant_finite(t, 2).value
        out[("k3", i)] = pf.cumulant_finite(t, 3).value
        out[("k4", i)] = pf.cumulant_finite(t, 4).value
    return out


def cmd_simulate(args) -> list[OutputRow]:
    kinds = _ensembles(args.ensemble)
    if len(kinds) != 1:
        raise UsageError("simulate needs a single --ensemble")
    kind = kinds[0]
    N = _require_n(args)
    if args.samples is None or args.samples < 1:
        raise UsageError("--samples must be a positive integer")
    radii = parse_grid(args.radii if args.radii else args.grid)
    if args.scale not in ("finite_N", "origin"):
        raise UsageError("simulate supports --scale finite_N or origin")
    pot = None
    if _custom_potential(args):
        if not args.fast:
            raise UsageError("a custom potential needs --fast")
        pot = _potential(args, kind.beta)
    try:
        cfg = SimConfig(kind, N, tuple(radii), args.samples, seed=args.seed, scale=args.scale,
                        fast_bernoulli=args.fast, potential=pot)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    acc, failures = run_campaign_detailed(cfg, args.threads, args.checkpoint)
    if kind is not EnsembleKind.GINOE:
        pot = pot or pf.builtin_potential("ginue_gaussian" if kind.beta == 2 else "ginse_gaussian")
    analytic = _analytic_for_sim(cfg, pot)
    meta = {"N": N, "samples": acc.n, "seed": args.seed, "failures": failures,
            "path": "bernoulli" if args.fast else "matrix"}
    rows = []
    channels = [("total", "")] + ([("real", "_real"), ("complex", "_complex")]
                                  if kind is EnsembleKind.GINOE else [])
    for ch, suffix in channels:
        rep = acc.report(ch)
        for i, rec in enumerate(rep):
            x = rec["radius"]
            for q, key, se in (("mean", "mean", "se_mean"), ("var", "var", "se_var"),
                               ("k3", "k3", "se_k3"), ("k4", "k4", "se_k4")):
                name = q + suffix
                rows.append(OutputRow(name, _label(kind), args.scale, x, analytic.get((name, i)),
                                      rec[key], rec[se], meta=dict(meta)))
            if ch == "total" and kind is EnsembleKind.GINOE:
                rows.append(OutputRow("cov", _label(kind), args.scale, x, analytic.get(("cov", i)),
                                      rec["cov_rc"], rec["se_cov"], meta=dict(meta)))
    return rows


def cmd_verify(args) -> int:
    results = run_checks()
    out = sys.stdout
    out.write(f"{'check':42s} {'residual':>12s} {'tol':>8s}  status\n")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        out.write(f"{r.name:42s} {r.residual:12.3e} {r.tol:8.0e}  {status}"
                  + (f"  ({r.error})" if r.error else "") + "\n")
    n_fail = sum(not r.passed for r in results)
    out.write(f"{len(results)} checks, {n_fail} failed\n")
    return 0 if n_fail == 0 else 5


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def _default_threads():
    env = os.environ.get("GINIBRE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


BASE_DEFAULTS = {"ensemble": "ginue", "scale": "finite_N", "grid": "0:1:11", "n": None, "ns": None,
                 "potential": None, "p": 2, "tol": None, "samples": None, "seed": 0, "radii": None,
                 "fast": False, "checkpoint": None, "threads": None, "out": None, "format": "csv",
                 "g": None, "g_prime": None, "g_second": None}
_TYPES = {"n": int, "p": int, "tol": float, "samples": int, "seed": int, "threads": int}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ginibre-fcs", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ensemble", help="ginoe, ginue, ginse, a comma list, or all")
    common.add_argument("--n", type=int, help="matrix size N")
    common.add_argument("--scale", choices=SCALES)
    common.add_argument("--grid", help="start:stop:steps or comma list of x values")
    common.add_argument("--ns", help="comma list of N (mean: deficit outside the unit disc)")
    common.add_argument("--potential", help="name(params), e.g. truncated_unitary(0.2)")
    common.add_argument("--p", type=int, help="cumulant order")
    common.add_argument("--tol", type=float, help="relative quadrature tolerance")
    common.add_argument("--out", help="write the table here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--config", help="file of key=value lines; flags take precedence; "
                        "keys g, g_prime, g_second define a custom potential")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named grid preset")
    for name in ("mean", "variance", "cumulants"):
        sub.add_parser(name, parents=[common])
    sim = sub.add_parser("simulate", parents=[common])
    sim.add_argument("--samples", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--radii", help="comma list of radii (overrides --grid)")
    sim.add_argument("--fast", action="store_true", default=None, help="Bernoulli path (GinUE/GinSE)")
    sim.add_argument("--checkpoint", help="checkpoint file, resumed if present")
    sim.add_argument("--threads", type=int, help="worker threads (default: GINIBRE_THREADS or CPU count)")
    ver = sub.add_parser("verify")
    ver.add_argument("--inject-fault", help=argparse.SUPPRESS)
    for p in sub.choices.values():
        p.set_defaults(**{k: None for k in BASE_DEFAULTS})
    return parser


def _read_config(path):
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                k, v = (s.strip() for s in line.split("=", 1))
                k = k.lstrip("-").replace("-", "_")
                if k not in BASE_DEFAULTS:
                    raise UsageError(f"{path}:{lineno}: unknown key {k!r}")
                out[k] = v
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    return out


def _resolve(args):
    """Fill unset options from config file, then preset, then built-in defaults."""
    layers = []
    if getattr(args, "config", None):
        layers.append(_read_config(args.config))
    if getattr(args, "preset", None):
        layers.append(PRESETS[args.preset])
    layers.append(BASE_DEFAULTS)
    for key in BASE_DEFAULTS:
        if getattr(args, key, None) is not None:
            continue
        for layer in layers:
            if key in layer and layer[key] is not None:
                v = layer[key]
                if isinstance(v, str):
                    try:
                        if key in _TYPES:
                            v = _TYPES[key](v)
                        elif key == "fast":
                            v = v.lower() in ("1", "true", "yes")
                    except ValueError:
                        raise UsageError(f"bad value {v!r} for {key}") from None
                setattr(args, key, v)
                break
    if args.threads is None:
        args.threads = _default_threads()
    if args.scale not in SCALES:
        raise UsageError(f"unknown scale {args.scale!r}")
    return args


_COMMANDS = {"mean": cmd_mean, "variance": cmd_variance, "cumulants": cmd_cumulants,
             "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        if args.inject_fault:
            name, _, rel = args.inject_fault.partition("=")
            try:
                with inject_fault(name, float(rel or "1e-6")):
                    return cmd_verify(args)
            except ValueError as exc:
                parser.error(str(exc))
        return cmd_verify(args)
    try:
        _resolve(args)
        rows = _COMMANDS[args.command](args)
        text = format_rows(rows, args.format)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ginibre-fcs: error: {exc}", file=sys.stderr)
        return 2
    except ToleranceNotMet as exc:
        print(f"ginibre-fcs: tolerance not met: {exc}", file=sys.stderr)
        return 3
    except CampaignError as exc:
        print(f"ginibre-fcs: campaign failed: {exc}", file=sys.stderr)
        return 4
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
