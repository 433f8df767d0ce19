"""Command-line front end.

Subcommands
-----------
eval     evaluate one correlator by a chosen route
verify   run verification suites
sweep    tabulate exact/predicted ratios over an N grid

Exit codes: 0 success, 1 verification failure, 2 usage or validation
error, 3 numerical failure.

Points are complex literals such as ``0.3+0.2j``; a list may be comma
separated. Values starting with ``-`` need the ``--z=-0.4`` spelling.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from .asymptotics import REGIMES, AsymptoticRegime, convergence_report
from .correlators import CorrelatorSpec, charsum, closed_form, duality_rhs, mc_correlator
from .ensembles import WORKERS_ENV, MCEstimate
from .linalg import LogComplex, NumericalError
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
ROUTES = ("closed", "charsum", "mc", "dual")
FORMATS = ("json", "csv", "text")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_complex(text: str) -> complex:
    """``"re+imj"`` (spaces ignored) to ``complex``."""
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _points(values: Sequence[str] | None) -> list[complex]:
    out = []
    for v in values or []:
        out.extend(parse_complex(s) for s in v.split(",") if s.strip())
    return out


def _reals(values: Sequence[str] | None) -> list[float]:
    out = []
    for c in _points(values):
        if c.imag:
            raise ValueError(f"expected a real number, got {c}")
        out.append(c.real)
    return out


def _value_fields(v: LogComplex) -> dict:
    d = v.as_dict()
    c = v.to_complex()
    d["re"] = c.real
    d["im"] = c.imag
    return d


def _spec(args) -> CorrelatorSpec:
    omega = np.diag(_reals(args.omega)) if args.omega else None
    w = _points(args.w) or None
    return CorrelatorSpec(args.ensemble, args.N, args.k, z=_points(args.z), w=w, M=args.M, omega=omega)


def cmd_eval(args) -> tuple[int, list[dict]]:
    spec = _spec(args)
    rec = {"ensemble": spec.ensemble, "params": spec.params(), "route": args.route}
    if args.route in ("closed", "charsum"):
        if spec.omega is not None:
            raise ValueError(f"route {args.route!r} needs identity sources")
        v = closed_form(spec) if args.route == "closed" else charsum(spec)
        rec["value"] = _value_fields(v)
    else:
        if args.seed is None:
            raise ValueError("stochastic routes need --seed")
        fn = mc_correlator if args.route == "mc" else duality_rhs
        est: MCEstimate = fn(spec, args.n, args.seed, args.workers)
        rec["value"] = _value_fields(LogComplex.from_complex(est.mean))
        rec.update(stderr=est.stderr, n=est.n, seed=est.seed)
        if est.ess is not None:
            rec["ess"] = est.ess
    return EXIT_OK, [rec]


def cmd_verify(args) -> tuple[int, list[dict]]:
    checks = run_suite(args.suite, seed=args.seed, n=args.n, workers=args.workers)
    rows = [c.as_dict() for c in checks]
    return (EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY), rows


def cmd_sweep(args) -> tuple[int, list[dict]]:
    reg = AsymptoticRegime(args.regime, x=parse_complex(args.x), zeta=tuple(_points(args.zeta)),
                           xi=tuple(_points(args.xi)), k=args.k, gamma=args.gamma,
                           k1=args.k1, k2=args.k2)
    Ns = [int(s) for s in args.N.split(",")]
    rep = convergence_report(reg, Ns)
    rows = []
    for r, row in zip(rep.rows, rep.table()):
        row = {"regime": reg.regime, **row, "exact_log": r.exact.log_magnitude,
               "predicted_log": r.predicted.log_magnitude}
        rows.append(row)
    if rows:
        rows[-1]["monotone"] = rep.monotone
    return EXIT_OK, rows


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for key, v in d.items():
        name = f"{prefix}{key}"
        if isinstance(v, dict):
            out.update(_flatten(v, name + "_"))
        else:
            out[name] = v
    return out


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return "".join(json.dumps(_jsonable(r), sort_keys=True) + "\n" for r in rows)
    flat = [_flatten(_jsonable(r)) for r in rows]
    if fmt == "csv":
        keys: list[str] = []
        for r in flat:
            keys += [k for k in r if k not in keys]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in flat:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        return buf.getvalue()
    lines = []
    for r in flat:
        lines.append("  ".join(f"{k}={v}" for k, v in r.items()))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="charcorr", description="Correlators of characteristic polynomials.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, n_default):
        sp.add_argument("--format", choices=FORMATS, default="json")
        sp.add_argument("--n", type=int, default=n_default, help="Monte Carlo sample size")
        sp.add_argument("--workers", type=int, default=None,
                        help=f"worker threads (default from {WORKERS_ENV}, else 1)")

    e = sub.add_parser("eval", help="evaluate one correlator")
    e.add_argument("--ensemble", required=True)
    e.add_argument("--N", type=int, required=True)
    e.add_argument("--M", type=int, default=None)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--z", action="append", required=True, help="points, repeat or comma separate")
    e.add_argument("--w", action="append", help="second point set (complex ensembles)")
    e.add_argument("--omega", action="append", help="diagonal of the source matrix (mc, dual)")
    e.add_argument("--route", choices=ROUTES, default="closed")
    e.add_argument("--seed", type=int, default=None)
    common(e, 100000)
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", choices=sorted(SUITES) + ["all"], default="all")
    v.add_argument("--seed", type=int, default=12345)
    common(v, 20000)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="exact/predicted ratios over an N grid")
    s.add_argument("--regime", choices=REGIMES, required=True)
    s.add_argument("--N", required=True, help="comma separated sizes, e.g. 50,100,200")
    s.add_argument("--x", default="0", help="base point")
    s.add_argument("--zeta", action="append")
    s.add_argument("--xi", action="append")
    s.add_argument("--k", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--k1", type=int)
    s.add_argument("--k2", type=int)
    s.add_argument("--format", choices=FORMATS, default="csv")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, rows = args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"charcorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"charcorr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError) as exc:
        print(f"charcorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(render(rows, args.format))
    return code
