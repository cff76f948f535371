"""Command-line front end (``stable-supremum`` / ``python -m stable_supremum``)."""

from __future__ import annotations

import argparse
import csv
import importlib
import io
import json
import math
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import coefficients as coef
from . import diophantine as dio
from . import oracle
from . import trigprod
from .errors import (
    HypothesisError,
    ParseError,
    PoleProximityError,
    SingularityError,
    SupremumError,
    ValidationError,
)

# the package namespace re-exports a function called density
dens = importlib.import_module(".density", __package__)

OUT_DIR_ENV = "STABLE_SUPREMUM_OUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_VALIDATION, EXIT_NOT_CONVERGED, EXIT_HYPOTHESIS = 0, 1, 2, 3, 4

# flag defaults; None in argparse means "not given" so config files can fill in
DEFAULTS = {
    "eps": 1e-10,
    "mode": "auto",
    "format": "csv",
    "seed": 20240601,
    "depth": 50,
    "k_max": 10000,
    "kind": None,
    "shift": 0.0,
    "stride": 1,
    "T": 10.0,
    "paths": 200000,
    "steps": 2000,
    "workers": 1,
    "suite": "core",
    "u": "0.5",
    "x": "1",
}


def parse_grid(text: str) -> List[float]:
    """``start:stop:count[:log]``, a comma list, or a single number."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "lin")):
                raise ParseError(f"grid must be start:stop:count[:log], got {text!r}")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ParseError("grid count must be >= 1")
            if len(parts) == 4 and parts[3] == "log":
                if start <= 0 or stop <= 0:
                    raise ParseError("log grid needs positive endpoints")
                return np.geomspace(start, stop, count).tolist()
            return np.linspace(start, stop, count).tolist()
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"malformed grid {text!r}: {exc}") from exc


def read_config(path: str) -> Dict[str, str]:
    out = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ParseError(f"{path}:{lineno}: expected key=value")
                k, v = line.split("=", 1)
                out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    except OSError as exc:
        raise ParseError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return out


def _common(p: argparse.ArgumentParser, params=True, grid=True):
    if params:
        p.add_argument("--alpha", help="alpha as sqrt:D, surd:(P+Q*sqrt:D)/R, cf:[a0;a1,...] or a decimal")
        p.add_argument("--rho", type=float, help="positivity parameter P(X_1 > 0)")
    if grid:
        p.add_argument("--x", help="grid start:stop:count[:log], comma list or single value")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--out", help=f"output file (relative paths resolve against ${OUT_DIR_ENV})")
    p.add_argument("--config", help="key=value file with the same keys as the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stable-supremum",
        description="Density of the supremum of a strictly stable Levy process and its diagnostics.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_, allow_abbrev=False)

    p = add("density", "tabulate p(x)")
    _common(p)
    p.add_argument("--eps", type=float, help="relative tolerance in [1e-14, 1e-2] (default 1e-10)")
    p.add_argument("--mode", choices=("auto", "convergent", "asymptotic"), help="series selection (default auto)")
    p.add_argument("--strict", action="store_true", default=None, help="exit 3 if any point did not converge")

    p = add("cdf", "tabulate P(S_1 <= x)")
    _common(p)
    p.add_argument("--eps", type=float, help="relative tolerance in [1e-14, 1e-2] (default 1e-10)")
    p.add_argument("--mode", choices=("auto", "convergent", "asymptotic"), help="series selection (default auto)")
    p.add_argument("--strict", action="store_true", default=None, help="exit 3 if any point did not converge")

    p = add("quantile", "invert the CDF")
    _common(p, grid=False)
    p.add_argument("--u", help="probability levels, comma list or grid (default 0.5)")
    p.add_argument("--eps", type=float, help="tolerance on |F(x) - u| (default 1e-10)")

    p = add("classify", "continued-fraction evidence for membership of alpha in L")
    p.add_argument("--alpha", help="real to classify (same grammar as elsewhere)")
    p.add_argument("--depth", type=int, help="number of partial quotients scanned (default 50)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--out", help=f"output file (relative paths resolve against ${OUT_DIR_ENV})")
    p.add_argument("--config", help="key=value file with the same keys as the flags")

    p = add("lemma1", "running average of log|sec| or log|csc| products")
    p.add_argument("--alpha", help="multiplier x in prod f(pi l x)")
    p.add_argument("--kind", choices=trigprod.KINDS, help="product kind (default sec)")
    p.add_argument("--shift", type=float, help="shift y for csc-shifted (default 0)")
    p.add_argument("--k-max", type=int, dest="k_max", help="number of factors (default 10000)")
    p.add_argument("--stride", type=int, help="emit every stride-th k (default 1)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--out", help=f"output file (relative paths resolve against ${OUT_DIR_ENV})")
    p.add_argument("--config", help="key=value file with the same keys as the flags")

    p = add("table", "export coefficients a_{m,n} or b_{m,n}")
    _common(p, grid=False)
    p.add_argument("--kind", choices=("a", "b"), help="coefficient family (default a)")
    p.add_argument("--T", type=float, dest="T", help="shell bound on the exponent (default 10)")

    p = add("montecarlo", "empirical CDF of the random-walk maximum")
    _common(p)
    p.add_argument("--paths", type=int, help="number of paths (default 200000)")
    p.add_argument("--steps", type=int, help="steps per path (default 2000)")
    p.add_argument("--seed", type=int, help="64-bit seed (default 20240601)")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")

    p = add("verify", "run self-consistency checks and exit nonzero on failure")
    _common(p, grid=False)
    p.add_argument("--suite", choices=("core",), help="check suite (default core)")
    p.add_argument("--eps", type=float, help="tolerance for series evaluation (default 1e-10)")
    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    known = set(vars(args)) - {"command", "config"}
    for key, raw in cfg.items():
        if key not in known:
            raise ParseError(f"unknown config key {key!r} for command {args.command!r}")
        if getattr(args, key) is None:
            setattr(args, key, _coerce(key, raw))
    for key in known:
        if getattr(args, key) is None and key in DEFAULTS:
            setattr(args, key, DEFAULTS[key])
    if getattr(args, "kind", "x") is None:
        args.kind = "sec" if args.command == "lemma1" else "a"
    if getattr(args, "strict", False) is None:
        args.strict = False
    return args


_TYPES = {"rho": float, "eps": float, "seed": int, "depth": int, "k_max": int, "shift": float, "stride": int,
          "T": float, "paths": int, "steps": int, "workers": int}


def _coerce(key, raw):
    if key == "strict":
        return raw.lower() in ("1", "true", "yes", "on")
    conv = _TYPES.get(key, str)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ParseError(f"config value for {key!r} is not a valid {conv.__name__}: {raw!r}") from exc


def _params(args) -> coef.StableParams:
    if args.alpha is None or args.rho is None:
        raise ParseError("--alpha and --rho are required")
    spec = dio.parse_real(args.alpha)
    if spec.kind == "decimal":
        _note_decimal(args.alpha)
    return coef.StableParams(spec, args.rho, class_depth=getattr(args, "depth", None) or coef.DEFAULT_CLASS_DEPTH)


def _note_decimal(text):
    print(f"note: alpha {text!r} is a decimal literal, read as a truncated window onto an irrational",
          file=sys.stderr)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _emit(rows: List[dict], columns: Sequence[str], fmt: str, out: Optional[str]):
    if fmt == "json":
        text = json.dumps([{c: r.get(c) for c in columns} for r in rows], indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
        text = buf.getvalue()
    if out:
        base = os.environ.get(OUT_DIR_ENV)
        path = out if os.path.isabs(out) or not base else os.path.join(base, out)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_safe(v: float):
    return v if math.isfinite(v) else None


# -- commands ----------------------------------------------------------------

def cmd_series(args, quantity):
    params = _params(args)
    xs = parse_grid(args.x)
    fn = dens.density if quantity == "density" else dens.cdf
    rows, bad = [], False
    for x in xs:
        r = fn(params, x, args.eps, args.mode)
        rows.append({"x": x, quantity: _json_safe(r.value), "est_error": _json_safe(r.est_error),
                     "status": r.status, "mode": r.mode})
        bad |= r.status != dens.CONVERGED
    _emit(rows, ["x", quantity, "est_error", "status", "mode"], args.format, args.out)
    return EXIT_NOT_CONVERGED if (bad and args.strict) else EXIT_OK


def cmd_quantile(args):
    params = _params(args)
    rows = [{"u": u, "x": dens.quantile(params, u, args.eps)} for u in parse_grid(args.u)]
    _emit(rows, ["u", "x"], args.format, args.out)
    return EXIT_OK


def cmd_classify(args):
    if args.alpha is None:
        raise ParseError("--alpha is required")
    spec = dio.parse_real(args.alpha)
    if spec.kind == "decimal":
        _note_decimal(args.alpha)
    c = dio.classify_L(spec, args.depth, profile_q_max=0)
    base = {"alpha": str(spec), "verdict": c.verdict, "depth_examined": c.depth_examined}
    rows = []
    for w in c.witnesses:
        a_next = w.a_next if w.a_next < 2**53 else str(w.a_next)
        rows.append(dict(base, n=w.n, q_n=w.q_n, a_next=a_next, a_next_bits=w.a_next.bit_length(), b=w.b))
    if not rows:
        rows.append(dict(base))
    _emit(rows, ["alpha", "verdict", "depth_examined", "n", "q_n", "a_next", "a_next_bits", "b"], args.format, args.out)
    return EXIT_OK


def cmd_lemma1(args):
    if args.alpha is None:
        raise ParseError("--alpha is required")
    if args.stride < 1:
        raise ParseError("--stride must be >= 1")
    spec = dio.parse_real(args.alpha)
    tr = trigprod.trig_log_product(args.kind, spec, args.shift, args.k_max)
    ks = tr.k[args.stride - 1 :: args.stride]
    vals = tr.cumulative[args.stride - 1 :: args.stride]
    if tr.no_guarantee:
        print("note: shifted products carry no asymptotic guarantee", file=sys.stderr)
    rows = [{"k": int(k), "normalized_log_product": float(v)} for k, v in zip(ks, vals)]
    _emit(rows, ["k", "normalized_log_product"], args.format, args.out)
    return EXIT_OK


def cmd_table(args):
    params = _params(args)
    t = coef.build_table(params, args.kind, args.T)
    rows = []
    ln10 = math.log(10.0)
    for m, n, s, l in zip(t.m.tolist(), t.n.tolist(), t.sign.tolist(), t.logabs.tolist()):
        if s == 0:
            rows.append({"m": m, "n": n, "sign": 0, "log10_abs": None, "value_if_representable": 0.0})
            continue
        v = float(coef.SignedLogValue(s, l))
        rows.append({"m": m, "n": n, "sign": s, "log10_abs": l / ln10,
                     "value_if_representable": v if math.isfinite(v) and v != 0.0 else None})
    _emit(rows, ["m", "n", "sign", "log10_abs", "value_if_representable"], args.format, args.out)
    return EXIT_OK


def cmd_montecarlo(args):
    params = _params(args)
    cfg = oracle.McConfig(args.paths, args.steps, args.seed, tuple(parse_grid(args.x)), workers=args.workers)
    r = oracle.mc_supremum_cdf(params, cfg)
    rows = [{"x": x, "F_emp": f, "stderr": e, "F_series": s}
            for x, f, e, s in zip(r.grid.tolist(), r.F_emp.tolist(), r.stderr.tolist(), r.F_series.tolist())]
    _emit(rows, ["x", "F_emp", "stderr", "F_series"], args.format, args.out)
    return EXIT_OK


def run_core_checks(params: coef.StableParams, eps: float = 1e-10) -> List[dict]:
    """Normalization, Mellin residue and functional equation, cross-regime agreement."""
    rows = []

    def record(name, value, tol):
        rows.append({"check": name, "value": float(value), "tolerance": tol, "pass": bool(value <= tol)})

    mass = dens.total_mass(params, eps)
    record("normalization", abs(mass.value - 1.0), 1e-8)
    m1 = oracle.mellin_numeric(params, 1.0)
    record("mellin_M1", abs(m1.value - 1.0), 1e-8)
    a00 = float(coef.coeff_a(params, 0, 0))
    record("residue_a00", abs(oracle.residue_estimate(params) / a00 - 1.0), 1e-2)
    cont = not (oracle._in_strip(params, 0.8 + 0j) and oracle._in_strip(params, 1.8 + 0j))
    for s in (0.8, 1.2, 1.2 + 0.5j):
        record(f"functional_eq_s={s}", oracle.functional_eq_residual(params, s, allow_continuation=cont), 1e-5)
    # cross-regime: both series where both are usable
    xs = (4.5, 5.0) if params.regime == "upper" else (0.1, 0.12)
    for x in xs:
        c = dens.density(params, x, eps, "convergent")
        a = dens.series_sum(params, x, "large" if params.regime == "upper" else "small", "density", "asymptotic", eps)
        tol = max(1e-4, a.est_error)
        record(f"cross_regime_x={x}", abs(c.value / a.value - 1.0), tol)
    return rows


def cmd_verify(args):
    params = _params(args)
    rows = run_core_checks(params, args.eps)
    _emit(rows, ["check", "value", "tolerance", "pass"], args.format, args.out)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


COMMANDS = {
    "density": lambda a: cmd_series(a, "density"),
    "cdf": lambda a: cmd_series(a, "cdf"),
    "quantile": cmd_quantile,
    "classify": cmd_classify,
    "lemma1": cmd_lemma1,
    "table": cmd_table,
    "montecarlo": cmd_montecarlo,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return COMMANDS[args.command](args)
    except HypothesisError as exc:
        code, status, msg = exc.code, EXIT_HYPOTHESIS, str(exc)
    except (ValidationError, PoleProximityError, SingularityError) as exc:
        code, status, msg = exc.code, EXIT_VALIDATION, str(exc)
    except SupremumError as exc:
        code, status, msg = exc.code, EXIT_FAIL, str(exc)
    msg = msg.replace("\n", " ")
    print(f"error[{code}]: {msg}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
