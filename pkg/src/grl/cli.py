"""Command-line front-end: ``grl fit | gof | simulate | curves``.

Every command writes a versioned table. CSV output starts with a
``# grl-output/<version> <command>`` line followed by a header row; JSON
output is one object with ``schema``, ``command``, ``columns`` and
``rows``. Floats carry 17 significant digits so they survive a roundtrip.

Common flags may also be set through environment variables with the
``GRL_`` prefix (``GRL_SEED``, ``GRL_FORMAT``, ``GRL_OUT``,
``GRL_THREADS``); an explicit flag wins.

Exit codes: 0 success, 1 input error, 2 partial convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distribution import GrlParams, cdf, hazard, pdf, survival, ttt_transform
from .estimators import EstimationOptions, Method, estimate
from .gof import BOOTSTRAP_SCHEME, gof_report
from .simstudy import METRICS, SimConfig, run_study

SCHEMA_VERSION = "1"
ENV_PREFIX = "GRL_"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PARTIAL = 2


class InputError(Exception):
    """Bad data file, config or flag value; maps to exit code 1."""


# ---------------------------------------------------------------- data files

_SPLIT = re.compile(r"[,\s]+")


def read_data(path) -> np.ndarray:
    """Parse whitespace- or comma-separated positive reals; ``#`` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for tok in _SPLIT.split(line):
            if not tok:
                continue
            try:
                v = float(tok)
            except ValueError:
                raise InputError(f"{path}:{lineno}: not a number: {tok!r}") from None
            if not math.isfinite(v) or v <= 0.0:
                raise InputError(f"{path}:{lineno}: values must be finite and > 0, got {tok!r}")
            values.append(v)
    if not values:
        raise InputError(f"{path}: no observations")
    return np.array(values)


def _read_fit_data(path) -> np.ndarray:
    x = read_data(path)
    if x.size < 3:
        raise InputError(f"{path}: at least 3 observations are needed, got {x.size}")
    if np.all(x == x[0]):
        raise InputError(f"{path}: all observations are equal")
    return x


# ---------------------------------------------------------------- output


def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan; keep them as strings rather than emit invalid JSON
        return float(fmt_value(v)) if math.isfinite(v) else fmt_value(v)
    return v


def render(command: str, columns: list, rows: list, fmt: str, meta: dict | None = None) -> str:
    if fmt == "json":
        doc = {
            "schema": f"grl-output/{SCHEMA_VERSION}",
            "command": command,
            **({"meta": meta} if meta else {}),
            "columns": columns,
            "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# grl-output/{SCHEMA_VERSION} {command}\n")
    for k, v in (meta or {}).items():
        buf.write(f"# {k}: {fmt_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_value(r.get(c)) for c in columns])
    return buf.getvalue()


def read_table(text: str) -> tuple[str, list, list]:
    """Parse a CSV table written by :func:`render` into ``(command, columns, rows)``."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# grl-output/"):
        raise InputError("not a grl-output table")
    command = lines[0].split()[-1]
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    reader = csv.reader(body)
    columns = next(reader)
    return command, columns, [dict(zip(columns, r)) for r in reader]


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    p = Path(out)
    tmp = p.with_name(p.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(p)


def _sibling(out: str | None, tag: str) -> str | None:
    if out is None or out == "-":
        return out
    p = Path(out)
    return str(p.with_name(f"{p.stem}-{tag}{p.suffix}"))


# ---------------------------------------------------------------- helpers


def _options(args, seed: int) -> EstimationOptions:
    kw = dict(seed=seed, n_starts=args.n_starts, max_iter=args.max_iter)
    if args.start is not None:
        kw["start"] = _pair(args.start, "--start")
    return EstimationOptions(**kw)


def _pair(text: str, flag: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
        GrlParams(a, b)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{flag}: expected 'lambda,alpha' with lambda >= 2, alpha > 0 ({exc})") from None
    return a, b


def _methods(text: str) -> list:
    try:
        ms = [Method.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if not ms:
        raise InputError("no methods given")
    return list(dict.fromkeys(ms))


# ---------------------------------------------------------------- fit

FIT_COLUMNS = [
    "method", "lambda", "alpha", "objective", "neg_loglik", "cvm_w", "ad_a", "ks",
    "ks_pvalue", "bootstrap_failures", "converged", "at_boundary", "iterations",
    "se_lambda", "se_alpha",
]


def cmd_fit(args) -> int:
    x = _read_fit_data(args.data)
    methods = _methods(args.methods)
    opts = _options(args, args.seed)
    rows = []
    all_ok = True
    for m in methods:
        res = estimate(m, x, opts)
        rep = gof_report(
            res.params, x, modified=args.modified, bootstrap=args.bootstrap, method=m,
            seed=args.seed, options=opts, workers=args.threads,
        )
        all_ok &= res.converged
        se = res.std_errors or (None, None)
        rows.append({
            "method": m.value, "lambda": res.params.lam, "alpha": res.params.alpha,
            "objective": res.objective, **rep.as_dict(), "converged": res.converged,
            "at_boundary": res.at_boundary, "iterations": res.iterations,
            "se_lambda": se[0], "se_alpha": se[1],
        })
    meta = {"n": int(x.size), "modified": args.modified}
    if args.bootstrap:
        meta.update(bootstrap=args.bootstrap, bootstrap_scheme=BOOTSTRAP_SCHEME, seed=args.seed)
    _emit(render("fit", FIT_COLUMNS, rows, args.format, meta), args.out)
    return EXIT_OK if all_ok else EXIT_PARTIAL


# ---------------------------------------------------------------- gof

GOF_COLUMNS = [
    "lambda", "alpha", "neg_loglik", "cvm_w", "ad_a", "ks", "ks_pvalue",
    "bootstrap_failures", "modified", "converged",
]


def cmd_gof(args) -> int:
    x = read_data(args.data)
    fixed = args.lam is not None or args.alpha is not None
    if fixed and args.method is not None:
        raise InputError("give either --method or --lambda/--alpha, not both")
    if fixed:
        if args.lam is None or args.alpha is None:
            raise InputError("--lambda and --alpha must be given together")
        try:
            params = GrlParams(args.lam, args.alpha)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        method, converged = Method.MLE, True
    else:
        x = _read_fit_data(args.data)
        method = Method.parse(args.method or "MLE")
        res = estimate(method, x, _options(args, args.seed))
        params, converged = res.params, res.converged
    if args.bootstrap and x.size < 3:
        raise InputError("the bootstrap refits need at least 3 observations")
    rep = gof_report(
        params, x, modified=args.modified, bootstrap=args.bootstrap, method=method,
        seed=args.seed, options=_options(args, args.seed), workers=args.threads,
    )
    row = {"lambda": params.lam, "alpha": params.alpha, **rep.as_dict(), "converged": converged}
    columns = [c for c in GOF_COLUMNS if args.bootstrap or c not in ("ks_pvalue", "bootstrap_failures")]
    meta = {"n": int(x.size), "method": "fixed" if fixed else method.value}
    if args.bootstrap:
        meta.update(bootstrap=args.bootstrap, bootstrap_scheme=BOOTSTRAP_SCHEME, seed=args.seed)
    _emit(render("gof", columns, [row], args.format, meta), args.out)
    return EXIT_OK if converged else EXIT_PARTIAL


# ---------------------------------------------------------------- simulate

_CONFIG_KEYS = {
    "thetas", "sample_sizes", "replicates", "methods", "master_seed", "start",
    "n_starts", "step", "format", "out", "threads",
}


def load_run_config(path) -> dict:
    """Read and validate a JSON run config; unknown keys are rejected."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{path}: config must be a JSON object")
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise InputError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return raw


def _sim_config(args) -> tuple[SimConfig, dict]:
    raw = load_run_config(args.config) if args.config else {}
    for key in ("replicates", "master_seed"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    if args.sizes is not None:
        raw["sample_sizes"] = [int(s) for s in args.sizes.split(",")]
    if args.methods is not None:
        raw["methods"] = _methods(args.methods)
    if "master_seed" not in raw and args.seed_given:
        raw["master_seed"] = args.seed
    extra = {k: raw.pop(k) for k in ("format", "out", "threads") if k in raw}
    try:
        cfg = SimConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid simulation config: {exc}") from None
    return cfg, extra


def simulation_tables(report) -> tuple[list, list, list, list]:
    """Per-cell stats rows and rank rows, in config order."""
    cell_cols = ["lambda", "alpha", "n", "method", "abs_bias_lambda", "abs_bias_alpha",
                 "mse_lambda", "mse_alpha", "mre_lambda", "mre_alpha",
                 "mse_se_lambda", "mse_se_alpha", "failures", "n_ok"]
    cells = []
    for c in report.cells:
        for m in report.config.methods:
            s = c.stats[m]
            cells.append({
                "lambda": c.theta.lam, "alpha": c.theta.alpha, "n": c.n, "method": m.value,
                **{col: getattr(s, col) for col in cell_cols[4:]},
            })
    rank_cols = ["lambda", "alpha", "n", "row", "method", "rank"]
    ranks = []
    rt = report.ranks
    for c, key in zip(report.cells, rt.rows):
        rows = rt.rows[key]
        base = {"lambda": c.theta.lam, "alpha": c.theta.alpha, "n": c.n}
        for i, (name, param) in enumerate(METRICS):
            for j, m in enumerate(rt.methods):
                ranks.append({**base, "row": f"{name}_{param}", "method": m.value, "rank": rows[i, j]})
        for j, m in enumerate(rt.methods):
            ranks.append({**base, "row": "sum_ranks", "method": m.value, "rank": rt.block_sums[key][j]})
        for j, m in enumerate(rt.methods):
            ranks.append({**base, "row": "block_rank", "method": m.value, "rank": rt.block_ranks[key][j]})
    for j, m in enumerate(rt.methods):
        ranks.append({"row": "grand_total", "method": m.value, "rank": rt.grand_total[j]})
    for j, m in enumerate(rt.methods):
        ranks.append({"row": "overall_rank", "method": m.value, "rank": rt.overall_rank[j]})
    return cell_cols, cells, rank_cols, ranks


def cmd_simulate(args) -> int:
    cfg, extra = _sim_config(args)
    fmt = args.format if args.format_given else extra.get("format", args.format)
    out = args.out if args.out is not None else extra.get("out")
    threads = args.threads if args.threads_given else int(extra.get("threads", args.threads))
    if fmt not in ("csv", "json"):
        raise InputError(f"format must be csv or json, got {fmt!r}")
    report = run_study(cfg, workers=threads)
    cell_cols, cells, rank_cols, ranks = simulation_tables(report)
    meta = {
        "master_seed": cfg.master_seed, "replicates": cfg.replicates, "start": cfg.start,
        "n_starts": cfg.n_starts,
    }
    if fmt == "json":
        doc = {
            "schema": f"grl-output/{SCHEMA_VERSION}",
            "command": "simulate",
            "meta": meta,
            "cells": json.loads(render("simulate", cell_cols, cells, "json"))["rows"],
            "ranks": json.loads(render("simulate", rank_cols, ranks, "json"))["rows"],
        }
        _emit(json.dumps(doc, indent=2) + "\n", out)
    else:
        if out is None or out == "-":
            _emit(render("simulate", cell_cols, cells, "csv", meta) + "\n"
                  + render("simulate-ranks", rank_cols, ranks, "csv"), out)
        else:
            _emit(render("simulate", cell_cols, cells, "csv", meta), out)
            _emit(render("simulate-ranks", rank_cols, ranks, "csv", meta), _sibling(out, "ranks"))
    failed = any(s.failures for c in report.cells for s in c.stats.values())
    return EXIT_PARTIAL if failed else EXIT_OK


# ---------------------------------------------------------------- curves

CURVE_COLUMNS = ["t", "pdf", "cdf", "survival", "hazard"]


def parse_grid(spec: str) -> np.ndarray:
    """``lin:START:STOP:N`` or ``log:START:STOP:N`` with ``0 < START < STOP``, ``N >= 2``."""
    parts = spec.split(":")
    if len(parts) != 4 or parts[0] not in ("lin", "log"):
        raise InputError(f"grid must look like lin:START:STOP:N or log:START:STOP:N, got {spec!r}")
    try:
        start, stop, n = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise InputError(f"bad number in grid {spec!r}") from None
    if not (0.0 < start < stop and math.isfinite(stop)) or n < 2:
        raise InputError(f"grid needs 0 < START < STOP and N >= 2, got {spec!r}")
    if parts[0] == "lin":
        return np.linspace(start, stop, n)
    return np.geomspace(start, stop, n)


def cmd_curves(args) -> int:
    if args.ttt is not None:
        x = read_data(args.ttt)
        rows = [{"u": u, "ttt": v} for u, v in ttt_transform(x)]
        _emit(render("curves-ttt", ["u", "ttt"], rows, args.format, {"n": int(x.size)}), args.out)
        return EXIT_OK
    if args.lam is None or args.alpha is None:
        raise InputError("curves needs --lambda and --alpha (or --ttt DATA)")
    try:
        params = GrlParams(args.lam, args.alpha)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    t = parse_grid(args.grid)
    cols = (t, pdf(params, t), cdf(params, t), survival(params, t), hazard(params, t))
    rows = [dict(zip(CURVE_COLUMNS, vals)) for vals in zip(*cols)]
    meta = {"lambda": fmt_value(params.lam), "alpha": fmt_value(params.alpha), "grid": args.grid}
    _emit(render("curves", CURVE_COLUMNS, rows, args.format, meta), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name, default)


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit 2 is reserved for partial convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (env GRL_SEED, default 0)")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (env GRL_FORMAT, default csv)")
    common.add_argument("--out", default=None, help="output path, '-' for stdout (env GRL_OUT)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (env GRL_THREADS, default: all CPUs)")

    est = _Parser(add_help=False)
    est.add_argument("--start", default=None, metavar="LAM,ALPHA", help="starting point override")
    est.add_argument("--n-starts", type=int, default=5, help="number of optimizer starts")
    est.add_argument("--max-iter", type=int, default=2000, help="iteration cap per start")

    p = _Parser(prog="grl", description="GRL distribution fitting and simulation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", parents=[common, est], help="fit one or more methods to a data file")
    f.add_argument("data")
    f.add_argument("--methods", default=",".join(m.value for m in Method))
    f.add_argument("--bootstrap", type=int, default=0, metavar="B", help="bootstrap replicates for the KS p-value")
    f.add_argument("--modified", action="store_true", help="apply small-sample factors to W and A")
    f.set_defaults(func=cmd_fit)

    g = sub.add_parser("gof", parents=[common, est], help="goodness-of-fit report for one model")
    g.add_argument("data")
    g.add_argument("--method", default=None, help="fit by this method first (default MLE)")
    g.add_argument("--lambda", dest="lam", type=float, default=None)
    g.add_argument("--alpha", type=float, default=None)
    g.add_argument("--bootstrap", type=int, default=0, metavar="B")
    g.add_argument("--modified", action="store_true")
    g.set_defaults(func=cmd_gof)

    s = sub.add_parser("simulate", parents=[common], help="run the Monte Carlo comparison")
    s.add_argument("--config", default=None, help="JSON run config")
    s.add_argument("--replicates", type=int, default=None)
    s.add_argument("--sizes", default=None, help="comma-separated sample sizes")
    s.add_argument("--methods", default=None)
    s.add_argument("--master-seed", type=int, default=None)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("curves", parents=[common], help="tabulate pdf/cdf/survival/hazard or a TTT curve")
    c.add_argument("--lambda", dest="lam", type=float, default=None)
    c.add_argument("--alpha", type=float, default=None)
    c.add_argument("--grid", default="lin:0.01:10:200", help="lin|log:START:STOP:N")
    c.add_argument("--ttt", default=None, metavar="DATA", help="emit the scaled TTT curve of a data file")
    c.set_defaults(func=cmd_curves)
    return p


def _resolve_common(args):
    args.seed_given = args.seed is not None or ENV_PREFIX + "SEED" in os.environ
    args.format_given = args.format is not None or ENV_PREFIX + "FORMAT" in os.environ
    args.threads_given = args.threads is not None or ENV_PREFIX + "THREADS" in os.environ
    try:
        if args.seed is None:
            args.seed = int(_env("SEED", 0))
        if args.threads is None:
            args.threads = int(_env("THREADS", os.cpu_count() or 1))
    except ValueError as exc:
        raise InputError(f"bad environment value: {exc}") from None
    if args.format is None:
        args.format = _env("FORMAT", "csv")
    if args.format not in ("csv", "json"):
        raise InputError(f"format must be csv or json, got {args.format!r}")
    if args.out is None:
        args.out = _env("OUT", None)
    if args.threads < 1:
        raise InputError("--threads must be >= 1")
    if getattr(args, "bootstrap", 0) < 0:
        raise InputError("--bootstrap must be >= 0")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve_common(args)
        return args.func(args)
    except InputError as exc:
        print(f"grl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
