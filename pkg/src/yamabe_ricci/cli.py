"""Command-line front end.

Exit codes: 0 ok, 1 a verification check failed, 2 input error,
3 the Ricci lower bound is not positive (the report is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import battery, geom_models, isoperimetry, rearrange, yamabe_core
from .errors import DomainError, MetricSpecError, NotApplicable, ValidationError
from .functions import RadialFunction

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NOT_APPLICABLE = 0, 1, 2, 3

EPILOG = f"""\
metric JSON: {{"type": "round", "n": 4}}
             {{"type": "warped", "n": 4, "phi": "sin_eps", "eps": 0.1}}
             {{"type": "warped", "n": 4, "L": 3.14159.., "phi": [samples...]}}
             {{"type": "product", "p": 2, "a": 1.0, "q": 2, "b": 1.0}}
warps are validated on the radial grid: phi > 0 inside, |phi| <= {geom_models.CLOSURE_TOL:g}
at both poles and phi'(0) = 1, phi'(L) = -1 within {geom_models.CLOSURE_TOL:g}.
exit codes: 0 ok, 1 check failure, 2 input error, 3 Ricci lower bound not positive.
"""


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def _clean(obj):
    """Recursively replace non-finite floats by None and numpy values by Python ones."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def to_json(obj):
    # float repr is the shortest string that round-trips exactly
    return json.dumps(_clean(obj), indent=2) + "\n"


def to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else v for v in _clean(list(row))])
    return buf.getvalue()


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# input parsing
# --------------------------------------------------------------------------


def _load_json_arg(value, what):
    if value.startswith("@"):
        try:
            value = Path(value[1:]).read_text()
        except OSError as exc:
            raise MetricSpecError(what, f"cannot read {value[1:]!r}: {exc}") from exc
    try:
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise MetricSpecError(what, f"invalid JSON: {exc}") from exc


def parse_metric(args):
    if args.metric is None:
        raise MetricSpecError("metric", "--metric is required for this command")
    spec = _load_json_arg(args.metric, "metric")
    if isinstance(spec, dict) and args.grid_size is not None:
        spec = dict(spec, grid_size=args.grid_size)
    return geom_models.metric_from_spec(spec)


def parse_range(text):
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise MetricSpecError("range", f"expected start:stop:step, got {text!r}") from exc
    if not step > 0 or stop < start:
        raise MetricSpecError("range", "need step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def parse_function(value, metric):
    names = {e["name"]: e for e in battery.load_battery()}
    if value in names:
        return battery.battery_function(names[value], metric)
    obj = _load_json_arg(value, "function")
    try:
        f = RadialFunction.from_json(obj)
    except ValidationError as exc:
        raise MetricSpecError("function", str(exc)) from exc
    if len(f.values) != metric.grid_size:
        f = RadialFunction(metric.nodes, np.interp(metric.nodes, f.nodes, f.values))
    return f


def _d_choice(args):
    try:
        return float(args.d_choice)
    except ValueError:
        return args.d_choice


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_constants(args):
    rows = []
    for n in args.n or range(3, 9):
        c = yamabe_core.yamabe_constants(n)
        rows.append(
            {
                "n": c.n,
                "a_n": float(c.a_n),
                "a_n_exact": str(c.a_n),
                "p_n": float(c.p_n),
                "p_n_exact": str(c.p_n),
                "V_n": c.V_n,
                "Y_n": c.Y_n,
            }
        )
    if args.format == "csv":
        header = list(rows[0])
        return to_csv(header, [[r[k] for k in header] for r in rows]), EXIT_OK
    return to_json({"constants": rows}), EXIT_OK


def cmd_report(args):
    metric = parse_metric(args)
    options = yamabe_core.YamabeOptions(
        max_iters=args.max_iters,
        tol=args.tol if args.tol is not None else 1e-8,
        with_minimizer=not args.no_minimizer,
    )
    report = yamabe_core.theorem_a_report(metric, options)
    d = report.to_dict()
    if args.format == "csv":
        d["d_low"], d["d_high"] = d.pop("d_interval")
        text = to_csv(list(d), [list(d.values())])
    else:
        text = to_json(d)
    status = EXIT_OK if report.applicable else EXIT_NOT_APPLICABLE
    if report.applicable and not report.consistent:
        status = EXIT_CHECK
    return text, status


SWEEP_HEADER = ("rho", "V", "lb_ricci", "const_fn_value")


def _sweep_metric(args, value):
    base = _load_json_arg(args.metric, "metric") if args.metric else {}
    grid = args.grid_size or 1024
    if args.family == "product":
        if args.param != "delta":
            raise MetricSpecError("param", "the product family is swept over 'delta'")
        if not value > 0:
            raise MetricSpecError("range", "delta must be positive")
        return geom_models.ProductSphereMetric(
            base.get("p", 2), base.get("q", 2), math.sqrt(value), base.get("b", 1.0), grid
        )
    if args.param != "eps":
        raise MetricSpecError("param", "the warp family is swept over 'eps'")
    try:
        return geom_models.sin_eps_metric(args.n or base.get("n", 4), value, grid)
    except ValidationError as exc:
        raise MetricSpecError("range", str(exc)) from exc


def cmd_sweep(args):
    values = parse_range(args.range)
    rows = []
    for value in values:
        metric = _sweep_metric(args, value)
        rho = metric.ricci_lower_bound
        lb = yamabe_core.ricci_yamabe_lower_bound(metric) if rho > 0 else None
        rows.append((value, rho, metric.volume, lb, yamabe_core.constant_function_value(metric)))
    header = (args.param,) + SWEEP_HEADER
    if args.format == "json":
        return to_json({"rows": [dict(zip(header, r)) for r in rows]}), EXIT_OK
    return to_csv(header, rows), EXIT_OK


def cmd_rearrange(args):
    metric = parse_metric(args)
    f = parse_function(args.function, metric)
    target, f_star = rearrange.spherical_rearrangement(metric, f)
    prof = rearrange.distribution_profile(metric, f, args.levels)
    mu_star = rearrange.superlevel_volume(target, f_star, prof.levels)
    if args.format == "csv":
        return to_csv(("t", "mu", "mu_star"), zip(prof.levels, prof.masses, mu_star)), EXIT_OK
    out = {
        "target": target.to_spec(),
        "V0": metric.volume,
        "f_star": f_star.to_json(),
        "profile": {"t": prof.levels, "mu": prof.masses, "mu_star": mu_star},
    }
    return to_json(out), EXIT_OK


ISO_HEADER = ("beta", "h_lower", "h_candidate", "A", "d_used")


def cmd_isoprofile(args):
    metric = parse_metric(args)
    betas = np.linspace(0.0, 1.0, args.points + 2)[1:-1]
    status = EXIT_OK
    try:
        rows = isoperimetry.profile_sweep(metric, betas, _d_choice(args))
    except NotApplicable:
        cand = isoperimetry.coordinate_ball_profile(metric, betas)
        rows = [(b, None, h, None, None) for b, h in zip(betas, cand)]
        status = EXIT_NOT_APPLICABLE
    print(f"note: {isoperimetry.ISOPERIMETRIC_NOTE}", file=sys.stderr)
    if args.format == "json":
        return (
            to_json({"rows": [dict(zip(ISO_HEADER, r)) for r in rows], "note": isoperimetry.ISOPERIMETRIC_NOTE}),
            status,
        )
    return to_csv(ISO_HEADER, rows), status


def cmd_verify_chain(args):
    metric = parse_metric(args)
    rel_tol = args.tol if args.tol is not None else 1e-6
    if not metric.ricci_lower_bound > 0:
        empty = {"applicable": False, "rho": metric.ricci_lower_bound, "results": [], "all_ok": False}
        return to_json(empty), EXIT_NOT_APPLICABLE
    results = []
    for entry in battery.load_battery():
        f = battery.battery_function(entry, metric)
        g = rearrange.gradient_comparison(metric, f, _d_choice(args), rel_tol)
        results.append({"name": entry["name"], "lhs": g.lhs, "rhs": g.rhs, "ratio": g.ratio, "ok": g.ok})
    all_ok = all(r["ok"] for r in results)
    status = EXIT_OK if all_ok else EXIT_CHECK
    if args.format == "csv":
        header = ("name", "lhs", "rhs", "ratio", "ok")
        return to_csv(header, [[r[k] for k in header] for r in results]), status
    out = {"applicable": True, "scale": g.scale, "d": g.d, "A": g.A, "results": results, "all_ok": all_ok}
    return to_json(out), status


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--metric", help="metric JSON object, or @path to a JSON file")
    common.add_argument("--grid-size", type=int, help="number of radial nodes (default 1024)")
    common.add_argument("--levels", type=int, default=64, help="quantile levels for profiles")
    common.add_argument("--tol", type=float, help="solver or check tolerance")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--d-choice", default="myers", help="myers | pole | a number")

    parser = argparse.ArgumentParser(
        prog="yamabe-ricci",
        description="Ricci-curvature lower bounds for Yamabe constants on model metrics.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, default_format, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, epilog=EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--format", choices=("json", "csv"), default=default_format)
        p.set_defaults(func=func)
        return p

    p = add("constants", cmd_constants, "json", "a_n, p_n, V_n and Y_n")
    p.add_argument("--n", type=int, action="append", help="dimension (repeatable; default 3..8)")

    p = add("report", cmd_report, "json", "all bounds for one metric")
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--no-minimizer", action="store_true")

    p = add("sweep", cmd_sweep, "csv", "bounds over a one-parameter family")
    p.add_argument("--family", choices=("product", "warp"), required=True)
    p.add_argument("--param", choices=("delta", "eps"), required=True)
    p.add_argument("--range", required=True, help="start:stop:step, both ends included")
    p.add_argument("--n", type=int, help="dimension of the warp family (default 4)")

    p = add("rearrange", cmd_rearrange, "json", "spherical rearrangement of a radial function")
    p.add_argument("--function", default="cos",
                   help="battery entry name, or JSON {nodes, values} / @path")

    p = add("isoprofile", cmd_isoprofile, "csv", "isoperimetric lower bound vs coordinate balls")
    p.add_argument("--points", type=int, default=49, help="number of interior beta values")

    add("verify-chain", cmd_verify_chain, "json", "gradient comparison over the bundled battery")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        text, status = args.func(args)
    except NotApplicable as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except (MetricSpecError, ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(text, args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
