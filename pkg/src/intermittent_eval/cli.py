"""Command-line interface: ``generate``, ``evaluate``, ``rank`` and ``reproduce``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import yaml

from .demandgen import KINDS, PROFILES, GeneratorSpec, generate, read_series_csv, write_series_csv
from .forecast import Forecaster, read_trace_csv, run_forecaster
from .harness import (
    DEFAULT_SEED,
    DEFAULT_MEASURES,
    ExperimentSpec,
    TABLE_SETTINGS,
    render_csv,
    render_text,
    reproduce_table,
    run_experiment,
)
from .meanest import MeanEstimatorSpec, estimate_mean_path
from .measures import NEEDS_INSAMPLE, MeasureId, evaluate
from .rng import RandomStream, derive_seed


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="master seed")
    parser.add_argument("--out", choices=("csv", "text"), default=argparse.SUPPRESS if suppress else "text")
    parser.add_argument("--mean-est", dest="mean_est", default=default,
                        help="series-mean | window:K | regression | known")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intermittent-eval",
                                     description="Intermittent demand forecasting and mean-based error measures.")
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a demand series CSV")
    g.add_argument("--table", type=int, choices=sorted(TABLE_SETTINGS),
                   help="use the generator of a reproduced table")
    g.add_argument("--kind", choices=KINDS)
    g.add_argument("-n", "--n", type=int, required=True, help="number of periods")
    for name in ("p0", "ell", "size-p", "size", "p01", "p10"):
        g.add_argument(f"--{name}", type=float)
    for name in ("period", "change", "end"):
        g.add_argument(f"--{name}", type=int)
    g.add_argument("--profile", choices=PROFILES)
    g.add_argument("-o", "--output", help="output path (default: stdout)")

    e = sub.add_parser("evaluate", parents=[common], help="score a forecast trace")
    e.add_argument("--series", required=True, help="series CSV (t,demand[,mean])")
    e.add_argument("--forecasts", required=True, help="forecast CSV (t,forecast)")
    e.add_argument("--baseline", help="baseline forecast CSV (default: RW on the series)")
    e.add_argument("--insample", help="in-sample series CSV for scaled measures (default: the series)")
    e.add_argument("--measures", default=",".join(DEFAULT_MEASURES), help="comma-separated measure names")

    r = sub.add_parser("rank", parents=[common], help="run an experiment from a config file")
    r.add_argument("--config", required=True, help="YAML or JSON mapping of experiment fields")

    p = sub.add_parser("reproduce", parents=[common], help="regenerate one of the results tables")
    p.add_argument("--table", type=int, required=True, choices=sorted(TABLE_SETTINGS))
    p.add_argument("--replications", type=int, default=1)
    return parser


def _generator_from_args(args) -> GeneratorSpec:
    if args.table is not None:
        return TABLE_SETTINGS[args.table]
    if args.kind is None:
        raise ValueError("generate needs --kind or --table")
    fields = {"p0": args.p0, "ell": args.ell, "size_p": args.size_p, "period": args.period,
              "size": args.size, "p01": args.p01, "p10": args.p10, "profile": args.profile,
              "change": args.change, "end": args.end}
    if args.kind == "regular-intermittent":
        return GeneratorSpec.regular_intermittent(args.period, args.size or 1.0, args.p0)
    if args.kind == "obsolescence" and args.profile == "abrupt-to-zero" and args.end is None:
        fields["end"] = args.change
    return GeneratorSpec(args.kind, **{k: v for k, v in fields.items() if v is not None})


def _cmd_generate(args, out) -> int:
    spec = _generator_from_args(args)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    series, mean = generate(spec, args.n, RandomStream(derive_seed(seed, spec.key)))
    if args.output:
        write_series_csv(args.output, series, mean)
    else:
        write_series_csv(out, series, mean)
    return 0


def _cmd_evaluate(args, out, err) -> int:
    series, known = read_series_csv(args.series)
    trace = read_trace_csv(args.forecasts)
    if trace.size != len(series):
        raise ValueError("forecast and series CSVs differ in length")
    est = MeanEstimatorSpec.parse(args.mean_est or ("known" if known is not None else "series-mean"))
    mean = estimate_mean_path(est, series, known=known)
    if args.baseline:
        baseline = read_trace_csv(args.baseline)
    else:
        baseline = run_forecaster(Forecaster("RW"), series)
    insample = read_series_csv(args.insample)[0].demands if args.insample else series.demands

    names = [m.strip() for m in args.measures.split(",") if m.strip()]
    results = []
    for name in names:
        mid = MeasureId.parse(name)
        value = evaluate(mid, series, trace, mean, baseline=baseline,
                         insample=insample if mid.base in NEEDS_INSAMPLE else None)
        results.append((name, value))

    if args.out == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["measure", "value", "undefined_reason"])
        for name, v in results:
            w.writerow([name, f"{v.value:.5f}" if v.defined else "", "" if v.defined else v.reason])
    else:
        width = max(len(n) for n, _ in results)
        for name, v in results:
            out.write(f"{name.ljust(width)}  {v}\n")
    return _undefined_status([(n, [v]) for n, v in results], err)


def _undefined_status(per_measure, err) -> int:
    status = 0
    for name, values in per_measure:
        if not any(v.defined for v in values):
            reasons = ", ".join(sorted({v.reason for v in values}))
            err.write(f"error: {name} is undefined for every forecaster ({reasons})\n")
            status = 2
    return status


def _load_config(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError("config must be a mapping of experiment fields")
    return data


def _report_status(report, err) -> int:
    per_measure = [(m, [report.cell(m, f).value for f in report.spec.forecasters])
                   for m in report.spec.measures]
    return _undefined_status(per_measure, err)


def _cmd_rank(args, out, err) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.mean_est is not None:
        cfg["mean_estimator"] = args.mean_est
    report = run_experiment(ExperimentSpec.from_config(cfg))
    out.write(render_csv([report]) if args.out == "csv" else render_text(report))
    return _report_status(report, err)


def _cmd_reproduce(args, out, err) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    est = MeanEstimatorSpec.parse(args.mean_est) if args.mean_est else None
    reports, text = reproduce_table(args.table, seed, args.replications, est)
    if args.out == "csv":
        out.write(render_csv(reports))
    else:
        out.write(text)
    return _report_status(reports[0], err)


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args, out)
        if args.command == "evaluate":
            return _cmd_evaluate(args, out, err)
        if args.command == "rank":
            return _cmd_rank(args, out, err)
        return _cmd_reproduce(args, out, err)
    except (ValueError, OSError) as exc:
        err.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
