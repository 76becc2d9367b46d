"""Command line interface: ``gibbs-forecast <command> [options]``.

Commands: simulate, select, evaluate, grid, run, bench-table1.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import files
from .experiment import REPORT_COLUMNS, format_table1, run_experiment, table1_configs
from .predictors import ModelSpec, complexity_bound, linear_catalog
from .risk import empirical_risk, holdout_errors
from .selection import SelectionMode, resolve_grid, select
from .series_gen import simulate

SEED_ENV = "GIBBS_FORECAST_SEED"

log = logging.getLogger("gibbs_forecast")


def _seed(args, fallback: int) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    if os.environ.get(SEED_ENV):
        return int(os.environ[SEED_ENV])
    return fallback


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    if args.config:
        cfg = files.load_config(files.read_json(args.config))
        spec, n, burn_in = cfg.process, cfg.n_train, cfg.burn_in
        seed = _seed(args, cfg.master_seed)
    else:
        spec = files.load_process(files.read_json(args.process))
        if args.n is None:
            raise ValueError("--n is required with --process")
        n, burn_in, seed = args.n, None, _seed(args, 0)
    if args.n is not None:
        n = args.n
    if args.burn_in is not None:
        burn_in = args.burn_in
    series = simulate(spec, n, burn_in, seed)
    text = files.series_to_csv(series)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _catalog(args, n: int):
    if args.catalog:
        catalog = files.load_catalog(files.read_json(args.catalog))
        models = tuple(m if m.d is not None else m.with_complexity(
            complexity_bound(m, args.lip_of_risk)) for m in catalog.models)
        return replace(catalog, models=models)
    return linear_catalog(args.p_max, n, args.radius, lip_of_risk=args.lip_of_risk)


def cmd_select(args) -> int:
    series = files.read_series(args.series)
    catalog = _catalog(args, series.n)
    mode = SelectionMode(args.mode, args.K if args.mode == "practical" else None)
    result = select(catalog, series, mode, args.mc_samples, _seed(args, 0), grid=args.grid,
                    max_proposals=args.max_proposals)
    if result.near_tie:
        log.warning("winning criterion margin %.3g is below twice its Monte-Carlo "
                    "standard error %.3g", result.margin, result.margin_se)
    out = _out_dir(args)
    files.write_json(out / "selection.json", result.to_dict())
    (out / "criterion_table.csv").write_text(result.table_csv())
    print(f"p_hat={result.p_hat} ell_hat={result.ell_hat} lambda_hat={result.lambda_hat:g}")
    return 0


def cmd_evaluate(args) -> int:
    series = files.read_series(args.series)
    theta = files.load_param_point(files.read_json(args.theta))
    skip = theta.model.p if args.skip is None else args.skip
    report = holdout_errors(theta, series, skip).to_dict()
    report["empirical_risk"] = empirical_risk(theta, series).value
    report["schema_version"] = files.SCHEMA_VERSION
    text = files.dumps(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_grid(args) -> int:
    model = ModelSpec(args.family, args.p, args.ell, args.radius,
                      args.lip_cap if args.lip_cap is not None else args.radius)
    if args.preset == "theoretical":
        model = model.with_complexity(complexity_bound(model, args.lip_of_risk))
    grid = resolve_grid(model, args.n, args.preset)
    doc = {"model": model.to_dict(), "n": args.n, **grid.to_dict()}
    sys.stdout.write(files.dumps(doc))
    return 0


def _write_report(out: Path, report, stem: str = "report") -> None:
    files.write_json(out / f"{stem}.json", report.to_dict())
    (out / f"{stem}.csv").write_text(report.rows_csv())
    if report.series:
        files.write_json(out / f"{stem}_series.json",
                         {str(k): v for k, v in sorted(report.series.items())})


def cmd_run(args) -> int:
    cfg = files.load_config(files.read_json(args.config))
    cfg = replace(cfg, master_seed=_seed(args, cfg.master_seed))
    if args.mc_samples is not None:
        cfg = replace(cfg, mc_samples=args.mc_samples)
    report = run_experiment(cfg, workers=args.workers, keep_series=args.keep_series)
    out = _out_dir(args)
    _write_report(out, report)
    sys.stdout.write(format_table1([report]))
    return 0


def cmd_bench(args) -> int:
    overrides = {"repetitions": args.reps, "master_seed": _seed(args, 0)}
    if args.mc_samples is not None:
        overrides["mc_samples"] = args.mc_samples
    out = _out_dir(args)
    reports = []
    for i, cfg in enumerate(table1_configs(**overrides)):
        report = run_experiment(cfg, workers=args.workers, keep_series=args.keep_series)
        _write_report(out, report, f"report_{i}")
        reports.append(report)
    table = format_table1(reports)
    (out / "table1.txt").write_text(table)
    files.write_json(out / "report.json", {
        "schema_version": files.SCHEMA_VERSION,
        "experiments": [r.to_dict() for r in reports]})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("experiment",) + REPORT_COLUMNS)
    for r in reports:
        for row in csv.reader(io.StringIO(r.rows_csv())):
            if row[0] != "rep":
                w.writerow([r.config.label] + row)
    (out / "report.csv").write_text(buf.getvalue())
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gibbs-forecast",
                                     description="Gibbs-estimator model selection for "
                                                 "one-step time series forecasting")
    parser.add_argument("--verbose", "-v", action="store_true",
                        help="emit sampler diagnostics as JSON lines on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic series CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--process", help="process spec JSON file")
    src.add_argument("--config", help="experiment config JSON (uses its process and n_train)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="output CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="run model selection on a series file")
    p.add_argument("--series", required=True)
    p.add_argument("--catalog", help="model catalog JSON; default: linear p=1..p_max")
    p.add_argument("--p-max", type=int, default=8)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--lip-of-risk", type=float, default=1.0)
    p.add_argument("--grid", choices=["fixed", "theoretical"], default="fixed")
    p.add_argument("--mode", choices=["practical", "theoretical"], default="practical")
    p.add_argument("--K", type=float, default=0.1)
    p.add_argument("--mc-samples", type=int, default=10_000)
    p.add_argument("--max-proposals", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="score a parameter point on a series")
    p.add_argument("--series", required=True)
    p.add_argument("--theta", required=True,
                   help="parameter point JSON (or a selection.json)")
    p.add_argument("--skip", type=int, default=None, help="default: the model's p")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="print a model's temperature grid")
    p.add_argument("--family", choices=["linear", "neural", "fourier"], default="linear")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--lip-cap", type=float, default=None)
    p.add_argument("--lip-of-risk", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--preset", choices=["theoretical", "fixed"], default="theoretical")
    p.set_defaults(func=cmd_grid)

    for name, func, helptext in (("run", cmd_run, "run one experiment config"),
                                 ("bench-table1", cmd_bench,
                                  "reproduce the AR(3) simulation table")):
        p = sub.add_parser(name, help=helptext)
        if name == "run":
            p.add_argument("--config", required=True)
        else:
            p.add_argument("--reps", type=int, default=20)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mc-samples", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--keep-series", action="store_true")
        p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(message)s", stream=sys.stderr)
    if args.verbose:
        log.setLevel(logging.DEBUG)
    try:
        return args.func(args)
    except files.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
