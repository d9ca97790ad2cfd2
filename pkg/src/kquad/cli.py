"""Command-line interface.

    kquad run <config>                      # full benchmark sweep from a config file
    kquad compress --input data.csv ...     # one dataset -> one rule CSV
    kquad rates --summary results_summary.csv --model <curve spec>

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench, spectral
from .errors import InputError, NumericalError
from .kernels import parse_kernel
from .quadrature import TargetMeasure, save_rule, worst_case_error


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kquad", description="kernel quadrature benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config file")
    run.add_argument("config")

    comp = sub.add_parser("compress", help="compress one dataset into a quadrature rule")
    comp.add_argument("--input", required=True, help="CSV of data points")
    comp.add_argument("--kernel", required=True, help="e.g. gaussian:sigma=median")
    comp.add_argument("--method", required=True, help=f"one of {bench.METHODS}")
    comp.add_argument("--m", required=True, type=int)
    comp.add_argument("--seed", required=True, type=int)
    comp.add_argument("--output", required=True, help="rule CSV to write")
    comp.add_argument("--standardize", action="store_true")

    rates = sub.add_parser("rates", help="fit slopes and overlay a theoretical curve")
    rates.add_argument("--summary", required=True, help="summary CSV from 'kquad run'")
    rates.add_argument("--model", required=True, help="curve spec, e.g. sobolev:s=1,d=1")
    rates.add_argument("--output", default=None, help="optional CSV of curve overlays")
    return parser


def _parse_curve(text: str):
    head, _, tail = text.strip().partition(":")
    kwargs = {}
    if tail:
        for item in tail.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise InputError(f"malformed curve parameter {item!r}")
            key = key.strip().lower()
            if key in ("s", "d"):
                kwargs[key] = int(value)
            elif key in ("gamma", "c", "constant"):
                kwargs[key] = float(value)
            else:
                raise InputError(f"unknown curve parameter {key!r}")
    return head.strip().lower(), kwargs


def _cmd_run(args) -> int:
    config = bench.parse_config(args.config)
    raw, summary = bench.run_to_files(config)
    print(f"raw results: {raw}")
    print(f"summary:     {summary}")
    return 0


def _cmd_compress(args) -> int:
    ds = bench.load_csv(args.input, standardize=args.standardize)
    points = ds.points
    if bench._method_base(args.method) not in bench.METHODS:
        raise InputError(f"unknown method {args.method!r}; expected one of {bench.METHODS}")
    kernel = parse_kernel(args.kernel, points=points, rng=np.random.default_rng(args.seed))
    target = TargetMeasure.discrete(points)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    f_means = None
    if bench._method_base(args.method) in ("f-greedy", "fp-greedy"):
        f_means = bench.target_moments(kernel, points, target)
    rule = bench.build_rule(points, kernel, args.method, args.m, rng, target, f_means=f_means)
    save_rule(rule, args.output)
    err = worst_case_error(rule, target, kernel)
    print(f"wrote {len(rule)} nodes to {args.output}; worst-case error {err:.6g}")
    return 0


def _cmd_rates(args) -> int:
    summary = bench.read_summary_csv(args.summary)
    curve, kwargs = _parse_curve(args.model)
    by_method: dict[str, list] = {}
    for row in summary:
        by_method.setdefault(row.method, []).append(row)
    out_lines = ["method,m,error_median,predicted_error"]
    for method, rows in sorted(by_method.items()):
        rows.sort(key=lambda r: r.m)
        ms = [r.m for r in rows]
        errs = [r.error_median for r in rows]
        slope, _, r2 = spectral.rate_slope(ms, errs)
        pred = spectral.theoretical_rate_curve(curve, ms, **kwargs)
        # anchor the overlay to the first measured point
        scale = errs[0] / pred.predicted_error[0]
        overlay = pred.predicted_error * scale
        print(f"{method}: fitted slope {slope:+.3f} (r^2 {r2:.3f}) vs {pred.label}")
        for m, e, p in zip(ms, errs, overlay):
            out_lines.append(f"{method},{m},{e!r},{float(p)!r}")
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(out_lines) + "\n")
        print(f"curve overlays: {args.output}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are input errors here
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compress":
            return _cmd_compress(args)
        return _cmd_rates(args)
    except (InputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
