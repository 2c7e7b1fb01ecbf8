"""Command-line surface: analyze / simulate / compare / sweep.

Every command is a pure function of its flags, the parameter file, and
the seed; primary output files are byte-identical across repeated
invocations (and across --threads settings for simulate).

Exit codes: 0 ok, 1 sweep target unattainable, 2 validation, 3 numerical
failure, 4 bound violation under --strict.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .compare import build_comparison, freedman_diaconis_edges
from .errors import BudgetError, NumericalError, ParameterLoadError, ParameterValidationError
from .interference import interference_distribution
from .oracle import mc_interference
from .params import default_params_path, load_params

EXIT_OK = 0
EXIT_UNATTAINABLE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_BOUND = 4


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _parse_grid(text: str):
    if text == "auto":
        return None
    try:
        lo, hi, n = text.split(":")
        return (float(lo), float(hi), int(n))
    except ValueError as exc:
        raise ParameterValidationError(f"bad grid spec {text!r}, want min:max:points") from exc


def _parse_range(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ParameterValidationError(f"bad range {text!r}, want start:stop:step") from exc
    if step <= 0 or stop < start:
        raise ParameterValidationError("range must be ascending with positive step")
    return np.arange(start, stop + 0.5 * step, step)


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _load(args):
    return load_params(args.params, args.cm)


def cmd_analyze(args) -> int:
    params = _load(args)
    dist = interference_distribution(args.tc, params, _parse_grid(args.grid))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tag = f"{args.cm}_tc{args.tc:g}"
    density_path = out / f"density_{tag}.csv"
    cdf = dist.cdf(dist.grid)
    _write_csv(density_path, ["x", "density", "cumulative"],
               ([_fmt(x), _fmt(d), _fmt(c)]
                for x, d, c in zip(dist.grid, dist.density_values, cdf)))
    summary = {
        "cm": args.cm,
        "tc_ns": args.tc,
        "mean": dist.mean,
        "variance": dist.variance,
        "mass_at_zero": dist.mass_at_zero,
        "full_power_mass": dist.full_power_mass,
        "ray_rate_fitted_per_ns": params.ray_rate_fitted,
        "analytic_m": params.analytic_m,
        "truncation": dist.diagnostics,
        "density_csv": density_path.name,
    }
    json_path = out / f"analyze_{tag}.json"
    json_path.write_text(json.dumps(summary, indent=2) + "\n")
    print(f"analyze {args.cm} tc={args.tc:g}ns: mean={dist.mean:.6g} "
          f"variance={dist.variance:.6g} mass_at_zero={dist.mass_at_zero:.6g} "
          f"-> {density_path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _load(args)
    mc = mc_interference(params, args.tc, args.runs, args.seed,
                         mode=args.mode, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tag = f"{args.cm}_tc{args.tc:g}_r{args.runs}_s{args.seed}"
    samples_path = out / f"samples_{tag}.csv"
    _write_csv(samples_path, ["run_index", "interference_power"],
               ([str(i), _fmt(v)] for i, v in enumerate(mc.samples)))
    edges = freedman_diaconis_edges(mc.samples)
    counts, _ = np.histogram(mc.samples, bins=edges)
    hist_path = out / f"histogram_{tag}.csv"
    _write_csv(hist_path, ["bin_left", "bin_right", "count"],
               ([_fmt(l), _fmt(r), str(int(c))]
                for l, r, c in zip(edges[:-1], edges[1:], counts)))
    print(f"simulate {args.cm} tc={args.tc:g}ns runs={args.runs}: "
          f"mean={mc.mean:.6g} variance={mc.variance:.6g} -> {samples_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    params = _load(args)
    report = build_comparison(params, args.tc, args.runs, args.seed,
                              cm_label=args.cm, mode=args.mode,
                              grid_spec=_parse_grid(args.grid))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tag = f"{args.cm}_tc{args.tc:g}_r{args.runs}_s{args.seed}"
    report_path = out / f"report_{tag}.json"
    report_path.write_text(report.to_json() + "\n")
    flags = " ".join(f"{k}={'ok' if v else 'VIOLATED'}"
                     for k, v in report.bound_flags.items())
    print(f"compare {args.cm} tc={args.tc:g}ns: tv={report.tv_interference:.4f} "
          f"path_count_tv={report.path_count['tv']:.4f} {flags} -> {report_path}")
    if args.strict and not report.all_bounds_hold:
        print("moment upper bound violated", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = _load(args)
    tcs = _parse_range(args.tc_range)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    selected = None
    for tc in tcs:
        dist = interference_distribution(float(tc), params)
        rows.append((float(tc), dist.mean, dist.variance,
                     dist.mass_at_zero, dist.full_power_mass))
        if selected is None and dist.mean <= args.target:
            selected = float(tc)
    table_path = out / f"sweep_{args.cm}.csv"
    _write_csv(table_path,
               ["tc_ns", "mean", "variance", "mass_at_zero", "full_power_mass"],
               ([_fmt(v) for v in row] for row in rows))
    result = {
        "cm": args.cm,
        "target_mean_power": args.target,
        "selected_tc_ns": selected,
        "attained": selected is not None,
        "table_csv": table_path.name,
    }
    (out / f"sweep_{args.cm}.json").write_text(json.dumps(result, indent=2) + "\n")
    if selected is None:
        print(f"sweep {args.cm}: target {args.target:g} unattainable in range",
              file=sys.stderr)
        return EXIT_UNATTAINABLE
    print(f"sweep {args.cm}: smallest tc with mean <= {args.target:g} "
          f"is {selected:g}ns -> {table_path}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uwbmpi",
        description="Multipath interference power statistics for IR-UWB "
                    "under the IEEE 802.15.4a channel model.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tc=True, mc=False):
        p.add_argument("--params", default=str(default_params_path()),
                       help="parameter document (default: bundled file)")
        p.add_argument("--cm", required=True, choices=["cm1", "cm2", "cm3", "cm4"])
        if tc:
            p.add_argument("--tc", type=float, required=True, help="chip time, ns")
        p.add_argument("--out", default=".", help="output directory")
        if mc:
            p.add_argument("--runs", type=int, default=100000)
            p.add_argument("--seed", type=int, default=1)
            p.add_argument("--mode", default="auto",
                           choices=["auto", "simplified", "full"],
                           help="oracle fidelity (auto: full when the "
                                "parameter file carries the oracle block)")

    p = sub.add_parser("analyze", help="closed-form interference distribution")
    common(p)
    p.add_argument("--grid", default="auto", help="density grid min:max:points")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte-Carlo interference samples")
    common(p, mc=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="analytic vs Monte-Carlo report")
    common(p, mc=True)
    p.add_argument("--grid", default="auto")
    p.add_argument("--strict", action="store_true",
                   help="exit 4 when a moment upper bound is violated")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="smallest chip time meeting a mean-power target")
    common(p, tc=False)
    p.add_argument("--tc-range", required=True, help="start:stop:step, ns")
    p.add_argument("--target", type=float, required=True,
                   help="target analytic mean interference power")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterLoadError, ParameterValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, BudgetError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
