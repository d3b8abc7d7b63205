"""Command-line entry point: ``regdiff {test,simulate,realdata}``.

Exit codes: 0 completed, 1 null rejected (``test --fail-on-reject`` only),
2 usage or configuration error, 3 data error. Reports go to stdout and
warnings to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import load_csv
from .errors import ConfigError, DataError
from .procedure import TestConfig, TestReport, reports_to_json, run_test
from .realdata import RealDataConfig, run_alternative, run_null_calibration
from .regressors import RegressorSpec
from .rng import RngStream
from .simulation import ScenarioConfig, emit_table, run_cell, table_json

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3
MODE_ALIASES = {"lowdim": "lowdim_all", "lowdim_all": "lowdim_all", "dense20": "dense20",
                "dense": "dense20", "sparse2": "sparse2", "sparse": "sparse2"}


class UsageError(Exception):
    pass


def _csv_list(text):
    return [c.strip() for c in text.split(",") if c.strip()] if text else []


def _float_list(text):
    try:
        return [float(v) for v in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _add_common(p, stat=True):
    if stat:
        p.add_argument("--stat", choices=["t", "ta", "both"], default="both")
    p.add_argument("--kernel", choices=["gaussian", "laplace"], default="gaussian")
    p.add_argument("--regressor", choices=["gbt", "knn", "linear"], default="gbt")
    p.add_argument("--knn-k", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for replications (default: $REGDIFF_THREADS or all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regdiff", allow_abbrev=False,
                                     description="Machine-learning-assisted tests for equal regression functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", allow_abbrev=False, help="test two CSV samples")
    t.add_argument("--data1", required=True)
    t.add_argument("--data2", required=True)
    t.add_argument("--response", required=True)
    t.add_argument("--log-cols", type=_csv_list, default=[])
    t.add_argument("--drop-cols", type=_csv_list, default=[])
    t.add_argument("--format", choices=["json", "tsv"], default="json")
    t.add_argument("--pair-shuffle", type=_seed, default=None)
    t.add_argument("--fail-on-reject", action="store_true")
    _add_common(t)

    s = sub.add_parser("simulate", allow_abbrev=False, help="Monte Carlo size/power table")
    s.add_argument("--example", type=int, choices=[1, 2, 3], required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=_int_list, required=True, help="sample size per group (comma list)")
    s.add_argument("--beta-norms", type=_float_list, required=True)
    s.add_argument("--mode", choices=sorted(MODE_ALIASES), required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--format", choices=["tsv", "markdown", "json"], default="tsv")
    s.add_argument("--out", default=None)
    s.add_argument("--diagnostics", default=None, metavar="PATH",
                   help="write per-rep z-scores as JSON to PATH")
    _add_common(s, stat=False)

    r = sub.add_parser("realdata", allow_abbrev=False, help="real-data null or alternative protocol")
    r.add_argument("--csv", required=True)
    r.add_argument("--response", required=True)
    r.add_argument("--scenario", choices=["null-split", "median-split"], required=True)
    r.add_argument("--swap", type=float, default=0.05)
    r.add_argument("--reps", type=int, default=500)
    r.add_argument("--log-cols", type=_csv_list, default=[])
    r.add_argument("--drop-cols", type=_csv_list, default=[])
    r.add_argument("--format", choices=["json", "tsv"], default="json")
    _add_common(r, stat=False)
    return parser


def _test_config(args, statistic="both") -> TestConfig:
    reg = RegressorSpec(kind=args.regressor, knn_k=args.knn_k, seed=args.seed)
    return TestConfig(statistic=statistic, kernel_family=args.kernel, regressor=reg,
                      alpha=args.alpha, pair_shuffle=getattr(args, "pair_shuffle", None))


def _render_reports(reports, fmt) -> str:
    reports = [reports] if isinstance(reports, TestReport) else list(reports)
    if fmt == "tsv":
        return "\n".join(["\t".join(TestReport.TSV_FIELDS)] + [r.to_tsv() for r in reports]) + "\n"
    return reports_to_json(reports[0] if len(reports) == 1 else reports) + "\n"


def cmd_test(args, out) -> int:
    d1 = load_csv(args.data1, args.response, args.log_cols, args.drop_cols)
    d2 = load_csv(args.data2, args.response, args.log_cols, args.drop_cols)
    reports = run_test(d1, d2, _test_config(args, args.stat), RngStream(args.seed, 0))
    out.write(_render_reports(reports, args.format))
    group = [reports] if isinstance(reports, TestReport) else reports
    if args.fail_on_reject and any(r.reject for r in group):
        return EXIT_REJECT
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    mode = MODE_ALIASES[args.mode]
    tcfg = _test_config(args)
    cells = []
    for n in args.n:
        for b in args.beta_norms:
            cfg = ScenarioConfig(args.example, args.p, n, b, mode, args.reps,
                                 args.alpha, args.seed, tcfg)
            cells.append((cfg, run_cell(cfg, threads=args.threads)))
    # cells are produced by n first; present rows in beta order as given
    cells.sort(key=lambda c: (args.beta_norms.index(c[0].beta_norm), args.n.index(c[0].n_per_group)))
    text = table_json(cells) + "\n" if args.format == "json" else emit_table(cells, args.format)
    if args.diagnostics:
        Path(args.diagnostics).write_text(table_json(cells, diagnostics=True) + "\n")
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_realdata(args, out) -> int:
    d = load_csv(args.csv, args.response, args.log_cols, args.drop_cols)
    cfg = RealDataConfig(scenario=args.scenario, swap_fraction=args.swap, reps=args.reps,
                         alpha=args.alpha, test_cfg=_test_config(args), master_seed=args.seed)
    if cfg.scenario == "null_split":
        res = run_null_calibration(d, cfg, threads=args.threads)
        payload = {"scenario": "null_split", "n_rows": d.n_rows, "p": d.p, **res.to_dict()}
        if args.format == "tsv":
            keys = ["scenario", "reps", "rejection_rate_T", "rejection_rate_Ta", "n_rows", "p"]
            out.write("\t".join(keys) + "\n" + "\t".join(str(payload[k]) for k in keys) + "\n")
        else:
            out.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        out.write(_render_reports(run_alternative(d, cfg), args.format))
    return EXIT_OK


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "realdata": cmd_realdata}


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="regdiff: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except DataError as exc:
        print(f"regdiff: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"regdiff: cannot read input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"regdiff: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
