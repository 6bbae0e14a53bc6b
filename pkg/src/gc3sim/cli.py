"""Command-line front end.

Subcommands: simulate, bounds, sweep, oracle-check.  Flags mirror the
ExperimentConfig fields and override values loaded from --config.  Rows go
to --out (default stdout) as CSV, or JSON with --format json; human-facing
summaries go to stderr so the data stream stays byte-deterministic.

Exit codes: 0 success, 1 usage/config error, 2 oracle mismatch.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import sys

from .bounds import gap_ratio_trend, sparseness_lower_bound, LowerBoundInputs
from .experiments import (
    ConfigError,
    ExperimentConfig,
    cmd_bounds,
    cmd_oracle_check,
    cmd_simulate,
    cmd_sweep,
    emit_csv,
    emit_json,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this harness reserves 2 for oracle
    # mismatches, so route usage problems through exit code 1 instead.
    def error(self, message):
        raise _UsageError(message)


def _parse_n_list(values) -> list:
    out = []
    for item in values:
        for token in str(item).split(","):
            token = token.strip()
            if token:
                out.append(int(token))
    return out


def _add_config_flags(sub):
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--n", action="append", metavar="N[,N...]",
                     help="agent counts (repeatable or comma-separated)")
    sub.add_argument("--scheme", choices=("gc3", "naive"))
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--c", type=float)
    sub.add_argument("--c-prime", type=float, dest="c_prime")
    sub.add_argument("--p-ch", type=float, dest="p_ch")
    sub.add_argument("--eta", type=float)
    sub.add_argument("--e1", type=float)
    sub.add_argument("--e2", type=float)
    sub.add_argument("--trials", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--t", type=int, help="explicit broadcast rounds (required for epsilon=0)")
    sub.add_argument("--fixed-graph", action="store_true", default=None,
                     dest="fixed_graph", help="reuse one sampled graph for all trials")
    sub.add_argument("--p-tar", type=float, dest="p_tar")
    sub.add_argument("--d-cap", type=float, dest="d_cap")
    sub.add_argument("--e-cap", type=float, dest="e_cap")
    sub.add_argument("--workers", type=int)
    sub.add_argument("--out", help="output file (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gc3sim", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subs = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("simulate", "Monte Carlo block-error and energy campaign"),
        ("bounds", "formula-only bound sweep (no simulation)"),
        ("sweep", "simulate across n and report the decay trend"),
    ):
        sub = subs.add_parser(name, help=helptext)
        _add_config_flags(sub)

    oc = subs.add_parser("oracle-check", help="decoder/oracle replay checks")
    oc.add_argument("--n-max", type=int, default=6, dest="n_max")
    oc.add_argument("--cases", type=int, default=200)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--out", help="directory for serialized mismatching cases")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for f in dataclasses.fields(ExperimentConfig):
        if f.name == "n_list":
            continue
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    if args.n:
        overrides["n_list"] = _parse_n_list(args.n)
    if overrides:
        config = config.replace(**overrides)
    config.validate()
    return config


@contextlib.contextmanager
def _open_out(path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _emit(rows, args) -> None:
    with _open_out(args.out) as fh:
        if args.format == "json":
            emit_json(rows, fh)
        else:
            emit_csv(rows, fh)


def _print_gap_summary(config: ExperimentConfig) -> None:
    p_tars = [config.p_tar] * len(config.n_list) if config.p_tar is not None else None
    d_caps = [config.d_cap] * len(config.n_list) if config.d_cap is not None else None
    try:
        rows = gap_ratio_trend(config.n_list, config.e1, config.e2, config.epsilon,
                               config.c, config.p_ch, p_tars, d_caps)
    except ValueError as exc:
        print(f"# gap summary unavailable: {exc}", file=sys.stderr)
        return
    print("# n  t  scheme_energy  lower_bound  ratio  ratio/lnln(n)", file=sys.stderr)
    for row in rows:
        if row.ratio is None:
            print(f"# {row.n}  {row.t}  {row.upper_energy:.6g}  "
                  f"precondition failed: {row.lower.failed_names()}", file=sys.stderr)
        else:
            print(f"# {row.n}  {row.t}  {row.upper_energy:.6g}  {row.lower.value:.6g}  "
                  f"{row.ratio:.4f}  {row.ratio_over_loglog:.4f}", file=sys.stderr)
    if config.e_cap is not None:
        for n in config.n_list:
            p_tar = config.p_tar if config.p_tar is not None else n**-0.5
            d_cap = config.d_cap if config.d_cap is not None else 1.0
            report = sparseness_lower_bound(LowerBoundInputs(
                n=n, e1=config.e1, e2=config.e2, d_cap=d_cap, e_cap=config.e_cap,
                epsilon=config.epsilon, p_tar=p_tar))
            if report.value is None:
                print(f"# sparseness lower bound n={n}: precondition failed: "
                      f"{report.failed_names()}", file=sys.stderr)
            else:
                print(f"# sparseness lower bound n={n}: {report.value:.6g} edges",
                      file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "simulate":
            config = _config_from_args(args)
            _emit(list(cmd_simulate(config)), args)
        elif args.command == "bounds":
            config = _config_from_args(args)
            _emit(list(cmd_bounds(config)), args)
            _print_gap_summary(config)
        elif args.command == "sweep":
            config = _config_from_args(args)
            rows, summary = cmd_sweep(config)
            _emit(rows, args)
            print(f"# {summary.describe()}", file=sys.stderr)
        elif args.command == "oracle-check":
            report = cmd_oracle_check(args.n_max, args.cases, args.seed, args.out)
            print(f"# oracle-check: {report.passes}/{report.cases} cases passed",
                  file=sys.stderr)
            if not report.ok:
                for record in report.mismatches[:5]:
                    print(f"# mismatch: n={record['n']} kind={record['kind']}",
                          file=sys.stderr)
                if report.case_paths:
                    print(f"# serialized: {report.case_paths}", file=sys.stderr)
                return 2
    except (ConfigError, _UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
