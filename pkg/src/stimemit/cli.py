"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 config/validation error,
3 numerical failure (fit did not converge).
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from .experiment import (
    SEED_ENV_VAR,
    ConfigError,
    load_config,
    read_scan_csv,
    report_enhancement,
    run_amplifier_scan,
    run_beamsplitter_scan,
    scan_to_csv,
)
from .fitting import FitError, fit_gaussian_peak, peak_to_wing
from .fock import FockError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stimemit", description="Stimulated emission / multi-photon interference simulator")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("enhance", help="print the N+1 enhancement table")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--cutoff", type=int, default=None)

    for name, kind in (("scan-amp", "amplifier"), ("scan-bs", "beam splitter")):
        p = sub.add_parser(name, help=f"delay scan of the {kind} experiment, written as CSV")
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--pattern", choices=("abcd", "abd"), default="abcd")
        p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
        p.add_argument("--seed", type=int, default=None, help=f"overrides the config file and ${SEED_ENV_VAR}")

    p = sub.add_parser("fit", help="fit the bunching peak in a scan CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--unweighted", action="store_true")
    return parser


def _write(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "enhance":
            kwargs = {} if args.cutoff is None else {"cutoff": args.cutoff}
            sys.stdout.write(report_enhancement(args.n_max, **kwargs).format_table())
            return EXIT_OK

        if args.command in ("scan-amp", "scan-bs"):
            kind = "amplifier" if args.command == "scan-amp" else "beamsplitter"
            config = load_config(args.config, kind, seed=args.seed)
            run = run_amplifier_scan if kind == "amplifier" else run_beamsplitter_scan
            result = run(config, args.pattern)
            _write(scan_to_csv(result.points), args.out)
            if result.truncated:
                print("note: photon-number cutoff truncated the state", file=sys.stderr)
            return EXIT_OK

        points = read_scan_csv(args.infile)
        fit = fit_gaussian_peak(points, weighted=not args.unweighted)
        sys.stdout.write(fit.report())
        if fit.converged or fit.degenerate:
            print(f"peak_to_wing {peak_to_wing(fit):.10g}")
            return EXIT_OK
        return EXIT_NUMERIC
    except (ConfigError, FockError, FitError, OSError) as exc:
        print(f"stimemit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
