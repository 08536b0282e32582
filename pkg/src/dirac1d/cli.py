"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 resolution (aliasing) guard.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DomainError, ResolutionError
from .extraction import run_extraction, sweep_f
from .io import current_csv, load_config, report_csv, report_json
from .observables import current_gradient
from .verify import FAULTS, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RESOLUTION = 0, 1, 2, 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out-csv", help="CSV output path (overrides the config)")
    p.add_argument("--tf", type=float, help="override potential t_f")
    p.add_argument("--nz", type=int, help="override the number of grid points")
    p.add_argument("--nt", type=int, help="override the number of time panels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirac1d",
        description="Massless 1+1D Dirac field in an external potential: currents, energy extraction, checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("current", help="export J0 and dJ0/dz of the configured state at time t")
    _add_common(p)
    p.add_argument("--t", type=float, default=0.0, help="time of the profile (default 0)")

    p = sub.add_parser("extract", help="run one energy-extraction experiment")
    _add_common(p)
    p.add_argument("--out-json", help="JSON report path (overrides the config)")
    p.add_argument("--f", type=float, help="override the feedback coupling")

    p = sub.add_parser("sweep", help="run the experiment for every coupling in the f list")
    _add_common(p)
    p.add_argument("--out-json", help="JSON report path (overrides the config)")
    p.add_argument("--f", type=float, action="append", help="coupling value; repeat to build a list")

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--inject", choices=FAULTS, help=argparse.SUPPRESS)
    return parser


def _load(args, f=None):
    overrides = {"t_f": getattr(args, "tf", None), "n_z": getattr(args, "nz", None),
                 "n_t": getattr(args, "nt", None), "f": f}
    return load_config(args.config, overrides)


def _write(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)


def cmd_current(args) -> int:
    cfg = _load(args)
    prof = current_gradient(cfg.state, args.t, cfg.domain, cfg.q_charge)
    path = args.out_csv or cfg.csv_path
    _write(current_csv(prof, path), path)
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _load(args, args.f)
    res = run_extraction(cfg)
    csv_path = args.out_csv or cfg.csv_path
    json_path = args.out_json or cfg.json_path
    _write(report_csv([res], csv_path), csv_path)
    if json_path:
        report_json([res], json_path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args, args.f)
    if not cfg.f_values:
        raise ConfigError("sweep needs a non-empty f list")
    rows = sweep_f(cfg)
    csv_path = args.out_csv or cfg.csv_path
    json_path = args.out_json or cfg.json_path
    _write(report_csv(rows, csv_path, ratio=True), csv_path)
    if json_path:
        report_json(rows, json_path)
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_suite(args.inject)
    return EXIT_VERIFY if any(c.gating and not c.passed for c in checks) else EXIT_OK


COMMANDS = {"current": cmd_current, "extract": cmd_extract, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
