"""Command-line interface: simulate, predict, compare, figure, selftest."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figure, harness, selftest
from .config import ConfigError, load_config
from .drift import NotAntisymmetric
from .frechet import NoConvergence
from .moments import VARIANTS, CovarianceBlowup, NonIsotropicNoise
from .so3 import AngleNearPi

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_NUMERICAL_ERRORS = (AngleNearPi, NoConvergence, CovarianceBlowup, NonIsotropicNoise)


def _add_config_flags(p, workers=False, all_slices=False):
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the seed")
    p.add_argument("--variant", choices=list(VARIANTS), default=None,
                   help="covariance equation variant")
    if workers:
        p.add_argument("--workers", type=int, default=1,
                       help="parallel simulation workers")
    if all_slices:
        p.add_argument("--all-slices", action="store_true",
                       help="write and compare every grid time, not just the last")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="so3mean",
        description="Predict the Fréchet mean and covariance of a rotation-group "
        "diffusion and compare against a Monte Carlo oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="simulate the ensemble and write CSV slices")
    _add_config_flags(p, workers=True)
    p = sub.add_parser("predict", help="integrate the moment equations to CSV")
    _add_config_flags(p)
    p = sub.add_parser("compare", help="simulate, estimate, predict, and report")
    _add_config_flags(p, workers=True, all_slices=True)
    p = sub.add_parser("figure", help="render figure.svg from compare outputs")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    sub.add_parser("selftest", help="run the built-in invariant suite")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help and usage errors
        return int(exc.code or 0)

    try:
        if args.command == "selftest":
            return EXIT_OK if selftest.run_selftest(sys.stdout) else EXIT_NUMERICAL
        if args.command == "figure":
            path = figure.run_figure(args.out)
            print(path)
            return EXIT_OK
        cfg = load_config(args.config, seed=args.seed, variant=args.variant)
        if args.command == "simulate":
            run = harness.run_simulate(cfg, args.out, workers=args.workers)
            print(f"wrote {len(run)} ensemble slices to {args.out}")
        elif args.command == "predict":
            states = harness.run_predict(cfg, args.out)
            print(f"wrote {len(states)} prediction rows to {args.out}")
        elif args.command == "compare":
            report = harness.run_compare(
                cfg, args.out, all_slices=args.all_slices, workers=args.workers
            )
            print(
                f"mean_distance={report.mean_distance:.6e} "
                f"cov_rel_error={report.cov_rel_error:.6e} "
                f"stopped={report.stopped_paths}"
            )
        return EXIT_OK
    except (ConfigError, NotAntisymmetric) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
