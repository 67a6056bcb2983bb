"""Command line: ``acouwave <scenario> --config <path> [--out DIR] [--seed N] [--modes M] [--steps K]``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from .config import SCENARIOS, load_config
from .errors import AcouwaveError, ConfigError
from .scenarios import run_scenario

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acouwave", description="Spectral solver and analysis runs for the "
                                 "pressure-velocity acoustics system.")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--out", help="output directory (default: config 'output' or ./acouwave-out/<scenario>)")
    ap.add_argument("--seed", type=int, help="seed for all randomized steps")
    ap.add_argument("--modes", type=int, help="modes per axis, overriding the configuration")
    ap.add_argument("--steps", type=int, help="time steps, overriding the configuration")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {"seed": args.seed, "modes": args.modes, "steps": args.steps}
    try:
        cfg = load_config(args.config, args.scenario, overrides)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.output or Path("acouwave-out") / cfg.scenario)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            summary = run_scenario(cfg, out)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AcouwaveError, ValueError, ArithmeticError, MemoryError) as exc:
        print(f"error: {type(exc).__name__}: {exc} (partial results in {out})", file=sys.stderr)
        return EXIT_SOLVER
    for v in summary.get("verdicts", []):
        print(f"{'PASS' if v['holds'] else 'FAIL'}  {v['name']}")
    print(f"results written to {out}")
    return EXIT_OK if summary["status"] == "ok" else EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
