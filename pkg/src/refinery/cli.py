"""Command-line runner: ``refinery <family> --config FILE [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from scipy.sparse.linalg import ArpackError, ArpackNoConvergence

from .experiments import (
    FAMILIES,
    RUNNERS,
    ConfigError,
    ExperimentConfig,
    _floats,
    parse_config,
    run_gadget_check,
)
from .fockspace import CapacityError

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("refinery")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="refinery", description="Resolution-refinement benchmark runner.")
    ap.add_argument("family", choices=FAMILIES)
    ap.add_argument("--config", type=Path, help="plain-text config: [family] header then key = value lines")
    ap.add_argument("--out", type=Path, help="CSV path; a .record sidecar is written next to it")
    ap.add_argument("--t-sweep", help="comma-separated total times")
    ap.add_argument("--steps", type=int, help="initial number of time steps (doubled until converged)")
    ap.add_argument("--mu", help="auto, gap, homo_lumo, offset:<value> or a number")
    ap.add_argument("--spectral-flow", action="store_true", help="also write the single-particle flow CSV")
    ap.add_argument("--workers", type=int, help="threads for the T sweep")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from None
        cfg = parse_config(text)
        if cfg.family != args.family:
            raise ConfigError(f"config is for [{cfg.family}] but command is {args.family!r}")
    else:
        cfg = ExperimentConfig(args.family)
    if args.t_sweep is not None:
        try:
            cfg.T_sweep = _floats(args.t_sweep)
        except ValueError:
            raise ConfigError(f"bad --t-sweep {args.t_sweep!r}") from None
    if args.steps is not None:
        cfg.steps = args.steps
    if args.mu is not None:
        cfg.mu = args.mu
    if args.spectral_flow:
        cfg.spectral_flow = True
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out = args.out
    return cfg.validate()


def run(cfg: ExperimentConfig) -> int:
    out = cfg.out or Path(f"refinery_{cfg.family}.csv")
    if cfg.family == "gadget_check":
        rec, report = run_gadget_check(cfg)
        for line in report.lines():
            print(line)
        status = EXIT_OK if report.passed else EXIT_NUMERICAL
    else:
        rec = RUNNERS[cfg.family](cfg)
        status = EXIT_OK
    for path in rec.write(out):
        log.info("wrote %s", path)
    print(rec.tables["main"].to_csv(), end="")
    return status


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return run(load_config(args))
    except CapacityError as err:
        print(f"capacity error: {err}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ArithmeticError, ArpackError, ArpackNoConvergence) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError) as err:
        # ConfigError, ShiftError and FermiDegeneracyError all land here.
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
