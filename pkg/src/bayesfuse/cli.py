"""``fuse-bench``: run fusion benchmark sweeps from a JSON config."""

from __future__ import annotations

import argparse
import logging
import sys

from .bench import format_table, load_config, run_sweep, write_csv
from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("fuse-bench")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuse-bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep and write CSV results")
    run.add_argument("--config", required=True, help="path to the sweep JSON config")
    run.add_argument("--out", required=True, help="CSV output path")
    run.add_argument("--threads", type=int, default=1, help="worker processes (wall time only)")
    run.add_argument("--seed", type=int, default=None, help="override the config's seed")
    run.add_argument("--trials", type=int, default=None, help="override the config's trial count")
    run.add_argument("-q", "--quiet", action="store_true", help="do not print the summary table")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    try:
        spec = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            spec = spec.with_seed(args.seed)
        if getattr(args, "trials", None) is not None:
            spec = spec.override("trials", args.trials)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        points = spec.points()
        print(f"ok: model {spec.model}, {len(points)} sweep point(s) over {spec.param}")
        return EXIT_OK

    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    def progress(cfg, result):
        if not args.quiet:
            log.info("%s=%s done (%d trials)", spec.param, getattr(cfg, spec.param), result.trials)

    try:
        rows = run_sweep(spec, workers=args.threads, progress=progress)
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    try:
        write_csv(rows, args.out)
    except OSError as exc:
        print(f"error writing {args.out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if not args.quiet:
        print(format_table(rows, spec.param))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
