import argparse
import logging
import sys
import traceback

from src.config import CONVENTIONS, PROJECTIONS, apply_overrides, load_config
from src.errors import OrbitQError
from src.output_utils import write_report
from src.run_commands import COMMANDS, run_command
from src.suites import SUITES


def parse_arguments(argv=None):
    parser = argparse.ArgumentParser(
        prog="orbitq",
        description="Coadjoint orbits, their quantization data and the Schur scalar of central paths",
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Subcommand to run")
    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="JSON or YAML run config (default: so(1,3) with eta = X1*, k = 1)",
    )
    parser.add_argument("--seed", type=int, default=None, help="Random seed (default: config value, 42)")
    parser.add_argument("--grid", type=str, default=None, help="Sweep grid as N,S (default: 64,64)")
    parser.add_argument("--convention", choices=CONVENTIONS, default=None, help="delta convention")
    parser.add_argument(
        "--projection",
        choices=PROJECTIONS,
        default=None,
        help="Harish-Chandra projection scheme (default: symmetric)",
    )
    parser.add_argument("--workers", type=int, default=None, help="Maximum number of parallel workers")
    parser.add_argument(
        "--tolerance",
        type=float,
        default=None,
        help="Replace every check threshold by this value",
    )
    parser.add_argument(
        "--suite",
        action="append",
        choices=sorted(SUITES),
        default=None,
        help="verify: run only this suite (repeatable)",
    )
    parser.add_argument("--out", type=str, default=None, help="Write the JSON report here instead of stdout")
    parser.add_argument(
        "--jsonl",
        type=str,
        default=None,
        help="verify: append one JSONL line per suite to this file",
    )
    parser.add_argument("--quiet", action="store_true", default=False, help="Only log warnings and errors")
    parser.add_argument("-v", "--verbose", action="store_true", default=False, help="Log debug messages")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_arguments(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )

    try:
        config = load_config(args.config)
        config = apply_overrides(
            config,
            seed=args.seed,
            grid=args.grid,
            convention=args.convention,
            projection=args.projection,
            workers=args.workers,
            tolerance=args.tolerance,
        )
        report = run_command(
            args.command,
            config,
            progress=not args.quiet and sys.stderr.isatty(),
            suites=args.suite,
            jsonl_path=args.jsonl,
        )
    except OrbitQError as e:
        logging.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except Exception as e:
        logging.error(f"Unexpected failure: {e}\n{traceback.format_exc()}")
        return 3

    write_report(report, args.out)
    failed = report.failed_checks()
    if failed:
        logging.warning("%d of %d checks failed", len(failed), len(report.checks))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
