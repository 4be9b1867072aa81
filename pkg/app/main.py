import argparse
import logging
import sys

from commands import estimate_m, minab, plan_depth, solve, validate
from src import __version__
from ui import guarded

COMMANDS = (solve, minab, estimate_m, plan_depth, validate)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polypen",
        description="Ellipsoid-constrained quadratic programs with additions and multiplications only.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="log verbosity on stderr",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return guarded(args.func, args)


if __name__ == "__main__":
    sys.exit(main())
