import argparse

from src.circuit import plan_depth
from src.kernel import PowerStrategy
from ui import EXIT_OK, emit_json


def register(subparsers) -> None:
    p = subparsers.add_parser("plan-depth", help="multiplicative depth per iteration")
    p.add_argument("--n", type=int, default=1, help="problem dimension")
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--strategy", choices=[s.value for s in PowerStrategy], help="default: both")
    p.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    strategies = [PowerStrategy(args.strategy)] if args.strategy else list(PowerStrategy)
    plans = [plan_depth(args.n, args.iters, s).as_dict() for s in strategies]
    emit_json({"n": args.n, "N": args.iters, "plans": plans})
    return EXIT_OK
