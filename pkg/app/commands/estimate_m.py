import argparse

from problem_file import load_problem_file
from src import config
from src.scaling import scaling_report
from ui import EXIT_OK, emit_json


def register(subparsers) -> None:
    p = subparsers.add_parser("estimate-m", help="estimate the penalty scalings m_min and m_inv")
    p.add_argument("--input", required=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--safety", type=float, help="safety factor (default 1.1)")
    p.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    pf = load_problem_file(args.input)
    seed = args.seed if args.seed is not None else pf.seed if pf.seed is not None else config.default_seed()
    report = scaling_report(pf.problem(), samples=args.samples, seed=seed, safety=args.safety)
    emit_json({**report.as_dict(), "seed": seed})
    return EXIT_OK
