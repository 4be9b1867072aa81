import argparse

from problem_file import dump_normalized, load_problem_file
from ui import EXIT_OK, emit_json


def register(subparsers) -> None:
    p = subparsers.add_parser("validate", help="check a problem file")
    p.add_argument("--input", required=True)
    p.add_argument("--dump-normalized", help="write the validated problem file here")
    p.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    pf = load_problem_file(args.input)
    p = pf.problem()
    pf.step()
    bounds = p.constraint.bounds
    if args.dump_normalized:
        dump_normalized(pf, args.dump_normalized)
    out = {
        "valid": True,
        "n": p.n,
        "N": pf.N,
        "A.sigma_max": bounds.sigma_max,
        "A.sigma_min": bounds.sigma_min,
        "curvature_radius": bounds.curvature_radius,
    }
    if pf.x1 is not None:
        out["x1"] = p.membership(pf.x1).value
    emit_json(out)
    return EXIT_OK
