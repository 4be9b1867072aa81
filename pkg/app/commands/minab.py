import argparse

from src import minab
from src.errors import ValidationError
from src.kernel import PowerStrategy
from ui import EXIT_OK, emit_lines


def register(subparsers) -> None:
    p = subparsers.add_parser("minab", help="min(a, b) by polynomial gradient steps")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0, help="conservatism ratio m/m*")
    p.add_argument("--iters", type=int, default=1)
    p.add_argument("--m", type=float, help="public scaling to check |a-b| <= 4m against")
    p.add_argument("--strategy", choices=[s.value for s in PowerStrategy])
    p.add_argument("--circuit", action="store_true", help="also run on the arithmetic tape")
    p.add_argument("--level-budget", type=int)
    p.add_argument("--strict", action="store_true", help="reject a = b instead of printing a")
    p.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    mp = minab.MinProblem(args.a, args.b, args.alpha)
    if mp.degenerate:
        if args.strict:
            raise ValidationError("b", "a = b")
        emit_lines({"min": mp.a})
        return EXIT_OK
    strategy = PowerStrategy(args.strategy) if args.strategy else None
    xs = minab.run(mp, args.iters, strategy)
    for k, x in enumerate(xs, start=1):
        print(f"{k} {float(x)!r}")
    out = {
        "m": mp.m,
        "auxiliary_error": minab.auxiliary_error(mp, args.iters),
        "single_step": minab.single_step_estimate(mp),
        "naive_bound": minab.naive_bound_estimate(mp),
    }
    if args.m is not None:
        out["compatible"] = str(minab.compatible(mp, args.m)).lower()
    if args.circuit:
        x_tape, stats = minab.tape_minab(mp, args.iters, strategy, args.level_budget)
        out["circuit.min"] = x_tape
        out.update({f"circuit.{k}": v for k, v in stats.as_dict().items()})
    out["min"] = float(xs[-1])
    emit_lines(out)
    return EXIT_OK
