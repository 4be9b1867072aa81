import argparse
import json
import logging
from pathlib import Path

from problem_file import dump_normalized, load_problem_file
from src import config
from src.circuit import tape_solve
from src.fixedpoint import fixed_point_solve
from src.errors import NumericalError
from src.kernel import PowerStrategy
from src.scaling import ScalingReport, scaling_report
from src.solver import SolverConfig, solve
from ui import EXIT_OK, emit_lines, parse_csv

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    p = subparsers.add_parser("solve", help="run sequential gradient descent on a problem file")
    p.add_argument("--input", required=True, help="ProblemFile JSON")
    p.add_argument("--output", help="write the trace here")
    p.add_argument("--format", choices=["csv", "json"], help="trace format (default from --output suffix, else csv)")
    p.add_argument("--iters", type=int, help="override N")
    p.add_argument("--m", type=float, help="override the penalty scaling")
    p.add_argument("--x1", help="starting point as comma-separated values")
    p.add_argument("--seed", type=int, help="boundary sampling seed")
    p.add_argument("--samples", type=int, help="boundary sample count")
    p.add_argument("--strategy", choices=[s.value for s in PowerStrategy], help="power expansion")
    p.add_argument("--circuit", action="store_true", help="run on the arithmetic tape and report counts")
    p.add_argument("--level-budget", type=int, help="multiplicative depth budget for --circuit")
    p.add_argument("--fixed-point-bits", type=int, help="also run in fixed point with this many fraction bits")
    p.add_argument("--diagnostics", action="store_true", help="check invariance and the descent chain")
    p.add_argument("--dump-normalized", help="write the validated problem file here")
    p.set_defaults(func=run)


def _trace_format(args: argparse.Namespace) -> str:
    if args.format:
        return args.format
    if args.output and Path(args.output).suffix.lower() == ".json":
        return "json"
    return "csv"


def _best_effort_report(p, samples: int | None, seed: int) -> ScalingReport | None:
    """Scaling report for a run whose m is fixed; None, logged, when the estimate fails."""
    try:
        return scaling_report(p, samples=samples, seed=seed)
    except NumericalError as exc:
        logger.warning("scaling estimate failed, run is uncertified: %s", exc)
        return None


def run(args: argparse.Namespace) -> int:
    pf = load_problem_file(args.input)
    p = pf.problem()
    if args.dump_normalized:
        dump_normalized(pf, args.dump_normalized)

    seed = args.seed if args.seed is not None else pf.seed if pf.seed is not None else config.default_seed()
    m = args.m if args.m is not None else pf.m
    if m is None:
        report = scaling_report(p, samples=args.samples, seed=seed)
        m = report.m_inv
    else:
        report = _best_effort_report(p, args.samples, seed)
    x1 = parse_csv(args.x1, "x1") if args.x1 else pf.x1
    cfg = SolverConfig(
        iterations=args.iters if args.iters is not None else pf.N,
        m=m,
        step_policy=pf.step(),
        x1=x1,
        diagnostics=args.diagnostics,
        power_strategy=args.strategy or config.power_strategy(),
        m_inv=None if report is None else report.m_inv,
    )

    if args.circuit:
        trace, stats = tape_solve(p, cfg, level_budget=args.level_budget)
    else:
        trace, stats = solve(p, cfg), None

    summary = {
        "x": list(trace.final_x),
        "f": trace.final_f,
        "g": trace.final_g,
        "m": trace.m,
        "status": "certified" if trace.certified else "uncertified",
    }
    if stats is not None:
        summary.update({f"circuit.{k}": v for k, v in stats.as_dict().items()})
    if args.fixed_point_bits is not None:
        fixed = fixed_point_solve(p, cfg, args.fixed_point_bits)
        summary["fixed_point.max_deviation"] = fixed.max_deviation
        summary["fixed_point.overflow_at"] = "none" if fixed.overflow_at is None else fixed.overflow_at
    if trace.diagnostics:
        summary.update({k: "none" if v is None else v for k, v in trace.diagnostics.items()})
    emit_lines(summary)

    if args.output:
        scaling = None if report is None else report.as_dict()
        header = {"scaling": scaling, "m": m, "N": cfg.iterations, "seed": seed}
        if _trace_format(args) == "json":
            payload = {"schema_version": config.SCHEMA_VERSION, **header, "trace": trace.to_dict()}
            Path(args.output).write_text(json.dumps(payload, indent=2) + "\n")
        else:
            with open(args.output, "w", newline="") as fh:
                for key, value in header.items():
                    fh.write(f"# {key}: {json.dumps(value)}\n")
                trace.to_csv(fh)
    return EXIT_OK
