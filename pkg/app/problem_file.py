import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from src import config
from src.errors import ValidationError
from src.penalty import StepKind, StepPolicy
from src.quadforms import Problem, problem_from_arrays

REQUIRED_KEYS = ("Q", "q", "A", "v", "N")
OPTIONAL_KEYS = ("m", "alpha", "x1", "step_policy", "seed", "schema_version")


@dataclass(frozen=True)
class ProblemFile:
    """
    A problem description as read from JSON.

    Attributes:
      Q, q, A, v: Problem data as nested lists.
      N: Iteration count.
      m: Penalty scaling, None to estimate it.
      alpha: Conservatism ratio, used by min(a, b) files.
      x1: Starting point, None for the ellipsoid center.
      step_policy: "reciprocal-L", or {"kind": "sequence", "gammas": [...]}.
      seed: Seed for boundary sampling.
    """

    Q: list
    q: list
    A: list
    v: list
    N: int
    m: float | None = None
    alpha: float | None = None
    x1: list | None = None
    step_policy: Any = None
    seed: int | None = None

    def problem(self) -> Problem:
        return problem_from_arrays(self.Q, self.q, self.A, self.v)

    def step(self) -> StepPolicy:
        sp = self.step_policy
        if sp is None or sp == StepKind.RECIPROCAL_L.value:
            return StepPolicy.reciprocal()
        if isinstance(sp, dict) and sp.get("kind") == StepKind.SEQUENCE.value:
            return StepPolicy.sequence(sp.get("gammas", []))
        if isinstance(sp, list):
            return StepPolicy.sequence(sp)
        raise ValidationError("step_policy", f"unrecognized step policy {sp!r}")


def _number(payload: dict, key: str) -> float | None:
    value = payload.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(key, f"expected a number, got {value!r}")
    return float(value)


def parse_problem_file(payload: Any) -> ProblemFile:
    """
    Check keys and scalar fields of a decoded ProblemFile document.

    Array shapes are checked later, when the Problem is built.
    """
    if not isinstance(payload, dict):
        raise ValidationError("file", "expected a JSON object at the top level")
    for key in payload:
        if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
            raise ValidationError(key, "unknown key")
    for key in REQUIRED_KEYS:
        if key not in payload:
            raise ValidationError(key, "missing required key")
    N = payload["N"]
    if isinstance(N, bool) or not isinstance(N, int) or N < 1:
        raise ValidationError("N", f"expected a positive integer, got {N!r}")
    seed = payload.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ValidationError("seed", f"expected an integer, got {seed!r}")
    return ProblemFile(
        Q=payload["Q"],
        q=payload["q"],
        A=payload["A"],
        v=payload["v"],
        N=N,
        m=_number(payload, "m"),
        alpha=_number(payload, "alpha"),
        x1=payload.get("x1"),
        step_policy=payload.get("step_policy"),
        seed=seed,
    )


def load_problem_file(path: str | Path) -> ProblemFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError("input", f"cannot read {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("input", f"{path} is not valid JSON: {exc}") from exc
    return parse_problem_file(payload)


def normalized(pf: ProblemFile) -> dict:
    """
    The file contents after validation: symmetrized matrices, float entries.

    Floats are written by json with repr, so re-reading gives the same Problem bit for bit.
    """
    p = pf.problem()
    out = {
        "schema_version": config.SCHEMA_VERSION,
        "Q": p.cost.Q.tolist(),
        "q": p.cost.q.tolist(),
        "A": p.constraint.A.tolist(),
        "v": p.constraint.v.tolist(),
        "N": pf.N,
    }
    for key in ("m", "alpha", "x1", "step_policy", "seed"):
        value = getattr(pf, key)
        if value is not None:
            out[key] = value
    return out


def dump_normalized(pf: ProblemFile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(normalized(pf), indent=2) + "\n")
