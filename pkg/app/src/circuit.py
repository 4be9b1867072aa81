"""
Arithmetic-tape execution of the solver.

Every value carries its plaintext, its multiplicative level and whether it is
derived from ciphertext inputs. Only addition, subtraction and multiplication
exist; division, comparison and truth-testing are recorded as violations and
abort. Levels follow the leveled-HE convention: a product of two
ciphertext-derived values costs one level, products with public constants and
all additions are free.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import pandas as pd

from src import config
from src.errors import NonPolynomialOperation, ValidationError
from src.kernel import PowerStrategy, StepData, power_depth
from src.penalty import PenaltySchedule
from src.quadforms import Problem
from src.solver import SolveTrace, SolverConfig, TraceBuilder, iterate_steps, start_point

logger = logging.getLogger(__name__)


class Provenance(str, Enum):
    CIPHERTEXT_INPUT = "ciphertext-input"
    PUBLIC_CONSTANT = "public-constant"
    DERIVED = "derived"


@dataclass(frozen=True)
class CircuitStats:
    """
    Operation counts and depth of one tape.

    Attributes:
      adds: Additions with at least one ciphertext-derived operand.
      ct_ct_muls: Ciphertext x ciphertext multiplications.
      ct_pt_muls: Ciphertext x public multiplications (negation included).
      max_level: Largest multiplicative level of any value on the tape.
      budget_exceeded: max_level went past the configured level budget.
    """

    adds: int = 0
    ct_ct_muls: int = 0
    ct_pt_muls: int = 0
    max_level: int = 0
    budget_exceeded: bool = False

    def as_dict(self) -> dict:
        return {
            "adds": self.adds,
            "ct_ct_muls": self.ct_ct_muls,
            "ct_pt_muls": self.ct_pt_muls,
            "max_level": self.max_level,
            "budget_exceeded": self.budget_exceeded,
        }


_FORBIDDEN = {
    "__truediv__": "division",
    "__rtruediv__": "division",
    "__floordiv__": "division",
    "__rfloordiv__": "division",
    "__mod__": "division",
    "__rmod__": "division",
    "__divmod__": "division",
    "__pow__": "power",
    "__rpow__": "power",
    "__lt__": "comparison",
    "__le__": "comparison",
    "__gt__": "comparison",
    "__ge__": "comparison",
    "__abs__": "comparison",
    "__bool__": "branch",
    "__float__": "decryption",
    "__int__": "decryption",
    "__round__": "decryption",
}


class TapeValue:
    """A number living on a Tape."""

    __slots__ = ("tape", "value", "level", "provenance", "index")

    def __init__(self, tape: "Tape", value: float, level: int, provenance: Provenance, index: int):
        self.tape = tape
        self.value = value
        self.level = level
        self.provenance = provenance
        self.index = index

    @property
    def secret(self) -> bool:
        return self.provenance is not Provenance.PUBLIC_CONSTANT

    def _coerce(self, other: Any) -> "TapeValue":
        if isinstance(other, TapeValue):
            if other.tape is not self.tape:
                raise ValidationError("tape", "operands belong to different tapes")
            return other
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            return self.tape.public(float(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self.tape.add(self, o)

    def __radd__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self.tape.add(o, self)

    def __neg__(self):
        return self.tape.mul(self, self.tape.public(-1.0))

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self.tape.add(self, -o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self.tape.add(o, -self)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self.tape.mul(self, o)

    def __rmul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self.tape.mul(o, self)

    def __repr__(self) -> str:
        return f"TapeValue({self.value!r}, level={self.level}, {self.provenance.value})"


def _forbidden(name: str, kind: str):
    def method(self, *args):
        self.tape.violations.append(kind)
        raise NonPolynomialOperation(f"{kind} ({name}) is not available on the arithmetic tape")

    method.__name__ = name
    return method


for _name, _kind in _FORBIDDEN.items():
    setattr(TapeValue, _name, _forbidden(_name, _kind))


class Tape:
    """
    Records every operation as a node of a DAG and tracks levels incrementally.

    Nodes are (op, operand indices, secret flag) with op in {input, const, add, mul}.
    """

    def __init__(self):
        self.nodes: list[tuple[str, tuple[int, ...], bool]] = []
        self.violations: list[str] = []
        self.adds = 0
        self.ct_ct_muls = 0
        self.ct_pt_muls = 0
        self.max_level = 0

    def _node(self, op: str, args: tuple[int, ...], value: float, level: int, prov: Provenance) -> TapeValue:
        self.nodes.append((op, args, prov is not Provenance.PUBLIC_CONSTANT))
        if level > self.max_level:
            self.max_level = level
        return TapeValue(self, value, level, prov, len(self.nodes) - 1)

    def secret(self, value: float) -> TapeValue:
        return self._node("input", (), float(value), 0, Provenance.CIPHERTEXT_INPUT)

    def public(self, value: float) -> TapeValue:
        return self._node("const", (), float(value), 0, Provenance.PUBLIC_CONSTANT)

    def lift(self, value: float, secret: bool) -> TapeValue:
        return self.secret(value) if secret else self.public(value)

    def add(self, a: TapeValue, b: TapeValue) -> TapeValue:
        if a.secret or b.secret:
            self.adds += 1
            prov = Provenance.DERIVED
        else:
            prov = Provenance.PUBLIC_CONSTANT
        return self._node("add", (a.index, b.index), a.value + b.value, max(a.level, b.level), prov)

    def mul(self, a: TapeValue, b: TapeValue) -> TapeValue:
        level = max(a.level, b.level)
        if a.secret and b.secret:
            self.ct_ct_muls += 1
            level += 1
            prov = Provenance.DERIVED
        elif a.secret or b.secret:
            self.ct_pt_muls += 1
            prov = Provenance.DERIVED
        else:
            prov = Provenance.PUBLIC_CONSTANT
        return self._node("mul", (a.index, b.index), a.value * b.value, level, prov)

    def recompute_max_level(self) -> int:
        """Levels recomputed from the recorded DAG alone."""
        levels: list[int] = []
        for op, args, _ in self.nodes:
            if op in ("input", "const"):
                levels.append(0)
            elif op == "add":
                levels.append(max(levels[i] for i in args))
            else:
                bump = 1 if all(self.nodes[i][2] for i in args) else 0
                levels.append(max(levels[i] for i in args) + bump)
        return max(levels, default=0)

    def stats(self, level_budget: int | None = None) -> CircuitStats:
        exceeded = level_budget is not None and self.max_level > level_budget
        if exceeded:
            logger.warning("multiplicative depth %d exceeds the budget of %d", self.max_level, level_budget)
        return CircuitStats(
            adds=self.adds,
            ct_ct_muls=self.ct_ct_muls,
            ct_pt_muls=self.ct_pt_muls,
            max_level=self.max_level,
            budget_exceeded=exceeded,
        )


@dataclass(frozen=True)
class SecretMarks:
    """
    Which problem inputs enter the tape as ciphertexts. m, gamma_k and N are always public.

    A run started at the center reuses v, so x1 then inherits the mark of v.
    """

    Q: bool = True
    q: bool = True
    A: bool = True
    v: bool = True
    x1: bool = True

    @classmethod
    def all_public(cls) -> "SecretMarks":
        return cls(Q=False, q=False, A=False, v=False, x1=False)

    def as_dict(self) -> dict:
        return {"Q": self.Q, "q": self.q, "A": self.A, "v": self.v, "x1": self.x1}


def _tape_data(tape: Tape, p: Problem, marks: SecretMarks) -> StepData[TapeValue]:
    return StepData(
        Q=[[tape.lift(c, marks.Q) for c in row] for row in p.cost.Q.tolist()],
        q=[tape.lift(c, marks.q) for c in p.cost.q.tolist()],
        A=[[tape.lift(c, marks.A) for c in row] for row in p.constraint.A.tolist()],
        v=[tape.lift(c, marks.v) for c in p.constraint.v.tolist()],
    )


def tape_solve(
    p: Problem,
    cfg: SolverConfig,
    marks: SecretMarks | None = None,
    *,
    level_budget: int | None = None,
    iterations: int | None = None,
) -> tuple[SolveTrace, CircuitStats]:
    """
    Run the solver through an arithmetic tape.

    The iterates are bitwise identical to solve(p, cfg): both run the same kernel
    with the same operation order.

    Args:
      p: Problem.
      cfg: Solver settings.
      marks: Ciphertext inputs, all problem data by default.
      level_budget: Depth limit to check; exceeding it is logged and flagged.
      iterations: Override of cfg.iterations; 0 returns x1 with zero stats.

    Raises:
      NonPolynomialOperation: if anything but add/subtract/multiply was attempted.
    """
    marks = SecretMarks() if marks is None else marks
    level_budget = config.level_budget() if level_budget is None else level_budget
    N = cfg.iterations if iterations is None else iterations
    if N < 0:
        raise ValidationError("N", f"iteration count must be >= 0, got {N}")
    tape = Tape()
    data = _tape_data(tape, p, marks)
    if cfg.x1 is None:
        x = list(data.v)
    else:
        x = [tape.lift(c, marks.x1) for c in start_point(p, cfg).tolist()]
    schedule = PenaltySchedule(p, cfg.m)
    builder = TraceBuilder(schedule, value_of=lambda t: t.value)
    for k, xk, x_next, grad, gamma in iterate_steps(schedule, cfg, data, x, N):
        builder.add(k, xk, x_next, grad, gamma)
        x = x_next
    stats = tape.stats(level_budget)
    trace = replace(builder.finish(x, cfg), stats=stats)
    logger.info(
        "tape: %d adds, %d ct*ct, %d ct*pt, depth %d",
        stats.adds, stats.ct_ct_muls, stats.ct_pt_muls, stats.max_level,
    )
    return trace, stats


def _mul_level(a: int | None, b: int | None) -> int | None:
    # None marks a public value.
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b) + 1


def _add_level(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


@dataclass(frozen=True)
class DepthPlan:
    n: int
    iterations: int
    strategy: PowerStrategy
    rows: tuple[tuple[int, int, int], ...] = field(default_factory=tuple)

    @property
    def total(self) -> int:
        return self.rows[-1][2] if self.rows else 0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.rows), columns=["k", "per_step_level", "cumulative_level"])

    def as_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "total": self.total,
            "rows": [
                {"k": k, "per_step_level": step, "cumulative_level": cum} for k, step, cum in self.rows
            ],
        }


def plan_depth(
    n: int,
    N: int,
    power_strategy: PowerStrategy | str = PowerStrategy.REPEATED_SQUARING,
    marks: SecretMarks | None = None,
    center_start: bool = True,
) -> DepthPlan:
    """
    Closed-form level accounting of N solver steps, per step and cumulative.

    Step k forms d = x - v, Ad, Qx + q; for k >= 2 it squares up g = d^T Ad to the
    power k-1 (adding power_depth levels on top of g) and multiplies it into Ad.
    The dimension only sets the length of the sums, which cost no levels.
    """
    if n < 1:
        raise ValidationError("n", f"dimension must be >= 1, got {n}")
    if N < 1:
        raise ValidationError("N", f"iteration count must be >= 1, got {N}")
    strategy = PowerStrategy(power_strategy)
    marks = SecretMarks() if marks is None else marks

    def lvl(secret: bool) -> int | None:
        return 0 if secret else None

    lQ, lq, lA, lv = lvl(marks.Q), lvl(marks.q), lvl(marks.A), lvl(marks.v)
    lx = lv if center_start else lvl(marks.x1)
    rows = []
    for k in range(1, N + 1):
        ld = _add_level(lx, lv)
        lAd = _mul_level(lA, ld)
        lgf = _add_level(_mul_level(lQ, lx), lq)
        if k == 1:
            lpen = lAd
        else:
            lg = _mul_level(ld, lAd)
            lw = None if lg is None else lg + power_depth(k - 1, strategy)
            lpen = _mul_level(lw, lAd)
        lx_next = _add_level(lx, _add_level(lgf, lpen))
        before, after = lx or 0, lx_next or 0
        rows.append((k, after - before, after))
        lx = lx_next
    return DepthPlan(n=n, iterations=N, strategy=strategy, rows=tuple(rows))
