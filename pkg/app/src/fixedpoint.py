"""
Software fixed-point execution of the solver, modelling the integer encodings of
encrypted arithmetic.
"""

import logging
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from src.errors import FixedPointOverflow, ValidationError
from src.kernel import StepData
from src.penalty import PenaltySchedule
from src.quadforms import Problem
from src.solver import SolveTrace, SolverConfig, TraceBuilder, iterate_steps, solve, start_point

logger = logging.getLogger(__name__)

MIN_FRACTION_BITS = 8
MAX_FRACTION_BITS = 52


@dataclass(frozen=True)
class FixedPointFormat:
    """
    Binary fixed-point format: signed word_bits integers with fraction_bits after the point.

    Products are formed at double width and rounded half up back to fraction_bits.
    """

    fraction_bits: int
    word_bits: int = 64

    def __post_init__(self):
        if not MIN_FRACTION_BITS <= self.fraction_bits <= MAX_FRACTION_BITS:
            raise ValidationError(
                "fraction_bits",
                f"must be in [{MIN_FRACTION_BITS}, {MAX_FRACTION_BITS}], got {self.fraction_bits}",
            )
        if self.word_bits <= self.fraction_bits + 1:
            raise ValidationError("word_bits", "word must hold the sign and at least one integer bit")

    @property
    def scale(self) -> int:
        return 1 << self.fraction_bits

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.fraction_bits

    def check(self, raw: int) -> int:
        limit = 1 << (self.word_bits - 1)
        if raw >= limit or raw < -limit:
            raise FixedPointOverflow(raw / self.scale, self.word_bits)
        return raw

    def encode(self, value: float) -> "FixedPoint":
        if not np.isfinite(value):
            raise FixedPointOverflow(value, self.word_bits)
        return FixedPoint(self, self.check(round(value * self.scale)))


class FixedPoint:
    __slots__ = ("fmt", "raw")

    def __init__(self, fmt: FixedPointFormat, raw: int):
        self.fmt = fmt
        self.raw = raw

    def _coerce(self, other: Any) -> "FixedPoint":
        if isinstance(other, FixedPoint):
            if other.fmt != self.fmt:
                raise ValidationError("fraction_bits", "operands use different fixed-point formats")
            return other
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            return self.fmt.encode(float(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FixedPoint(self.fmt, self.fmt.check(self.raw + o.raw))

    __radd__ = __add__

    def __neg__(self):
        return FixedPoint(self.fmt, self.fmt.check(-self.raw))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FixedPoint(self.fmt, self.fmt.check(self.raw - o.raw))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        half = 1 << (self.fmt.fraction_bits - 1)
        return FixedPoint(self.fmt, self.fmt.check((self.raw * o.raw + half) >> self.fmt.fraction_bits))

    __rmul__ = __mul__

    def __float__(self) -> float:
        return self.raw / self.fmt.scale

    def __repr__(self) -> str:
        return f"FixedPoint({float(self)!r}, fraction_bits={self.fmt.fraction_bits})"


@dataclass(frozen=True)
class FixedPointResult:
    """
    Attributes:
      trace: The fixed-point trace, cut short at an overflow.
      max_deviation: Largest |x_k(fixed) - x_k(float)| over the iterates both runs reached.
      overflow_at: Step k whose arithmetic overflowed, None if the run completed.
    """

    trace: SolveTrace
    max_deviation: float
    overflow_at: int | None = None


def fixed_point_solve(
    p: Problem, cfg: SolverConfig, fraction_bits: int, word_bits: int = 64
) -> FixedPointResult:
    """
    Run the solver in fixed point and compare it with the float run.

    Public constants (2m, -gamma_k) are encoded in the same format as the data.
    An overflow stops the run; it is logged and reported, not raised.
    """
    fmt = FixedPointFormat(fraction_bits, word_bits)
    cfg = replace(cfg, diagnostics=False)
    reference = solve(p, cfg).iterates()

    schedule = PenaltySchedule(p, cfg.m)
    builder = TraceBuilder(schedule, value_of=float)
    overflow_at = None
    try:
        data = StepData(
            Q=[[fmt.encode(c) for c in row] for row in p.cost.Q.tolist()],
            q=[fmt.encode(c) for c in p.cost.q.tolist()],
            A=[[fmt.encode(c) for c in row] for row in p.constraint.A.tolist()],
            v=[fmt.encode(c) for c in p.constraint.v.tolist()],
        )
        x = [fmt.encode(c) for c in start_point(p, cfg).tolist()]
    except FixedPointOverflow as exc:
        raise ValidationError("fraction_bits", f"problem data does not fit the format: {exc}") from exc
    steps = iterate_steps(schedule, cfg, data, x, cfg.iterations)
    while True:
        try:
            k, xk, x_next, grad, gamma = next(steps)
        except StopIteration:
            break
        except FixedPointOverflow as exc:
            overflow_at = len(builder.records) + 1
            logger.warning("fixed-point overflow at k=%d: %s", overflow_at, exc)
            break
        builder.add(k, xk, x_next, grad, gamma)
        x = x_next
    trace = builder.finish(x, cfg)
    # After an overflow the trace ends at x_{overflow_at}, the last iterate both runs hold.
    reached = trace.iterates()
    deviation = float(np.max(np.abs(reached - reference[: len(reached)])))
    logger.info("fixed point (%d fraction bits): max deviation %.3e", fraction_bits, deviation)
    return FixedPointResult(trace=trace, max_deviation=deviation, overflow_at=overflow_at)
