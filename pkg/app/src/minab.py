"""
min(a, b) as an ellipsoid-constrained problem.

minimize x subject to (x - (a+b)/2)^2 * 4/(a-b)^2 <= 1, i.e. Q = 0, q = 1 on the
interval between a and b. With m = alpha |a-b| / 4 (alpha >= 1) a single step from
the midpoint already lands in [min(a, b), (a+b)/2), and exactly on min(a, b) for
alpha = 1.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src import config
from src.circuit import CircuitStats, Tape
from src.errors import ValidationError
from src.kernel import PowerStrategy, minab_step
from src.quadforms import Problem, problem_from_arrays

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MinProblem:
    """
    Attributes:
      a, b: The two numbers, in any order.
      alpha: Conservatism ratio m / m* with m* = |a-b|/4. Values below 1 are accepted
        with a warning; the containment guarantees then no longer hold.
    """

    a: float
    b: float
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if not self.alpha > 0.0:
            raise ValidationError("alpha", f"must be > 0, got {self.alpha}")
        if self.alpha < 1.0:
            logger.warning("alpha = %g < 1: iterates are not guaranteed to stay in [min, max]", self.alpha)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def degenerate(self) -> bool:
        return self.a == self.b

    @property
    def spread(self) -> float:
        return abs(self.a - self.b)

    @property
    def center(self) -> float:
        return (self.a + self.b) / 2.0

    @property
    def m_star(self) -> float:
        return self.spread / 4.0

    @property
    def m(self) -> float:
        return self.alpha * self.m_star

    @property
    def shape(self) -> float:
        """A = 4/(a-b)^2."""
        return 4.0 / (self.a - self.b) ** 2


def to_problem(mp: MinProblem) -> Problem:
    """
    Raises:
      ValidationError: for a = b, where the constraint set is a single point.
    """
    if mp.degenerate:
        raise ValidationError("b", f"a = b = {mp.a!r}; the minimum is a and there is no problem to solve")
    return problem_from_arrays([[0.0]], [1.0], [[mp.shape]], [mp.center])


def _check_k(k: int) -> None:
    if k < 1:
        raise ValidationError("k", f"penalty index must be >= 1, got {k}")


def iterate(mp: MinProblem, x: float, k: int, strategy: PowerStrategy | None = None) -> float:
    """
    One step x - (a-b)^2/(4(4k-2)m) - 2/(4k-2) * A^(k-1) (x - v)^(2k-1).

    This is the general gradient step on to_problem(mp) with gamma_k = 1/L_k, evaluated
    in a different order; both agree to round-off, not bitwise.
    """
    _check_k(k)
    if mp.degenerate:
        return mp.a
    strategy = PowerStrategy(config.power_strategy()) if strategy is None else strategy
    return minab_step(float(x), k, mp.center, (mp.a - mp.b) ** 2, mp.shape, mp.m, strategy)


def iterate_analysis(mp: MinProblem, x: float, k: int) -> float:
    """The same step as iterate, written x - |a-b|/(alpha(4k-2)) - A^(k-1)(x-v)^(2k-1)/(2k-1)."""
    _check_k(k)
    if mp.degenerate:
        return mp.a
    d = float(x) - mp.center
    return x - mp.spread / (mp.alpha * (4 * k - 2)) - mp.shape ** (k - 1) * d ** (2 * k - 1) / (2 * k - 1)


def run(mp: MinProblem, N: int, strategy: PowerStrategy | None = None) -> NDArray[np.float64]:
    """x_1 = (a+b)/2 followed by N specialized steps; returns x_1 .. x_{N+1}."""
    if N < 1:
        raise ValidationError("N", f"iteration count must be >= 1, got {N}")
    xs = [mp.center if not mp.degenerate else mp.a]
    for k in range(1, N + 1):
        xs.append(iterate(mp, xs[-1], k, strategy))
        if not math.isfinite(xs[-1]):
            logger.warning("min(a, b) iterate x_%d is not finite", k + 1)
    return np.array(xs)


def auxiliary_error(mp: MinProblem, k: int) -> float:
    """
    |x* - x_k*| = (|a-b|/2) (1 - alpha^(-1/(2k-1))), the distance of the k-th auxiliary
    minimizer from min(a, b). For alpha < 1 the minimizer lies outside and the
    absolute value is returned.
    """
    _check_k(k)
    if mp.degenerate:
        return 0.0
    return abs(mp.spread / 2.0 * (1.0 - mp.alpha ** (-1.0 / (2 * k - 1))))


def iterations_for_precision(mp: MinProblem, delta: float) -> int:
    """
    Smallest k with auxiliary_error(mp, k) <= delta.

    Starts from the bound k >= 1/2 - ln(alpha) / (2 ln(1 - 2 delta/|a-b|)) and corrects
    the rounded value by direct evaluation of the error.

    Raises:
      ValidationError: delta outside (0, |a-b|/2) or alpha < 1.
    """
    if mp.degenerate:
        return 1
    if not 0.0 < delta < mp.spread / 2.0:
        raise ValidationError("delta", f"must be in (0, {mp.spread / 2.0!r}), got {delta!r}")
    if mp.alpha < 1.0:
        raise ValidationError("alpha", "precision bound needs alpha >= 1")
    if mp.alpha == 1.0:
        return 1
    bound = 0.5 - math.log(mp.alpha) / (2.0 * math.log1p(-2.0 * delta / mp.spread))
    k = max(1, math.ceil(bound))
    while k > 1 and auxiliary_error(mp, k - 1) <= delta:
        k -= 1
    while auxiliary_error(mp, k) > delta:
        k += 1
    return k


def single_step_estimate(mp: MinProblem) -> float:
    """x_2 = (a+b)/2 - (a-b)^2/(8m), in [min(a, b), (a+b)/2) for alpha >= 1."""
    if mp.degenerate:
        return mp.a
    return mp.center - (mp.a - mp.b) ** 2 / (8.0 * mp.m)


def naive_bound_estimate(mp: MinProblem) -> float:
    """
    The single step with |a-b| replaced by its upper bound alpha|a-b|:
    (a+b)/2 - alpha|a-b|/2, which is never above min(a, b) for alpha >= 1.
    """
    return mp.center - mp.alpha * mp.spread / 2.0


def compatible(mp: MinProblem, m: float) -> bool:
    """Whether a fixed public scaling m covers this pair: |a-b| <= 4m."""
    return mp.spread <= 4.0 * m


def tape_minab(
    mp: MinProblem,
    N: int,
    strategy: PowerStrategy | None = None,
    level_budget: int | None = None,
) -> tuple[float, CircuitStats]:
    """
    Run N specialized steps on an arithmetic tape with a, b and A as ciphertexts.

    (a-b)^2 and (a+b)/2 are formed once on the tape; m and the k-dependent
    coefficients are public. A itself needs an encrypted division and is supplied
    as a ciphertext input; for N = 1 it is never used.

    Returns:
      (x_{N+1}, stats)
    """
    if N < 1:
        raise ValidationError("N", f"iteration count must be >= 1, got {N}")
    if mp.degenerate:
        return mp.a, CircuitStats()
    strategy = PowerStrategy(config.power_strategy()) if strategy is None else strategy
    level_budget = config.level_budget() if level_budget is None else level_budget
    tape = Tape()
    a, b, A = tape.secret(mp.a), tape.secret(mp.b), tape.secret(mp.shape)
    diff = a - b
    diff_sq = diff * diff
    v = (a + b) * 0.5
    x = v
    for k in range(1, N + 1):
        x = minab_step(x, k, v, diff_sq, A, mp.m, strategy)
    stats = tape.stats(level_budget)
    logger.info("min(a, b) tape: N=%d depth %d, %d ct*ct", N, stats.max_level, stats.ct_ct_muls)
    return x.value, stats

