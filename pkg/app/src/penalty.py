import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.errors import NumericalError, ValidationError
from src.kernel import PowerStrategy, power
from src.quadforms import Problem, spectral_bounds

logger = logging.getLogger(__name__)


class StepKind(str, Enum):
    RECIPROCAL_L = "reciprocal-L"
    SEQUENCE = "sequence"


@dataclass(frozen=True)
class StepPolicy:
    """
    How gamma_k is chosen.

    Attributes:
      kind: RECIPROCAL_L for gamma_k = 1/L_k, SEQUENCE for user-supplied values.
      gammas: The user sequence, gammas[k-1] is gamma_k. Empty for RECIPROCAL_L.
    """

    kind: StepKind = StepKind.RECIPROCAL_L
    gammas: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind is StepKind.SEQUENCE and not self.gammas:
            raise ValidationError("step_policy", "a user step sequence must not be empty")

    @classmethod
    def reciprocal(cls) -> "StepPolicy":
        return cls()

    @classmethod
    def sequence(cls, gammas: ArrayLike) -> "StepPolicy":
        return cls(StepKind.SEQUENCE, tuple(float(g) for g in np.atleast_1d(gammas)))


def _pow(base: float, exponent: int) -> float:
    # Python floats overflow to inf here instead of raising.
    if exponent == 0:
        return 1.0
    return power(float(base), exponent, PowerStrategy.REPEATED_SQUARING)


@dataclass(frozen=True, eq=False)
class PenaltySchedule:
    """
    The polynomial penalty sequence p_k(x) = m g(x)^k / k for one problem.

    J_k = f + p_k is the k-th auxiliary cost. Penalty values may overflow to inf for
    points far outside the constraint set at large k; those are logged, not raised.
    """

    problem: Problem
    m: float
    _smoothness: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 0.0):
            raise ValidationError("m", f"penalty scaling must be finite and >= 0, got {self.m}")
        object.__setattr__(self, "m", float(self.m))

    @staticmethod
    def _check_k(k: int) -> None:
        if k < 1:
            raise ValidationError("k", f"penalty index must be >= 1, got {k}")

    def _flag(self, what: str, k: int, value: float) -> None:
        if not math.isfinite(value):
            logger.warning("%s_%d is not finite (%r); x is far outside the constraint set", what, k, value)

    def eval_p(self, k: int, x: ArrayLike) -> float:
        self._check_k(k)
        value = self.m * _pow(self.problem.eval_g(x), k) / k
        self._flag("p", k, value)
        return value

    def grad_p(self, k: int, x: ArrayLike) -> NDArray[np.float64]:
        self._check_k(k)
        # g^0 is 1 everywhere, including x = v.
        factor = self.m * _pow(self.problem.eval_g(x), k - 1)
        self._flag("grad p", k, factor)
        with np.errstate(over="ignore", invalid="ignore"):
            return factor * self.problem.grad_g(x)

    def eval_J(self, k: int, x: ArrayLike) -> float:
        return self.problem.eval_f(x) + self.eval_p(k, x)

    def grad_J(self, k: int, x: ArrayLike) -> NDArray[np.float64]:
        return self.problem.grad_f(x) + self.grad_p(k, x)

    def hess_J(self, k: int, x: ArrayLike) -> NDArray[np.float64]:
        """Exact Hessian Q + m((k-1) g^(k-2) grad g grad g^T + 2 g^(k-1) A)."""
        self._check_k(k)
        A = self.problem.constraint.A
        H = self.problem.cost.Q + 2.0 * self.m * _pow(self.problem.eval_g(x), k - 1) * A
        if k >= 2:
            dg = self.problem.grad_g(x)
            H = H + self.m * (k - 1) * _pow(self.problem.eval_g(x), k - 2) * np.outer(dg, dg)
        return H

    def smoothness_L(self, k: int) -> float:
        """L_k = sigma_max(Q + m(4k-2)A), the curvature bound of J_k inside the constraint set."""
        self._check_k(k)
        if k not in self._smoothness:
            M = self.problem.cost.Q + self.m * (4 * k - 2) * self.problem.constraint.A
            self._smoothness[k] = spectral_bounds(M).sigma_max
        return self._smoothness[k]

    def step_size(self, k: int, policy: StepPolicy | None = None) -> float:
        """
        gamma_k under the given policy (default 1/L_k).

        Raises:
          ValidationError: if a user gamma_k is outside (0, 1/L_k] or the sequence is too short.
        """
        L = self.smoothness_L(k)
        if L <= 0.0:
            raise ValidationError("m", "L_k is zero (Q = 0 and m = 0); no admissible step size")
        if policy is None or policy.kind is StepKind.RECIPROCAL_L:
            return 1.0 / L
        if k > len(policy.gammas):
            raise ValidationError("step_policy", f"no gamma_{k} given ({len(policy.gammas)} values)")
        gamma = policy.gammas[k - 1]
        if not (gamma > 0.0 and gamma <= (1.0 / L) * (1.0 + 1e-12)):
            raise ValidationError("step_policy", f"gamma_{k} = {gamma!r} is outside (0, 1/L_k = {1.0 / L!r}]")
        return gamma
